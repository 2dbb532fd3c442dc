"""Plain text report widgets printed by the command line tools."""

# Standard Library Imports
from __future__ import annotations

from typing import Any, Sequence


class ReportBase:
    """The base class for all report related classes."""

    def to_text(self) -> str:
        """Return the plain text representation of this instance.

        Returns:
            str: The plain text representation of this instance.
        """
        raise NotImplementedError("This needs to be implemented in the derived class")


class Text(ReportBase):
    """A line of free text."""

    def __init__(self, text: str) -> None:
        self.text = text

    def to_text(self) -> str:
        return self.text


def format_cell(value: Any, precision: int = 4) -> str:
    """Format a table cell; floats get a fixed precision and None a dash.

    Args:
        value (Any): The cell value.
        precision (int): Digits after the decimal point of floats.

    Returns:
        str: The cell text.
    """
    if value is None:
        return "-"
    if isinstance(value, float):
        return f"{value:.{precision}f}"
    return str(value)


class Table(ReportBase):
    """A left aligned text table.

    Args:
        columns (Sequence[str]): The column headers.
        rows (None | list[Sequence[Any]]): The rows. Default is None.
        precision (int): Digits after the decimal point of float cells.
    """

    def __init__(
        self,
        columns: Sequence[str],
        rows: None | list[Sequence[Any]] = None,
        precision: int = 4,
    ) -> None:
        self.columns = list(columns)
        self.rows = rows if rows else []
        self.precision = precision

    def add_row(self, *cells: Any) -> Table:
        """Append a row.

        Raises:
            ValueError: The row does not have one cell per column.

        Returns:
            Table: This table.
        """
        if len(cells) != len(self.columns):
            raise ValueError(
                f"row should have {len(self.columns)} cells, not {len(cells)}"
            )
        self.rows.append(cells)
        return self

    def to_text(self) -> str:
        """Render the table with a dashed rule under the header.

        Returns:
            str: The table.
        """
        body = [[format_cell(c, self.precision) for c in row] for row in self.rows]
        widths = [len(c) for c in self.columns]
        for row in body:
            widths = [max(w, len(c)) for w, c in zip(widths, row)]

        def line(cells: Sequence[str]) -> str:
            return "  ".join(c.ljust(w) for c, w in zip(cells, widths)).rstrip()

        text_buffer = [line(self.columns), line(["-" * w for w in widths])]
        text_buffer.extend(line(row) for row in body)
        return "\n".join(text_buffer)


class Report(ReportBase):
    """A headline followed by widgets, separated by blank lines."""

    def __init__(
        self,
        headline: str = "",
        widgets: None | list[Text | Table] = None,
    ) -> None:
        self.headline = headline
        self.widgets = widgets if widgets else []

    def to_text(self) -> str:
        """Render the report.

        Returns:
            str: The text that corresponds to this Report instance.
        """
        text_buffer = [self.headline, "=" * len(self.headline)]
        for widget in self.widgets:
            text_buffer.append(widget.to_text())
            text_buffer.append("")
        return "\n".join(text_buffer).rstrip("\n")
