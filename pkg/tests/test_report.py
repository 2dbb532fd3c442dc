"""Tests for the report widgets."""

# Third-Party Imports
import pytest

# Local Imports
from seqmt.report import Report, ReportBase, Table, Text, format_cell


def test_base_class_needs_an_implementation():
    """ReportBase.to_text() is abstract."""
    with pytest.raises(NotImplementedError) as cm:
        ReportBase().to_text()
    assert str(cm.value) == "This needs to be implemented in the derived class"


@pytest.mark.parametrize(
    "value,precision,expected",
    [
        (None, 4, "-"),
        (1.5, 4, "1.5000"),
        (2.0 / 3.0, 2, "0.67"),
        (7, 4, "7"),
        ("L+ELT", 4, "L+ELT"),
    ],
)
def test_format_cell(value, precision, expected):
    assert format_cell(value, precision) == expected


def test_table_to_text():
    """Columns are left aligned to the widest cell."""
    table = Table(["a", "value"]).add_row("x", 1.5).add_row("long", None)
    assert table.to_text() == (
        "a     value\n"
        "----  ------\n"
        "x     1.5000\n"
        "long  -"
    )


def test_table_row_length_is_checked():
    """A row needs one cell per column."""
    with pytest.raises(ValueError) as cm:
        Table(["a", "b"]).add_row(1)
    assert str(cm.value) == "row should have 2 cells, not 1"


@pytest.mark.parametrize(
    "headline,widgets,expected",
    [
        ("Title", None, "Title\n====="),
        ("Title", [Text("hi")], "Title\n=====\nhi"),
        (
            "AMI",
            [Text("one"), Table(["k"]).add_row(0)],
            "AMI\n===\none\n\nk\n-\n0",
        ),
    ],
)
def test_report_to_text(headline, widgets, expected):
    assert Report(headline, widgets).to_text() == expected
