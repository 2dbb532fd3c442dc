"""Exception hierarchy shared by the library and the command line tool."""

# Standard Library Imports
from __future__ import annotations

EXIT_OK = 0
EXIT_CONFIG_ERROR = 2
EXIT_DATA_ERROR = 3
EXIT_NUMERIC_ERROR = 4


class SeqMTError(Exception):
    """Base class for all errors raised by this package."""

    exit_code = 1


class ConfigError(SeqMTError):
    """Invalid configuration keys, values or network layouts."""

    exit_code = EXIT_CONFIG_ERROR


class DataError(SeqMTError):
    """Missing, malformed or inconsistent data."""

    exit_code = EXIT_DATA_ERROR


class GenerationError(DataError):
    """A procedural generator could not satisfy its placement constraints."""


class ContainerError(DataError):
    """Base class for binary container decoding errors."""


class MagicMismatch(ContainerError):
    """The file does not start with the expected magic bytes.

    Args:
        expected (bytes): The expected magic.
        actual (bytes): The magic found in the file.
    """

    def __init__(self, expected: bytes, actual: bytes) -> None:
        self.expected = expected
        self.actual = actual
        super().__init__(f"bad magic: expected {expected!r}, got {actual!r}")

    def __reduce__(self) -> tuple:
        return type(self), (self.expected, self.actual)


class VersionMismatch(ContainerError):
    """The container version is not supported.

    Args:
        expected (int): The supported version.
        actual (int): The version found in the file.
    """

    def __init__(self, expected: int, actual: int) -> None:
        self.expected = expected
        self.actual = actual
        super().__init__(f"unsupported version: expected {expected}, got {actual}")

    def __reduce__(self) -> tuple:
        return type(self), (self.expected, self.actual)


class Truncation(ContainerError):
    """The payload is shorter than the header announces.

    Args:
        expected (int): Number of bytes the header requires.
        actual (int): Number of bytes available.
    """

    def __init__(self, expected: int, actual: int) -> None:
        self.expected = expected
        self.actual = actual
        super().__init__(
            f"truncated payload: expected {expected} bytes, got {actual} bytes"
        )

    def __reduce__(self) -> tuple:
        return type(self), (self.expected, self.actual)


class NumericError(SeqMTError):
    """Non-finite values or failed numerical checks."""

    exit_code = EXIT_NUMERIC_ERROR


class NaNLossError(NumericError):
    """Training produced a non-finite loss.

    Args:
        tensor_name (str): Name of the first non-finite tensor.
        epoch (int): The epoch the failure happened in.
        step (int): The optimizer step the failure happened in.
    """

    def __init__(self, tensor_name: str, epoch: int, step: int) -> None:
        self.tensor_name = tensor_name
        self.epoch = epoch
        self.step = step
        super().__init__(
            f"non-finite loss at epoch {epoch}, step {step}: "
            f"first non-finite tensor is '{tensor_name}'"
        )

    def __reduce__(self) -> tuple:
        return type(self), (self.tensor_name, self.epoch, self.step)


class GradientCheckError(NumericError):
    """Analytic and numeric gradients disagree."""


class SingularTransformError(NumericError):
    """An affine transform is not invertible."""


class ContractError(SeqMTError, ValueError):
    """An operation received inputs violating its contract."""

    exit_code = EXIT_DATA_ERROR
