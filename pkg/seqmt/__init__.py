"""Semi-supervised landmark localization."""

# Standard Library Imports
from importlib.metadata import PackageNotFoundError, version

try:
    __version__ = version("seqmt-landmarks")
except PackageNotFoundError:
    __version__ = "0.0.0"
