"""Run configuration files and the enumerations they are made of.

A run configuration is a flat ``key = value`` text file with ``#`` comments::

    # Blocks, 5% labelled landmarks
    model = blocks-seqmt
    regime = L+ELT+A
    fraction = 0.05
    seed = 0
"""

# Standard Library Imports
from __future__ import annotations

import configparser
import enum
import logging
from pathlib import Path
from typing import Any, Callable

# Local Imports
from seqmt.errors import ConfigError, DataError

logger = logging.getLogger(__name__)

SECTION = "run"

VALID_KEYS = (
    "adam_beta1",
    "adam_beta2",
    "adam_eps",
    "alpha",
    "batch_size",
    "beta",
    "blocks_landmark_subset",
    "dataset",
    "debug",
    "elt_on_labeled",
    "elt_rotation_deg",
    "elt_scale_hi",
    "elt_scale_lo",
    "elt_stop_gradient",
    "elt_transforms_per_image",
    "elt_translate_frac",
    "epochs",
    "eval_every",
    "fraction",
    "gamma",
    "grid_fractions",
    "grid_regimes",
    "grid_seeds",
    "head",
    "lambda",
    "lr",
    "model",
    "patience",
    "regime",
    "scale",
    "seed",
    "task",
)

_MISSING = object()


def _spellings(cls: type[enum.Enum]) -> list[str]:
    return list(dict.fromkeys([e.name for e in cls] + [e.value for e in cls]))


def _to_enum(cls: type[enum.Enum], value: Any, kind: str) -> enum.Enum:
    """Convert the given value to a member of the given enum.

    Args:
        cls (type[enum.Enum]): The enum class.
        value (Any): An enum member, or the name or value of one.
        kind (str): The name used for the value in error messages.

    Raises:
        TypeError: Input value type is invalid.
        ValueError: Input value is invalid.

    Returns:
        enum.Enum: The enum member.
    """
    valid = _spellings(cls)
    if not isinstance(value, (str, cls)):
        raise TypeError(
            f"{kind} should be a {cls.__name__} enum value or one of {valid}, "
            f"not {value.__class__.__name__}: '{value}'"
        )
    if isinstance(value, str):
        name_lut = {e.name.lower(): e.name for e in cls}
        name_lut.update({e.value.lower(): e.name for e in cls})
        lower_case = value.strip().lower()
        if lower_case not in name_lut:
            raise ValueError(
                f"{kind} should be a {cls.__name__} enum value or one of {valid}, "
                f"not '{value}'"
            )
        return cls.__members__[name_lut[lower_case]]
    return value


class _ValueEnum(enum.Enum):
    def __str__(self) -> str:
        """Return the string representation.

        Returns:
            str: The enum value.
        """
        return str(self.value)


class Regime(_ValueEnum):
    """Which terms of the composite objective a run optimises."""

    L = "L"
    LA = "L+A"
    LELT = "L+ELT"
    LELTA = "L+ELT+A"
    A = "A"

    @classmethod
    def to_regime(cls, regime: str | Regime) -> Regime:
        """Convert the given value to a Regime enum.

        Args:
            regime (str | Regime): The value to convert.

        Raises:
            TypeError: Input value type is invalid.
            ValueError: Input value is invalid.

        Returns:
            Regime: The enum.
        """
        return _to_enum(cls, regime, "regime")

    @property
    def uses_attributes(self) -> bool:
        """bool: True if the attribute term is part of the objective."""
        return self in (Regime.LA, Regime.LELTA, Regime.A)

    @property
    def uses_elt(self) -> bool:
        """bool: True if the equivariance term is part of the objective."""
        return self in (Regime.LELT, Regime.LELTA)

    @property
    def uses_landmarks(self) -> bool:
        """bool: True if supervised landmarks are part of the objective."""
        return self is not Regime.A


class Architecture(_ValueEnum):
    """The multi-task network families."""

    SeqMT = "seq-mt"
    CommMT = "comm-mt"
    HeatmapMT = "heatmap-mt"

    @classmethod
    def to_architecture(cls, architecture: str | Architecture) -> Architecture:
        """Convert the given value to an Architecture enum.

        Args:
            architecture (str | Architecture): The value to convert.

        Returns:
            Architecture: The enum.
        """
        return _to_enum(cls, architecture, "architecture")


class HeadKind(_ValueEnum):
    """How landmark coordinates are read out of the heatmaps."""

    SoftArgmax = "soft-argmax"
    SpatialSoftmax = "spatial-softmax"

    @classmethod
    def to_head_kind(cls, head: str | HeadKind) -> HeadKind:
        """Convert the given value to a HeadKind enum.

        Args:
            head (str | HeadKind): The value to convert.

        Returns:
            HeadKind: The enum.
        """
        return _to_enum(cls, head, "head")


class Padding(_ValueEnum):
    """Convolution padding modes."""

    Same = "SAME"
    Valid = "VALID"

    @classmethod
    def to_padding(cls, padding: str | Padding) -> Padding:
        """Convert the given value to a Padding enum.

        Args:
            padding (str | Padding): The value to convert.

        Returns:
            Padding: The enum.
        """
        return _to_enum(cls, padding, "padding")


class LayerKind(_ValueEnum):
    """The layer types a network config is built from."""

    Conv2d = "conv2d"
    ReLU = "relu"
    MaxPool2d = "maxpool2d"
    FullyConnected = "fully-connected"
    SpatialSoftmax = "spatial-softmax"
    SoftArgmax = "soft-argmax"
    Dropout = "dropout"

    @classmethod
    def to_layer_kind(cls, kind: str | LayerKind) -> LayerKind:
        """Convert the given value to a LayerKind enum.

        Args:
            kind (str | LayerKind): The value to convert.

        Returns:
            LayerKind: The enum.
        """
        return _to_enum(cls, kind, "layer kind")


class StopGradient(_ValueEnum):
    """Which side of the equivariance residual is treated as a constant."""

    NoStop = "none"
    Warped = "warped"
    Original = "original"

    @classmethod
    def to_stop_gradient(cls, stop: str | StopGradient) -> StopGradient:
        """Convert the given value to a StopGradient enum.

        Args:
            stop (str | StopGradient): The value to convert.

        Returns:
            StopGradient: The enum.
        """
        return _to_enum(cls, stop, "elt_stop_gradient")


class Task(_ValueEnum):
    """Attribute task type."""

    Classification = "classification"
    Regression = "regression"

    @classmethod
    def to_task(cls, task: str | Task) -> Task:
        """Convert the given value to a Task enum.

        Args:
            task (str | Task): The value to convert.

        Returns:
            Task: The enum.
        """
        return _to_enum(cls, task, "task")


class Scale(_ValueEnum):
    """Experiment size profile."""

    Full = "full"
    Small = "small"

    @classmethod
    def to_scale(cls, scale: str | Scale) -> Scale:
        """Convert the given value to a Scale enum.

        Args:
            scale (str | Scale): The value to convert.

        Returns:
            Scale: The enum.
        """
        return _to_enum(cls, scale, "scale")


class RunConfig:
    """Typed access to a flat ``key = value`` run configuration.

    Args:
        values (None | dict[str, str]): The raw key/value pairs.
        source (str): Where the values came from, used in error messages.
    """

    def __init__(
        self, values: None | dict[str, str] = None, source: str = "<memory>"
    ) -> None:
        self.source = source
        self._values: dict[str, str] = {}
        for key, value in (values or {}).items():
            self._values[key.strip().lower()] = str(value).strip()
        unknown = sorted(set(self._values) - set(VALID_KEYS))
        if unknown:
            raise ConfigError(
                f"{source}: unknown config key(s) {unknown}, "
                f"valid keys are: {list(VALID_KEYS)}"
            )

    @classmethod
    def from_string(cls, text: str, source: str = "<string>") -> RunConfig:
        """Parse the given configuration text.

        Args:
            text (str): The configuration text.
            source (str): Where the text came from.

        Raises:
            ConfigError: The text is not a valid configuration.

        Returns:
            RunConfig: The parsed configuration.
        """
        parser = configparser.ConfigParser(
            interpolation=None,
            delimiters=("=",),
            comment_prefixes=("#",),
            inline_comment_prefixes=("#",),
        )
        try:
            parser.read_string(f"[{SECTION}]\n{text}", source=source)
        except configparser.Error as e:
            raise ConfigError(f"{source}: {e}") from e
        return cls(dict(parser[SECTION].items()), source=source)

    @classmethod
    def from_file(cls, path: str | Path) -> RunConfig:
        """Read the configuration file at the given path.

        Args:
            path (str | Path): The file path.

        Raises:
            DataError: The file does not exist.

        Returns:
            RunConfig: The parsed configuration.
        """
        path = Path(path)
        if not path.is_file():
            raise DataError(f"config file not found: {path}")
        return cls.from_string(path.read_text(encoding="utf-8"), source=str(path))

    def __contains__(self, key: str) -> bool:
        return key in self._values

    def set(self, key: str, value: Any) -> None:
        """Set the given key.

        Args:
            key (str): The config key.
            value (Any): The value, stored in its string form.

        Raises:
            ConfigError: The key is not a valid config key.
        """
        if key not in VALID_KEYS:
            raise ConfigError(
                f"{self.source}: unknown config key(s) {[key]}, "
                f"valid keys are: {list(VALID_KEYS)}"
            )
        if isinstance(value, (list, tuple)):
            value = ",".join(str(v) for v in value)
        self._values[key] = str(value)

    def _get(self, key: str, default: Any, parse: Callable, type_name: str) -> Any:
        if key not in VALID_KEYS:
            raise ConfigError(f"{self.source}: '{key}' is not a valid config key")
        if key not in self._values:
            if default is _MISSING:
                raise ConfigError(f"{self.source}: missing required key '{key}'")
            return default
        raw = self._values[key]
        try:
            return parse(raw)
        except (TypeError, ValueError) as e:
            raise ConfigError(
                f"{self.source}: config key '{key}' should be {type_name}, "
                f"not '{raw}'"
            ) from e

    def get(self, key: str, default: Any = _MISSING) -> str:
        """Return the raw string value of the given key.

        Args:
            key (str): The config key.
            default (Any): Returned when the key is absent.

        Returns:
            str: The value.
        """
        return self._get(key, default, str, "a string")

    def getint(self, key: str, default: Any = _MISSING) -> int:
        """Return the given key as an int.

        Args:
            key (str): The config key.
            default (Any): Returned when the key is absent.

        Returns:
            int: The value.
        """
        return self._get(key, default, int, "an int")

    def getfloat(self, key: str, default: Any = _MISSING) -> float:
        """Return the given key as a float.

        Args:
            key (str): The config key.
            default (Any): Returned when the key is absent.

        Returns:
            float: The value.
        """
        return self._get(key, default, float, "a float")

    def getboolean(self, key: str, default: Any = _MISSING) -> bool:
        """Return the given key as a bool.

        Args:
            key (str): The config key.
            default (Any): Returned when the key is absent.

        Returns:
            bool: The value.
        """

        def parse(raw: str) -> bool:
            lowered = raw.lower()
            if lowered in ("1", "yes", "true", "on"):
                return True
            if lowered in ("0", "no", "false", "off"):
                return False
            raise ValueError(raw)

        return self._get(key, default, parse, "a boolean")

    def getlist(self, key: str, default: Any = _MISSING) -> list[str]:
        """Return the given key as a comma separated list of strings.

        Args:
            key (str): The config key.
            default (Any): Returned when the key is absent.

        Returns:
            list[str]: The values.
        """
        return self._get(
            key,
            default,
            lambda raw: [v.strip() for v in raw.split(",") if v.strip()],
            "a list",
        )

    def getintlist(self, key: str, default: Any = _MISSING) -> list[int]:
        """Return the given key as a comma separated list of ints.

        Args:
            key (str): The config key.
            default (Any): Returned when the key is absent.

        Returns:
            list[int]: The values.
        """
        return self._get(
            key,
            default,
            lambda raw: [int(v) for v in raw.split(",") if v.strip()],
            "a list of ints",
        )

    def getfloatlist(self, key: str, default: Any = _MISSING) -> list[float]:
        """Return the given key as a comma separated list of floats.

        Args:
            key (str): The config key.
            default (Any): Returned when the key is absent.

        Returns:
            list[float]: The values.
        """
        return self._get(
            key,
            default,
            lambda raw: [float(v) for v in raw.split(",") if v.strip()],
            "a list of floats",
        )

    def getenum(
        self, key: str, enum_cls: type[enum.Enum], default: Any = _MISSING
    ) -> enum.Enum:
        """Return the given key as a member of the given enum.

        Names and values are accepted case-insensitively.

        Args:
            key (str): The config key.
            enum_cls (type[enum.Enum]): The enum class.
            default (Any): Returned, converted, when the key is absent.

        Raises:
            ConfigError: The value names no member of the enum.

        Returns:
            enum.Enum: The enum member.
        """
        value = self._get(
            key,
            default,
            lambda raw: _to_enum(enum_cls, raw, key),
            f"one of {_spellings(enum_cls)}",
        )
        return _to_enum(enum_cls, value, key)

    def getenumlist(
        self, key: str, enum_cls: type[enum.Enum], default: Any = _MISSING
    ) -> list[enum.Enum]:
        """Return the given key as a comma separated list of enum members.

        Args:
            key (str): The config key.
            enum_cls (type[enum.Enum]): The enum class.
            default (Any): Returned, converted, when the key is absent.

        Raises:
            ConfigError: A value names no member of the enum.

        Returns:
            list[enum.Enum]: The enum members.
        """
        values = self._get(
            key,
            default,
            lambda raw: [
                _to_enum(enum_cls, v, key) for v in raw.split(",") if v.strip()
            ],
            f"a list of {_spellings(enum_cls)}",
        )
        return [_to_enum(enum_cls, v, key) for v in values]

    def snapshot(self) -> dict[str, str]:
        """Return a copy of the raw key/value pairs.

        Returns:
            dict[str, str]: The raw values, sorted by key.
        """
        return dict(sorted(self._values.items()))

    def to_text(self) -> str:
        """Render the configuration in its file format.

        Returns:
            str: One ``key = value`` line per key, sorted by key.
        """
        return "".join(f"{k} = {v}\n" for k, v in self.snapshot().items())
