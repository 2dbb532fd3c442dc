"""Seq-MT, Comm-MT and Heatmap-MT networks built from declarative layer lists.

Every network has a localization part and an attribute part:

* Seq-MT: a pooling-free conv stack ends in K heatmaps, a soft-argmax head
  turns them into K (x, y) pairs and the attribute branch only ever sees
  those 2K numbers.
* Heatmap-MT: the same conv stack; the attribute branch pools and convolves
  the K heatmaps, the landmarks come from a spatial softmax (trained with
  per-pixel cross-entropy, decoded by argmax) or from a soft-argmax head.
* Comm-MT: a shared conv/pool/FC trunk feeds a linear 2K landmark branch and
  the attribute branch.
"""

# Standard Library Imports
from __future__ import annotations

import copy
import logging
import math
from dataclasses import dataclass, field, replace
from typing import TYPE_CHECKING, Any, Iterator, Sequence

# Third-Party Imports
import numpy as np

# Local Imports
from seqmt import autodiff as ad
from seqmt.autodiff import Tensor
from seqmt.config import (
    Architecture,
    HeadKind,
    LayerKind,
    Padding,
    Scale,
    Task,
)
from seqmt.errors import ConfigError, ContractError, DataError

if TYPE_CHECKING:
    import sys
    from types import TracebackType

    if sys.version_info >= (3, 11):
        from typing import Self
    else:
        from typing_extensions import Self

    from seqmt.config import RunConfig

logger = logging.getLogger(__name__)

PARAMETRIC_KINDS = (LayerKind.Conv2d, LayerKind.FullyConnected)
HEAD_KINDS = (LayerKind.SoftArgmax, LayerKind.SpatialSoftmax)


@dataclass(frozen=True)
class LayerSpec:
    """One layer of a network config.

    Args:
        kind (LayerKind): The layer type.
        kernel_size (int): Kernel (conv) or window (pool) size.
        out (int): Output channels (conv) or units (fully connected).
        stride (int): Stride of conv and pool layers.
        padding (Padding): Conv padding mode.
        beta (float): Soft-argmax temperature, > 0.
        probability (float): Dropout probability.
    """

    kind: LayerKind
    kernel_size: int = 0
    out: int = 0
    stride: int = 1
    padding: Padding = Padding.Same
    beta: float = 1.0
    probability: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", LayerKind.to_layer_kind(self.kind))
        object.__setattr__(self, "padding", Padding.to_padding(self.padding))

    def describe(self) -> str:
        """Return a one-line description in the layer table notation."""
        if self.kind is LayerKind.Conv2d:
            return (
                f"Conv {self.kernel_size}x{self.kernel_size}x{self.out}, "
                f"stride {self.stride}, {self.padding}"
            )
        if self.kind is LayerKind.MaxPool2d:
            return f"Pool {self.kernel_size}x{self.kernel_size}, stride {self.stride}"
        if self.kind is LayerKind.FullyConnected:
            return f"FC #units={self.out}"
        if self.kind is LayerKind.Dropout:
            return f"dropout-prob={self.probability:g}"
        if self.kind is LayerKind.SoftArgmax:
            return f"soft-argmax(beta={self.beta:g})"
        return str(self.kind)


def conv(kernel_size: int, out: int, relu: bool = True) -> list[LayerSpec]:
    """Return a SAME stride 1 conv layer, optionally followed by a ReLU."""
    layers = [LayerSpec(LayerKind.Conv2d, kernel_size=kernel_size, out=out)]
    if relu:
        layers.append(LayerSpec(LayerKind.ReLU))
    return layers


def pool() -> list[LayerSpec]:
    """Return a 2x2 stride 2 max pooling layer."""
    return [LayerSpec(LayerKind.MaxPool2d, kernel_size=2, stride=2)]


def dense(out: int, relu: bool = True, dropout: float = 0.0) -> list[LayerSpec]:
    """Return a fully connected layer with optional ReLU and dropout."""
    layers = [LayerSpec(LayerKind.FullyConnected, out=out)]
    if relu:
        layers.append(LayerSpec(LayerKind.ReLU))
    if dropout:
        layers.append(LayerSpec(LayerKind.Dropout, probability=dropout))
    return layers


def head(kind: HeadKind, beta: float = 1.0) -> list[LayerSpec]:
    """Return the landmark readout layer."""
    if kind is HeadKind.SoftArgmax:
        return [LayerSpec(LayerKind.SoftArgmax, beta=beta)]
    return [LayerSpec(LayerKind.SpatialSoftmax)]


@dataclass
class NetworkConfig:
    """Declarative description of a multi-task network.

    For Seq-MT and Heatmap-MT ``localization`` is the conv stack producing the
    K heatmaps followed by a single head layer. For Comm-MT it is the shared
    trunk, and ``landmark_branch`` maps the trunk features to 2K coordinates.
    """

    name: str
    architecture: Architecture
    input_size: tuple[int, int, int]
    num_landmarks: int
    num_classes: int
    localization: list[LayerSpec]
    attribute: list[LayerSpec]
    landmark_branch: list[LayerSpec] = field(default_factory=list)
    task: Task = Task.Classification

    @property
    def head_layer(self) -> None | LayerSpec:
        """None | LayerSpec: The landmark readout layer, if any."""
        last = self.localization[-1] if self.localization else None
        return last if last is not None and last.kind in HEAD_KINDS else None

    @property
    def head(self) -> None | HeadKind:
        """None | HeadKind: The kind of landmark readout."""
        layer = self.head_layer
        if layer is None:
            return None
        return HeadKind.to_head_kind(str(layer.kind))

    @property
    def beta(self) -> float:
        """float: The soft-argmax temperature (1.0 without such a head)."""
        layer = self.head_layer
        return layer.beta if layer is not None else 1.0

    @property
    def num_outputs(self) -> int:
        """int: Width of the attribute output."""
        return self.num_classes if self.task is Task.Classification else 1

    def with_head(self, kind: HeadKind, beta: None | float = None) -> NetworkConfig:
        """Return a copy with the landmark readout replaced.

        Raises:
            ConfigError: The architecture has no heatmap head.
        """
        if self.head_layer is None:
            raise ConfigError(f"{self.name}: {self.architecture} has no heatmap head")
        if self.architecture is Architecture.SeqMT and kind is not HeadKind.SoftArgmax:
            raise ConfigError(
                f"{self.name}: seq-mt feeds the attribute branch through a "
                f"soft-argmax head, got head={kind}"
            )
        beta = self.beta if beta is None else beta
        return replace(self, localization=self.localization[:-1] + head(kind, beta))


def _seqmt_trunk(kernel_size: int, width: int, num_landmarks: int) -> list[LayerSpec]:
    layers = []
    for _ in range(6):
        layers += conv(kernel_size, width)
    return layers + conv(1, width) + conv(1, num_landmarks)


def default_config(
    name: str,
    scale: Scale = Scale.Full,
    num_landmarks: None | int = None,
    num_classes: None | int = None,
    image_size: None | int = None,
    task: Task = Task.Classification,
) -> NetworkConfig:
    """Return one of the shipped network configs.

    Args:
        name (str): One of ``shapes-seqmt``, ``blocks-seqmt``, ``blocks-commmt``
            and ``blocks-heatmapmt``.
        scale (Scale): ``small`` uses 8 maps per conv layer and 40x40 Blocks
            inputs.
        num_landmarks (None | int): Overrides K.
        num_classes (None | int): Overrides the class count.
        image_size (None | int): Overrides the input side.
        task (Task): Classification or regression attribute.

    Raises:
        ConfigError: Unknown config name.

    Returns:
        NetworkConfig: The config.
    """
    scale = Scale.to_scale(scale)
    small = scale is Scale.Small
    if name == "shapes-seqmt":
        k = num_landmarks or 2
        width = 8 if small else 16
        return NetworkConfig(
            name=name,
            architecture=Architecture.SeqMT,
            input_size=(image_size or 60, image_size or 60, 1),
            num_landmarks=k,
            num_classes=num_classes or 2,
            localization=_seqmt_trunk(7, width, k) + head(HeadKind.SoftArgmax),
            attribute=dense(40) + dense(num_classes or 2, relu=False),
            task=task,
        )
    if name not in DEFAULT_CONFIG_NAMES:
        raise ConfigError(
            f"unknown model '{name}', valid models are: {list(DEFAULT_CONFIG_NAMES)}"
        )
    k = num_landmarks or 5
    classes = num_classes or 15
    side = image_size or (40 if small else 60)
    common = {"name": name, "input_size": (side, side, 1), "num_landmarks": k,
              "num_classes": classes, "task": task}
    fc_head = dense(256, dropout=0.25) + dense(256, dropout=0.25)
    if name == "blocks-seqmt":
        return NetworkConfig(
            architecture=Architecture.SeqMT,
            localization=_seqmt_trunk(9, 8, k) + head(HeadKind.SoftArgmax),
            attribute=fc_head + dense(classes, relu=False),
            **common,
        )
    if name == "blocks-commmt":
        trunk = []
        for _ in range(5):
            trunk += conv(9, 8)
        trunk += pool() + conv(9, 8) + pool() + conv(1, 8) + conv(1, 8) + fc_head
        return NetworkConfig(
            architecture=Architecture.CommMT,
            localization=trunk,
            attribute=dense(classes, relu=False),
            landmark_branch=dense(2 * k, relu=False),
            **common,
        )
    attribute = []
    for _ in range(4):
        attribute += pool() + conv(9, 8)
    return NetworkConfig(
        architecture=Architecture.HeatmapMT,
        localization=_seqmt_trunk(9, 8, k) + head(HeadKind.SpatialSoftmax),
        attribute=attribute + fc_head + dense(classes, relu=False),
        **common,
    )


DEFAULT_CONFIG_NAMES = ("shapes-seqmt", "blocks-seqmt", "blocks-commmt", "blocks-heatmapmt")


def config_from_run(
    run_config: RunConfig,
    num_landmarks: None | int = None,
    num_classes: None | int = None,
    image_size: None | int = None,
) -> NetworkConfig:
    """Build the network config a run configuration asks for.

    Reads ``model``, ``scale``, ``task``, ``head`` and ``beta``.

    Returns:
        NetworkConfig: The config.
    """
    config = default_config(
        run_config.get("model", "blocks-seqmt"),
        scale=run_config.getenum("scale", Scale, Scale.Full),
        num_landmarks=num_landmarks,
        num_classes=num_classes,
        image_size=image_size,
        task=run_config.getenum("task", Task, "classification"),
    )
    if config.head_layer is not None:
        kind = config.head
        if "head" in run_config:
            kind = run_config.getenum("head", HeadKind)
        config = config.with_head(kind, run_config.getfloat("beta", config.beta))
    return config


@dataclass
class Prediction:
    """Outputs of a full forward pass.

    Attributes:
        heatmaps (None | Tensor): [N, K, H, W] maps before the head (None for
            Comm-MT).
        landmarks (Tensor): [N, K, 2] (x, y) coordinates.
        logits (Tensor): [N, outputs] attribute scores.
    """

    heatmaps: None | Tensor
    landmarks: Tensor
    logits: Tensor


@dataclass
class _Layer:
    spec: LayerSpec
    name: str
    weight: None | Tensor = None
    bias: None | Tensor = None


class EvalMode:
    """Context manager switching a network to eval mode and back.

    Args:
        network (Network): The network.
    """

    def __init__(self, network: Network) -> None:
        self.network = network
        self._was_training = network.training

    def __enter__(self) -> Self:
        """Enter the context."""
        self._was_training = self.network.training
        self.network.eval()
        return self

    def __exit__(
        self,
        exc_type: None | type[BaseException],
        exc_value: None | BaseException,
        tb: None | TracebackType,
    ) -> None:
        """Exit the context."""
        self.network.train(self._was_training)


class Network:
    """A built network: parameters, layer graph and train/eval mode.

    Args:
        config (NetworkConfig): The config.
        seed (int): Seed of the weight init and of the dropout masks.

    Raises:
        ConfigError: The config is inconsistent; the message names the layer.
    """

    def __init__(self, config: NetworkConfig, seed: int = 0) -> None:
        self.config = config
        self.seed = seed
        self.training = True
        self._init_rng = np.random.default_rng([seed, 0])
        self.dropout_rng = np.random.default_rng([seed, 1])
        self.params: dict[str, Tensor] = {}
        h, w, c = config.input_size
        self._check_head()
        self.localization, loc_shape = self._build_branch(
            "localization", config.localization, (c, h, w)
        )
        if config.architecture is Architecture.CommMT:
            self.landmark_branch, lm_shape = self._build_branch(
                "landmark_branch", config.landmark_branch, loc_shape
            )
            if lm_shape != (2 * config.num_landmarks,):
                raise ConfigError(
                    f"{config.name}: layer 'landmark_branch' should output "
                    f"{2 * config.num_landmarks} units, got {lm_shape}"
                )
            attr_input = loc_shape
        else:
            self.landmark_branch = []
            if loc_shape != (config.num_landmarks, h, w):
                raise ConfigError(
                    f"{config.name}: layer 'localization' should output "
                    f"{config.num_landmarks} maps of {h}x{w}, got {loc_shape}"
                )
            if config.architecture is Architecture.SeqMT:
                attr_input = (2 * config.num_landmarks,)
            else:
                attr_input = loc_shape
        self.attribute, attr_shape = self._build_branch(
            "attribute", config.attribute, attr_input
        )
        if attr_shape != (config.num_outputs,):
            raise ConfigError(
                f"{config.name}: layer 'attribute' should output "
                f"{config.num_outputs} units, got {attr_shape}"
            )

    def _check_head(self) -> None:
        config = self.config
        layer = config.head_layer
        if config.architecture is Architecture.CommMT:
            if layer is not None:
                raise ConfigError(f"{config.name}: comm-mt takes no heatmap head")
            return
        if layer is None:
            raise ConfigError(
                f"{config.name}: {config.architecture} needs a soft-argmax or "
                f"spatial-softmax layer at the end of 'localization'"
            )
        if config.architecture is Architecture.SeqMT and layer.kind is not LayerKind.SoftArgmax:
            raise ConfigError(f"{config.name}: seq-mt needs a soft-argmax head")
        if layer.beta <= 0:
            raise ConfigError(f"{config.name}: soft-argmax beta should be > 0, not {layer.beta}")

    def _glorot(self, shape: tuple[int, ...], fan_in: int, fan_out: int) -> np.ndarray:
        limit = math.sqrt(6.0 / (fan_in + fan_out))
        return self._init_rng.uniform(-limit, limit, size=shape)

    def _build_branch(
        self, branch: str, specs: Sequence[LayerSpec], shape: tuple[int, ...]
    ) -> tuple[list[_Layer], tuple[int, ...]]:
        layers = []
        for index, spec in enumerate(specs):
            name = f"{branch}.{index}"
            where = f"{self.config.name}: layer '{name}' ({spec.kind})"
            layer = _Layer(spec, name)
            if spec.kind is LayerKind.Conv2d:
                if len(shape) != 3:
                    raise ConfigError(f"{where} needs a [C, H, W] input, got {shape}")
                c, h, w = shape
                k = spec.kernel_size
                if k < 1 or spec.out < 1 or spec.stride < 1:
                    raise ConfigError(f"{where} needs positive kernel, outputs and stride")
                if spec.padding is Padding.Same:
                    h, w = -(-h // spec.stride), -(-w // spec.stride)
                else:
                    if k > h or k > w:
                        raise ConfigError(f"{where} kernel {k} exceeds input {h}x{w}")
                    h, w = (h - k) // spec.stride + 1, (w - k) // spec.stride + 1
                layer.weight = Tensor.parameter(
                    self._glorot((spec.out, c, k, k), c * k * k, spec.out * k * k),
                    name=f"{name}.weight",
                )
                layer.bias = Tensor.parameter(np.zeros(spec.out), name=f"{name}.bias")
                shape = (spec.out, h, w)
            elif spec.kind is LayerKind.FullyConnected:
                fan_in = int(np.prod(shape))
                if spec.out < 1:
                    raise ConfigError(f"{where} needs at least one unit")
                layer.weight = Tensor.parameter(
                    self._glorot((spec.out, fan_in), fan_in, spec.out),
                    name=f"{name}.weight",
                )
                layer.bias = Tensor.parameter(np.zeros(spec.out), name=f"{name}.bias")
                shape = (spec.out,)
            elif spec.kind is LayerKind.MaxPool2d:
                if len(shape) != 3 or spec.kernel_size > min(shape[1:]):
                    raise ConfigError(f"{where} cannot pool an input of shape {shape}")
                c, h, w = shape
                k, s = spec.kernel_size, spec.stride
                shape = (c, (h - k) // s + 1, (w - k) // s + 1)
            elif spec.kind is LayerKind.Dropout:
                if not 0.0 <= spec.probability < 1.0:
                    raise ConfigError(f"{where} probability should be in [0, 1)")
            elif spec.kind in HEAD_KINDS:
                if branch != "localization" or index != len(specs) - 1:
                    raise ConfigError(f"{where} is only allowed last in 'localization'")
                continue
            for tensor in (layer.weight, layer.bias):
                if tensor is not None:
                    self.params[tensor.name] = tensor
            layers.append(layer)
        return layers, shape

    # modes

    def train(self, mode: bool = True) -> Network:
        """Switch dropout on (or off with ``mode=False``)."""
        self.training = mode
        return self

    def eval(self) -> Network:
        """Switch dropout off."""
        return self.train(False)

    def eval_mode(self) -> EvalMode:
        """Return a context manager running the network in eval mode."""
        return EvalMode(self)

    # parameters

    def parameters(self) -> list[Tensor]:
        """Return all parameters in creation order."""
        return list(self.params.values())

    def named_parameters(self) -> Iterator[tuple[str, Tensor]]:
        """Iterate over (name, parameter) pairs."""
        yield from self.params.items()

    def weights(self) -> list[Tensor]:
        """Return the weight tensors (biases excluded)."""
        return [p for name, p in self.params.items() if name.endswith(".weight")]

    def branch_parameters(self, branch: str) -> list[Tensor]:
        """Return the parameters of one branch, e.g. ``attribute``."""
        return [p for name, p in self.params.items() if name.startswith(f"{branch}.")]

    def parameter_count(self) -> int:
        """Return the number of scalar parameters."""
        return sum(p.size for p in self.params.values())

    def zero_grad(self) -> None:
        """Drop the gradients of all parameters."""
        for p in self.params.values():
            p.zero_grad()

    def state_dict(self) -> dict[str, np.ndarray]:
        """Return copies of the parameter values by name."""
        return {name: p.values.copy() for name, p in self.params.items()}

    def load_state_dict(self, state: dict[str, np.ndarray]) -> None:
        """Overwrite the parameter values.

        Raises:
            DataError: Names or shapes do not match this network.
        """
        missing = sorted(set(self.params) - set(state))
        unexpected = sorted(set(state) - set(self.params))
        if missing or unexpected:
            raise DataError(
                f"checkpoint does not match network '{self.config.name}': "
                f"missing {missing}, unexpected {unexpected}"
            )
        for name, values in state.items():
            p = self.params[name]
            if values.shape != p.shape:
                raise DataError(
                    f"checkpoint tensor '{name}' has shape {values.shape}, "
                    f"network expects {p.shape}"
                )
            p.values[...] = values

    def clone(self) -> Network:
        """Return an independent copy with the same parameters and mode."""
        other = copy.deepcopy(self)
        for p in other.params.values():
            p.grad = None
        return other

    # forward

    def _run(self, layers: Sequence[_Layer], x: Tensor) -> Tensor:
        for layer in layers:
            spec = layer.spec
            if spec.kind is LayerKind.Conv2d:
                x = ad.conv2d(x, layer.weight, layer.bias, spec.stride, spec.padding)
            elif spec.kind is LayerKind.FullyConnected:
                if x.ndim != 2:
                    x = ad.reshape(x, (x.shape[0], -1))
                x = ad.fully_connected(x, layer.weight, layer.bias)
            elif spec.kind is LayerKind.ReLU:
                x = ad.relu(x)
            elif spec.kind is LayerKind.MaxPool2d:
                x = ad.maxpool2d(x, spec.kernel_size, spec.stride)
            elif spec.kind is LayerKind.Dropout:
                x = ad.dropout(x, spec.probability, self.dropout_rng, self.training)
        return x

    def _check_images(self, images: Any) -> Tensor:
        images = ad.as_tensor(images)
        h, w, c = self.config.input_size
        if images.ndim != 4 or images.shape[1:] != (c, h, w):
            raise ContractError(
                f"{self.config.name} expects images of shape [N, {c}, {h}, {w}], "
                f"got {images.shape}"
            )
        return images

    def heatmaps(self, images: Any) -> Tensor:
        """Return the [N, K, H, W] maps before the head.

        Raises:
            ContractError: Comm-MT has no heatmaps, or the images do not fit.
        """
        if self.config.architecture is Architecture.CommMT:
            raise ContractError("comm-mt does not produce heatmaps")
        return self._run(self.localization, self._check_images(images))

    def decode(self, heatmaps: Tensor) -> Tensor:
        """Turn heatmaps into [N, K, 2] coordinates with the configured head.

        A soft-argmax head is differentiable; a spatial-softmax head decodes
        by argmax into integer coordinates and is not.
        """
        layer = self.config.head_layer
        if layer.kind is LayerKind.SoftArgmax:
            return ad.soft_argmax(heatmaps, layer.beta)
        n, k, h, w = heatmaps.shape
        flat = heatmaps.values.reshape(n, k, h * w).argmax(axis=-1)
        rows, cols = np.divmod(flat, w)
        return Tensor(np.stack([cols, rows], axis=-1).astype(np.float64), op="argmax")

    def forward_landmarks(self, images: Any) -> tuple[None | Tensor, Tensor]:
        """Run only the localization part.

        Args:
            images (Any): [N, C, H, W] images.

        Returns:
            tuple[None | Tensor, Tensor]: The heatmaps (None for Comm-MT) and
                the [N, K, 2] landmarks.
        """
        images = self._check_images(images)
        features = self._run(self.localization, images)
        if self.config.architecture is Architecture.CommMT:
            coords = self._run(self.landmark_branch, features)
            return None, ad.reshape(coords, (coords.shape[0], self.config.num_landmarks, 2))
        return features, self.decode(features)

    def forward_attributes(self, inputs: Any) -> Tensor:
        """Run the attribute branch on what the architecture feeds it.

        Args:
            inputs (Any): [N, K, 2] landmarks for Seq-MT, [N, K, H, W]
                heatmaps for Heatmap-MT, [N, F] trunk features for Comm-MT.

        Raises:
            ContractError: The input is not what the architecture consumes.

        Returns:
            Tensor: The [N, outputs] attribute scores.
        """
        inputs = ad.as_tensor(inputs)
        config = self.config
        h, w, _ = config.input_size
        k = config.num_landmarks
        if config.architecture is Architecture.SeqMT:
            if inputs.shape[1:] != (k, 2):
                raise ContractError(
                    f"seq-mt attributes take [N, {k}, 2] landmarks, got {inputs.shape}"
                )
            inputs = ad.reshape(inputs, (inputs.shape[0], 2 * k))
        elif config.architecture is Architecture.HeatmapMT:
            if inputs.shape[1:] != (k, h, w):
                raise ContractError(
                    f"heatmap-mt attributes take [N, {k}, {h}, {w}] heatmaps, "
                    f"got {inputs.shape}"
                )
        else:
            width = self.attribute[0].weight.shape[1]
            if inputs.shape[1:] != (width,):
                raise ContractError(
                    f"comm-mt attributes take [N, {width}] features, got {inputs.shape}"
                )
        return self._run(self.attribute, inputs)

    def forward(self, images: Any) -> Prediction:
        """Run the whole network.

        Returns:
            Prediction: Heatmaps, landmarks and attribute scores.
        """
        images = self._check_images(images)
        features = self._run(self.localization, images)
        if self.config.architecture is Architecture.CommMT:
            coords = self._run(self.landmark_branch, features)
            landmarks = ad.reshape(
                coords, (coords.shape[0], self.config.num_landmarks, 2)
            )
            return Prediction(None, landmarks, self._run(self.attribute, features))
        landmarks = self.decode(features)
        if self.config.architecture is Architecture.SeqMT:
            logits = self.forward_attributes(landmarks)
        else:
            logits = self.forward_attributes(features)
        return Prediction(features, landmarks, logits)

    __call__ = forward

    def summary(self) -> list[str]:
        """Return one line per layer of every branch."""
        lines = []
        for branch in ("localization", "landmark_branch", "attribute"):
            for index, spec in enumerate(getattr(self.config, branch)):
                lines.append(f"{branch}.{index}: {spec.describe()}")
        return lines


def build(config: NetworkConfig, seed: int = 0) -> Network:
    """Build a network with Glorot-uniform weights and zero biases.

    Args:
        config (NetworkConfig): The config.
        seed (int): The seed.

    Raises:
        ConfigError: The config is inconsistent.

    Returns:
        Network: The network in train mode.
    """
    network = Network(config, seed)
    logger.debug(
        "built %s with %d parameters", config.name, network.parameter_count()
    )
    return network
