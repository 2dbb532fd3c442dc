"""Central finite-difference checks of the analytic gradients."""

# Standard Library Imports
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, Sequence

# Third-Party Imports
import numpy as np

# Local Imports
from seqmt import autodiff as ad
from seqmt.autodiff import Tensor
from seqmt.config import Architecture, HeadKind, Padding
from seqmt.errors import ContractError, GradientCheckError, NumericError
from seqmt.geometry import TransformSampler
from seqmt.losses import Batch, LossWeights, composite
from seqmt.models import NetworkConfig, build, conv, dense, head

logger = logging.getLogger(__name__)

DEFAULT_TOLERANCE = 1e-4
EPS_RANGE = (1e-7, 1e-3)
# differences this small are below the float64 noise of the perturbed evaluations
ABSOLUTE_TOLERANCE = 1e-6

GraphBuilder = Callable[[], Tensor]


@dataclass
class GradCheckResult:
    """Outcome of one gradient check.

    Attributes:
        name (str): What was checked.
        max_error (float): Largest relative error over the sampled coordinates.
        worst_parameter (str): Parameter holding the worst coordinate.
        worst_index (tuple[int, ...]): The worst coordinate.
        analytic (float): Analytic derivative at the worst coordinate.
        numeric (float): Numeric derivative at the worst coordinate.
        coordinates (int): Number of coordinates checked.
    """

    name: str
    max_error: float
    worst_parameter: str
    worst_index: tuple[int, ...]
    analytic: float
    numeric: float
    coordinates: int

    def passed(self, tolerance: float = DEFAULT_TOLERANCE) -> bool:
        """Return True if the worst error is within the tolerance."""
        return self.max_error <= tolerance

    def describe(self) -> str:
        """Return a one-line summary naming the worst coordinate."""
        return (
            f"{self.name}: max relative error {self.max_error:.3e} at "
            f"{self.worst_parameter}{list(self.worst_index)} "
            f"(analytic {self.analytic:.6g}, numeric {self.numeric:.6g}, "
            f"{self.coordinates} coordinates)"
        )


def _evaluate(f: GraphBuilder) -> float:
    value = f().item()
    if not np.isfinite(value):
        raise NumericError(f"finite difference evaluation produced a non-finite value: {value}")
    return value


def check_gradients(
    f: GraphBuilder,
    params: Sequence[Tensor],
    eps: float = 1e-6,
    max_coordinates: int = 16,
    seed: int = 0,
    name: str = "graph",
    atol: float = 0.0,
) -> GradCheckResult:
    """Compare ``backward()`` with central differences on sampled coordinates.

    The relative error of a coordinate is
    ``|analytic - numeric| / max(1e-8, |analytic| + |numeric|)``; coordinates
    whose absolute difference is at most ``atol`` count as exact.

    Args:
        f (GraphBuilder): Builds the scalar graph from the current parameter
            values. It must be deterministic.
        params (Sequence[Tensor]): The parameters to perturb.
        eps (float): Step, in [1e-7, 1e-3].
        max_coordinates (int): Coordinates sampled per parameter.
        seed (int): Seed of the coordinate sampling.
        name (str): Name used in the result.
        atol (float): Absolute agreement threshold.

    Raises:
        ContractError: eps is out of range.
        NumericError: f is not finite.

    Returns:
        GradCheckResult: The worst coordinate.
    """
    if not EPS_RANGE[0] <= eps <= EPS_RANGE[1]:
        raise ContractError(f"eps should be in {list(EPS_RANGE)}, not {eps}")
    rng = np.random.default_rng(seed)
    for p in params:
        p.zero_grad()
    loss = f()
    if not np.isfinite(loss.values).all():
        raise NumericError(f"{name}: the checked function is not finite")
    ad.backward(loss)
    analytic = [np.zeros(p.shape) if p.grad is None else p.grad.copy() for p in params]

    worst = GradCheckResult(name, 0.0, "", (), 0.0, 0.0, 0)
    count = 0
    for p_index, p in enumerate(params):
        flat = p.values.reshape(-1)
        if flat.size <= max_coordinates:
            picks = np.arange(flat.size)
        else:
            picks = rng.choice(flat.size, size=max_coordinates, replace=False)
        for pick in picks:
            original = flat[pick]
            flat[pick] = original + eps
            plus = _evaluate(f)
            flat[pick] = original - eps
            minus = _evaluate(f)
            flat[pick] = original
            numeric = (plus - minus) / (2.0 * eps)
            exact = analytic[p_index].reshape(-1)[pick]
            difference = abs(exact - numeric)
            error = 0.0 if difference <= atol else difference / max(
                1e-8, abs(exact) + abs(numeric)
            )
            count += 1
            if error >= worst.max_error:
                worst = GradCheckResult(
                    name,
                    float(error),
                    p.name or f"param{p_index}",
                    tuple(int(i) for i in np.unravel_index(pick, p.shape)),
                    float(exact),
                    float(numeric),
                    0,
                )
    worst.coordinates = count
    return worst


def finite_diff_check(
    f: GraphBuilder, params: Sequence[Tensor], eps: float = 1e-6, **kwargs
) -> float:
    """Return the max relative gradient error. See :func:`check_gradients`."""
    return check_gradients(f, params, eps=eps, **kwargs).max_error


def _param(rng: np.random.Generator, *shape: int, name: str) -> Tensor:
    return Tensor.parameter(rng.normal(size=shape), name=name)


def _projection(rng: np.random.Generator, shape: tuple[int, ...]) -> np.ndarray:
    return rng.normal(size=shape)


def _check_conv_same(rng: np.random.Generator) -> tuple[GraphBuilder, list[Tensor]]:
    x = _param(rng, 2, 3, 6, 6, name="x")
    w = _param(rng, 4, 3, 3, 3, name="w")
    b = _param(rng, 4, name="b")
    r = _projection(rng, (2, 4, 6, 6))
    return lambda: ad.tensor_sum(ad.conv2d(x, w, b, 1, Padding.Same) * r), [x, w, b]


def _check_conv_valid_strided(rng: np.random.Generator) -> tuple[GraphBuilder, list[Tensor]]:
    x = _param(rng, 2, 2, 7, 7, name="x")
    w = _param(rng, 3, 2, 3, 3, name="w")
    b = _param(rng, 3, name="b")
    r = _projection(rng, (2, 3, 3, 3))
    return lambda: ad.tensor_sum(ad.conv2d(x, w, b, 2, Padding.Valid) * r), [x, w, b]


def _check_relu(rng: np.random.Generator) -> tuple[GraphBuilder, list[Tensor]]:
    x = _param(rng, 3, 5, name="x")
    r = _projection(rng, (3, 5))
    return lambda: ad.tensor_sum(ad.relu(x) * r), [x]


def _check_maxpool(rng: np.random.Generator) -> tuple[GraphBuilder, list[Tensor]]:
    x = _param(rng, 2, 2, 6, 6, name="x")
    r = _projection(rng, (2, 2, 3, 3))
    return lambda: ad.tensor_sum(ad.maxpool2d(x, 2, 2) * r), [x]


def _check_fully_connected(rng: np.random.Generator) -> tuple[GraphBuilder, list[Tensor]]:
    x = _param(rng, 4, 6, name="x")
    w = _param(rng, 3, 6, name="w")
    b = _param(rng, 3, name="b")
    r = _projection(rng, (4, 3))
    return lambda: ad.tensor_sum(ad.fully_connected(x, w, b) * r), [x, w, b]


def _check_dropout(rng: np.random.Generator) -> tuple[GraphBuilder, list[Tensor]]:
    x = _param(rng, 4, 6, name="x")
    r = _projection(rng, (4, 6))
    return (
        lambda: ad.tensor_sum(ad.dropout(x, 0.25, np.random.default_rng(7), True) * r),
        [x],
    )


def _check_spatial_softmax(rng: np.random.Generator) -> tuple[GraphBuilder, list[Tensor]]:
    m = _param(rng, 2, 2, 4, 5, name="m")
    r = _projection(rng, (2, 2, 4, 5))
    return lambda: ad.tensor_sum(ad.spatial_softmax(m) * r), [m]


def _check_soft_argmax(rng: np.random.Generator) -> tuple[GraphBuilder, list[Tensor]]:
    m = _param(rng, 1, 2, 6, 6, name="m")
    target = rng.uniform(0.0, 5.0, size=(1, 2, 2))

    def f() -> Tensor:
        residual = ad.soft_argmax(m, 1.5) - target
        return ad.tensor_sum(residual * residual)

    return f, [m]


def _check_softmax_cross_entropy(rng: np.random.Generator) -> tuple[GraphBuilder, list[Tensor]]:
    z = _param(rng, 5, 4, name="z")
    labels = rng.integers(0, 4, size=5)
    return lambda: ad.softmax_cross_entropy(z, labels), [z]


def _check_transform_coords(rng: np.random.Generator) -> tuple[GraphBuilder, list[Tensor]]:
    points = _param(rng, 3, 2, 2, name="points")
    matrices = rng.normal(size=(3, 2, 3))
    r = _projection(rng, (3, 2, 2))
    return lambda: ad.tensor_sum(ad.transform_coords(points, matrices) * r), [points]


def _check_arithmetic(rng: np.random.Generator) -> tuple[GraphBuilder, list[Tensor]]:
    a = _param(rng, 3, 4, name="a")
    b = Tensor.parameter(rng.uniform(0.5, 2.0, size=(1, 4)), name="b")
    c = _param(rng, 4, 2, name="c")

    def f() -> Tensor:
        mixed = (a * b - a / b + b**3) @ c
        picked = ad.take(ad.absolute(mixed), np.array([0, 2, 2]))
        return ad.mean(ad.reshape(picked, (6,)))

    return f, [a, b, c]


OP_CHECKS: dict[str, Callable[[np.random.Generator], tuple[GraphBuilder, list[Tensor]]]] = {
    "conv2d (SAME)": _check_conv_same,
    "conv2d (VALID, stride 2)": _check_conv_valid_strided,
    "relu": _check_relu,
    "maxpool2d": _check_maxpool,
    "fully_connected": _check_fully_connected,
    "dropout": _check_dropout,
    "spatial_softmax": _check_spatial_softmax,
    "soft_argmax": _check_soft_argmax,
    "softmax_cross_entropy": _check_softmax_cross_entropy,
    "transform_coords": _check_transform_coords,
    "arithmetic": _check_arithmetic,
}


def toy_seqmt_config(image_size: int = 12) -> NetworkConfig:
    """Return a two-conv-layer Seq-MT config small enough for probing."""
    return NetworkConfig(
        name="toy-seqmt",
        architecture=Architecture.SeqMT,
        input_size=(image_size, image_size, 1),
        num_landmarks=2,
        num_classes=3,
        localization=conv(3, 4) + conv(3, 2) + head(HeadKind.SoftArgmax, 1.0),
        attribute=dense(8) + dense(3, relu=False),
    )


def composite_check(
    seed: int = 0, eps: float = 1e-6, max_coordinates: int = 8
) -> GradCheckResult:
    """Check the full objective (all four terms) of a toy Seq-MT network.

    Returns:
        GradCheckResult: The worst coordinate over all parameters.
    """
    config = toy_seqmt_config()
    net = build(config, seed=seed)
    rng = np.random.default_rng([seed, 2])
    h, w, _ = config.input_size
    batch = Batch(
        images=rng.uniform(0.0, 1.0, size=(4, 1, h, w)),
        labels=rng.integers(0, config.num_classes, size=4),
        landmarks=rng.uniform(0.0, w - 1, size=(4, config.num_landmarks, 2)),
        labeled=np.array([True, False, True, False]),
    )
    weights = LossWeights(alpha=1.0, lam=1.0, gamma=0.01)

    def f() -> Tensor:
        sampler = TransformSampler(image_size=(h, w), seed=[seed, 3])
        return composite(net, batch, weights, sampler).loss

    return check_gradients(
        f, net.parameters(), eps=eps, max_coordinates=max_coordinates, seed=seed,
        name="composite (toy seq-mt)", atol=ABSOLUTE_TOLERANCE,
    )


def run_suite(
    seed: int = 0, eps: float = 1e-6, max_coordinates: int = 16
) -> list[GradCheckResult]:
    """Check every op and the toy composite objective.

    Returns:
        list[GradCheckResult]: One result per check, in a stable order.
    """
    results = []
    for index, (name, builder) in enumerate(OP_CHECKS.items()):
        f, params = builder(np.random.default_rng([seed, index]))
        results.append(
            check_gradients(
                f, params, eps=eps, max_coordinates=max_coordinates, seed=seed,
                name=name, atol=ABSOLUTE_TOLERANCE,
            )
        )
        logger.debug(results[-1].describe())
    results.append(composite_check(seed=seed, eps=eps))
    logger.debug(results[-1].describe())
    return results


def assert_passed(
    results: Sequence[GradCheckResult], tolerance: float = DEFAULT_TOLERANCE
) -> None:
    """Raise if any check exceeds the tolerance.

    Raises:
        GradientCheckError: Names the worst failing check and coordinate.
    """
    failed = [r for r in results if not r.passed(tolerance)]
    if failed:
        worst = max(failed, key=lambda r: r.max_error)
        raise GradientCheckError(
            f"{len(failed)} of {len(results)} gradient checks exceed {tolerance:g}; "
            f"worst is {worst.describe()}"
        )
