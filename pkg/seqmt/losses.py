"""Terms of the semi-supervised objective as graph builders.

The total cost of a batch is::

    attr + alpha * elt + lambda * landmark + gamma * decay

``attr`` averages over the batch, ``elt`` over the transformed images and
their landmarks, ``landmark`` over the labelled samples and their landmarks.
Counts are local to the batch.
"""

# Standard Library Imports
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Any, Callable, Protocol, Sequence

# Third-Party Imports
import numpy as np

# Local Imports
from seqmt import autodiff as ad
from seqmt.autodiff import Tensor
from seqmt.config import Architecture, HeadKind, StopGradient, Task
from seqmt.datasets import Sample, stack_images
from seqmt.errors import ConfigError, ContractError
from seqmt.geometry import AffineTransform, TransformSampler, warp_image

logger = logging.getLogger(__name__)

Warp = Callable[[AffineTransform, np.ndarray], np.ndarray]


class LandmarkPredictor(Protocol):
    """Anything mapping an image batch to landmark coordinates."""

    def forward_landmarks(self, images: Any) -> tuple[None | Tensor, Tensor]:
        """Return (heatmaps or None, [N, K, 2] landmarks)."""


@dataclass(frozen=True)
class LossWeights:
    """Weights of the objective terms and the soft-argmax temperature.

    Args:
        alpha (float): Weight of the equivariance term.
        lam (float): Weight of the landmark term.
        gamma (float): Weight decay coefficient.
        beta (float): Soft-argmax temperature, routed to the network head.
    """

    alpha: float = 1.0
    lam: float = 1.0
    gamma: float = 0.0
    beta: float = 1.0

    def __post_init__(self) -> None:
        for name in ("alpha", "lam", "gamma"):
            value = getattr(self, name)
            if value < 0:
                raise ConfigError(f"loss weight {name} should be >= 0, not {value}")
        if self.beta <= 0:
            raise ConfigError(f"beta should be > 0, not {self.beta}")


@dataclass
class LossReport:
    """Per-batch values of the objective terms.

    The term values are unweighted; ``total`` is the weighted sum and ``loss``
    the graph node to back-propagate from.
    """

    attr: float
    elt: float
    landmark: float
    decay: float
    total: float
    loss: Tensor
    weights: LossWeights
    n_labeled: int = 0
    n_elt: int = 0

    def recompose(self) -> float:
        """Return the weighted sum of the reported terms."""
        w = self.weights
        return self.attr + w.alpha * self.elt + w.lam * self.landmark + w.gamma * self.decay


@dataclass
class Batch:
    """Stacked arrays of a list of samples.

    Attributes:
        images (np.ndarray): [N, 1, H, W] float64 images.
        labels (np.ndarray): [N] attribute targets.
        landmarks (np.ndarray): [N, K, 2] coordinates, zero where unlabelled.
        labeled (np.ndarray): [N] bool landmark mask.
    """

    images: np.ndarray
    labels: np.ndarray
    landmarks: np.ndarray
    labeled: np.ndarray

    @classmethod
    def from_samples(cls, samples: Sequence[Sample], num_landmarks: int) -> Batch:
        """Stack the given samples.

        Raises:
            ContractError: The sample list is empty.
        """
        if not samples:
            raise ContractError("a batch needs at least one sample")
        landmarks = np.zeros((len(samples), num_landmarks, 2))
        for i, sample in enumerate(samples):
            if sample.landmarks is not None:
                landmarks[i] = sample.landmarks
        return cls(
            images=stack_images(samples),
            labels=np.array([s.label for s in samples], dtype=np.int64),
            landmarks=landmarks,
            labeled=np.array([s.labeled for s in samples], dtype=bool),
        )

    def __len__(self) -> int:
        return len(self.labels)


def attr_cost(
    logits: Any, targets: Sequence[float] | np.ndarray, task: Task = Task.Classification
) -> Tensor:
    """Attribute cost averaged over the batch.

    Args:
        logits (Any): [N, C] scores, or a prediction carrying ``logits``.
        targets (Sequence[float] | np.ndarray): Class indices, or regression
            targets.
        task (Task): Softmax cross-entropy for classification, L1 distance for
            regression.

    Raises:
        ContractError: A class label is out of range.

    Returns:
        Tensor: The scalar cost.
    """
    logits = getattr(logits, "logits", logits)
    if Task.to_task(task) is Task.Classification:
        return ad.softmax_cross_entropy(logits, targets)
    targets = np.asarray(targets, dtype=np.float64)
    predicted = ad.reshape(logits, (logits.shape[0],))
    return ad.mean(ad.absolute(predicted - targets))


def landmark_cost(
    predicted: Tensor, target: np.ndarray, labeled: np.ndarray
) -> Tensor:
    """Mean squared distance over labelled samples and their landmarks.

    Args:
        predicted (Tensor): [N, K, 2] predictions.
        target (np.ndarray): [N, K, 2] ground truth; unlabelled rows ignored.
        labeled (np.ndarray): [N] bool mask.

    Returns:
        Tensor: The scalar cost, a constant 0 when no sample is labelled.
    """
    index = np.flatnonzero(labeled)
    if index.size == 0:
        return Tensor(0.0, op="constant")
    k = predicted.shape[1]
    residual = ad.take(predicted, index) - target[index]
    return ad.tensor_sum(residual * residual) * (1.0 / (index.size * k))


def heatmap_landmark_cost(
    heatmaps: Tensor, target: np.ndarray, labeled: np.ndarray
) -> Tensor:
    """Spatial softmax cross-entropy against one-hot maps at the rounded targets.

    Args:
        heatmaps (Tensor): [N, K, H, W] maps before the softmax.
        target (np.ndarray): [N, K, 2] ground truth coordinates.
        labeled (np.ndarray): [N] bool mask.

    Returns:
        Tensor: The scalar cost, a constant 0 when no sample is labelled.
    """
    index = np.flatnonzero(labeled)
    if index.size == 0:
        return Tensor(0.0, op="constant")
    _, k, h, w = heatmaps.shape
    cols = np.clip(np.rint(target[index, :, 0]), 0, w - 1).astype(np.int64)
    rows = np.clip(np.rint(target[index, :, 1]), 0, h - 1).astype(np.int64)
    logits = ad.reshape(ad.take(heatmaps, index), (index.size * k, h * w))
    return ad.softmax_cross_entropy(logits, (rows * w + cols).reshape(-1))


def elt_cost(
    predictor: LandmarkPredictor,
    images: np.ndarray,
    sampler: TransformSampler,
    stop_gradient: StopGradient = StopGradient.NoStop,
    transforms_per_image: int = 1,
    landmarks: None | Tensor = None,
    warp: Warp = warp_image,
) -> Tensor:
    """Equivariance cost ``mean ||T (L(I)) - L(T (I))||^2``.

    Every image gets ``transforms_per_image`` freshly sampled transforms. The
    residual averages over the transformed copies and the landmarks.

    Args:
        predictor (LandmarkPredictor): The network (or any oracle).
        images (np.ndarray): [N, 1, H, W] images.
        sampler (TransformSampler): Source of the transforms.
        stop_gradient (StopGradient): Side of the residual held constant.
        transforms_per_image (int): Number of transforms per image.
        landmarks (None | Tensor): Already computed L(I) of these images.
        warp (Warp): Image warp, ``warp(T, image[H, W])``.

    Raises:
        SingularTransformError: A sampled transform is singular.

    Returns:
        Tensor: The scalar cost.
    """
    if transforms_per_image < 1:
        raise ContractError(
            f"transforms_per_image should be >= 1, not {transforms_per_image}"
        )
    stop_gradient = StopGradient.to_stop_gradient(stop_gradient)
    if landmarks is None:
        _, landmarks = predictor.forward_landmarks(images)
    n = images.shape[0]
    transforms = [sampler.sample() for _ in range(n * transforms_per_image)]
    source = np.repeat(images, transforms_per_image, axis=0)
    warped = np.empty_like(source)
    for i, transform in enumerate(transforms):
        warped[i, 0] = warp(transform, source[i, 0])
    _, warped_landmarks = predictor.forward_landmarks(warped)

    original = landmarks
    if transforms_per_image > 1:
        index = np.repeat(np.arange(n), transforms_per_image)
        original = ad.take(landmarks, index)
    if stop_gradient is StopGradient.Original:
        original = original.detach()
    elif stop_gradient is StopGradient.Warped:
        warped_landmarks = warped_landmarks.detach()
    matrices = np.stack([t.matrix for t in transforms])
    residual = ad.transform_coords(original, matrices) - warped_landmarks
    k = landmarks.shape[1]
    return ad.tensor_sum(residual * residual) * (1.0 / (len(transforms) * k))


def weight_decay(weights: Sequence[Tensor]) -> Tensor:
    """Sum of squares of the given weights."""
    total: Tensor = Tensor(0.0, op="constant")
    for w in weights:
        total = total + ad.tensor_sum(w * w)
    return total


def composite(
    net: Any,
    batch: Batch,
    weights: LossWeights,
    sampler: None | TransformSampler = None,
    include_attr: bool = True,
    elt_on_labeled: bool = False,
    stop_gradient: StopGradient = StopGradient.NoStop,
    transforms_per_image: int = 1,
) -> LossReport:
    """Assemble the objective of one batch.

    Terms with a zero weight (or no selected samples) build no graph at all.

    Args:
        net (Any): The network.
        batch (Batch): The batch.
        weights (LossWeights): Term weights.
        sampler (None | TransformSampler): Needed when alpha > 0.
        include_attr (bool): Whether the attribute term is part of the cost.
        elt_on_labeled (bool): Apply the equivariance term to labelled samples
            as well as unlabelled ones.
        stop_gradient (StopGradient): See :func:`elt_cost`.
        transforms_per_image (int): See :func:`elt_cost`.

    Raises:
        ContractError: Empty batch.
        ConfigError: alpha > 0 without a sampler, or with a network whose
            landmarks are not differentiable.

    Returns:
        LossReport: The terms and the loss node.
    """
    if len(batch) == 0:
        raise ContractError("composite needs a non-empty batch")
    config = net.config
    heatmap_ce = (
        config.architecture is Architecture.HeatmapMT
        and config.head is HeadKind.SpatialSoftmax
    )
    n_labeled = int(batch.labeled.sum())
    need_landmarks = weights.lam > 0 and n_labeled > 0
    elt_mask = np.ones(len(batch), dtype=bool) if elt_on_labeled else ~batch.labeled
    need_elt = weights.alpha > 0 and bool(elt_mask.any())
    if need_elt and sampler is None:
        raise ConfigError("alpha > 0 needs a transform sampler")
    if need_elt and heatmap_ce:
        raise ConfigError(
            "the equivariance term needs a soft-argmax head on heatmap-mt"
        )

    heatmaps = landmarks = None
    terms: list[Tensor] = []
    values = {"attr": 0.0, "elt": 0.0, "landmark": 0.0, "decay": 0.0}
    if include_attr:
        prediction = net.forward(batch.images)
        heatmaps, landmarks = prediction.heatmaps, prediction.landmarks
        attr = attr_cost(prediction.logits, batch.labels, config.task)
        values["attr"] = attr.item()
        terms.append(attr)
    elif need_landmarks or need_elt:
        heatmaps, landmarks = net.forward_landmarks(batch.images)

    if need_landmarks:
        if heatmap_ce:
            term = heatmap_landmark_cost(heatmaps, batch.landmarks, batch.labeled)
        else:
            term = landmark_cost(landmarks, batch.landmarks, batch.labeled)
        values["landmark"] = term.item()
        terms.append(term * weights.lam)

    if need_elt:
        index = np.flatnonzero(elt_mask)
        term = elt_cost(
            net,
            batch.images[index],
            sampler,
            stop_gradient=stop_gradient,
            transforms_per_image=transforms_per_image,
            landmarks=ad.take(landmarks, index),
        )
        values["elt"] = term.item()
        terms.append(term * weights.alpha)

    if weights.gamma > 0:
        term = weight_decay(net.weights())
        values["decay"] = term.item()
        terms.append(term * weights.gamma)

    # nothing to learn from, e.g. landmark-only training on an unlabelled batch
    loss = terms[0] if terms else Tensor(0.0, op="constant")
    for term in terms[1:]:
        loss = loss + term
    return LossReport(
        total=loss.item(),
        loss=loss,
        weights=weights,
        n_labeled=n_labeled,
        n_elt=int(elt_mask.sum()) if need_elt else 0,
        **values,
    )
