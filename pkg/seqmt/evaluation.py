"""Landmark and attribute metrics, and the AMI attribute selection heuristic."""

# Standard Library Imports
from __future__ import annotations

import contextlib
import logging
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Sequence

# Third-Party Imports
import numpy as np
from sklearn.metrics import adjusted_mutual_info_score, mutual_info_score
from sklearn.metrics.cluster import contingency_matrix

# Local Imports
from seqmt.datasets import Sample, stack_images
from seqmt.errors import ContractError, DataError

logger = logging.getLogger(__name__)

AMI_BINS = 20
RESULT_COLUMNS = (
    "regime",
    "fraction",
    "seed",
    "epoch",
    "test_pixel_error",
    "test_class_acc",
)
EVAL_BATCH_SIZE = 64


@dataclass
class EvalReport:
    """Evaluation results on a set of samples.

    Attributes:
        mean_error (None | float): Mean Euclidean landmark error in pixels.
        per_landmark (list[float]): Mean error of every landmark.
        normalized_error (None | float): ``mean_error / normalizer * 100``.
        class_accuracy (None | float): Attribute accuracy.
        epoch (None | int): The epoch the network was taken from.
        seed (None | int): The seed of the run.
    """

    mean_error: None | float = None
    per_landmark: list[float] = field(default_factory=list)
    normalized_error: None | float = None
    class_accuracy: None | float = None
    epoch: None | int = None
    seed: None | int = None

    def to_row(self) -> dict[str, str]:
        """Return the report as a flat string row."""

        def fmt(value: Any) -> str:
            return "" if value is None else repr(value)

        row = {
            "epoch": fmt(self.epoch),
            "seed": fmt(self.seed),
            "pixel_error": fmt(self.mean_error),
            "percent_error": fmt(self.normalized_error),
            "class_acc": fmt(self.class_accuracy),
        }
        for index, error in enumerate(self.per_landmark):
            row[f"landmark_{index}"] = repr(error)
        return row


def _eval_context(net: Any) -> contextlib.AbstractContextManager:
    eval_mode = getattr(net, "eval_mode", None)
    return eval_mode() if eval_mode is not None else contextlib.nullcontext()


def predict_in_batches(
    fn: Callable[[np.ndarray], Any], inputs: np.ndarray, batch_size: int = EVAL_BATCH_SIZE
) -> np.ndarray:
    """Apply a graph building function batch by batch and stack the values.

    Args:
        fn (Callable[[np.ndarray], Any]): Maps an input batch to a Tensor or
            an array.
        inputs (np.ndarray): The inputs, batched along the first axis.
        batch_size (int): Batch size.

    Returns:
        np.ndarray: The concatenated outputs.
    """
    if len(inputs) == 0:
        raise ContractError("nothing to predict")
    outputs = []
    for start in range(0, len(inputs), batch_size):
        result = fn(inputs[start : start + batch_size])
        outputs.append(np.asarray(getattr(result, "values", result)))
    return np.concatenate(outputs, axis=0)


def predict_landmarks(
    net: Any, samples: Sequence[Sample], batch_size: int = EVAL_BATCH_SIZE
) -> np.ndarray:
    """Return the [N, K, 2] landmarks predicted for the samples, in eval mode."""
    with _eval_context(net):
        return predict_in_batches(
            lambda images: net.forward_landmarks(images)[1],
            stack_images(samples),
            batch_size,
        )


def predict_logits(
    net: Any, samples: Sequence[Sample], batch_size: int = EVAL_BATCH_SIZE
) -> np.ndarray:
    """Return the [N, C] attribute scores predicted for the samples, in eval mode."""
    with _eval_context(net):
        return predict_in_batches(
            lambda images: net.forward(images).logits, stack_images(samples), batch_size
        )


def ground_truth(samples: Sequence[Sample]) -> np.ndarray:
    """Stack the GT landmarks of the samples.

    Raises:
        DataError: A sample has no GT landmarks.
    """
    missing = [i for i, s in enumerate(samples) if s.landmarks is None]
    if missing:
        raise DataError(
            f"{len(missing)} of {len(samples)} samples have no ground-truth "
            f"landmarks, first is sample {missing[0]}"
        )
    return np.stack([s.landmarks for s in samples])


def landmark_errors(predicted: np.ndarray, target: np.ndarray) -> np.ndarray:
    """Return the [N, K] Euclidean distances between two landmark sets."""
    predicted = np.asarray(predicted, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if predicted.shape != target.shape:
        raise ContractError(
            f"landmark shapes differ: {predicted.shape} != {target.shape}"
        )
    return np.linalg.norm(predicted - target, axis=-1)


def landmark_report(
    predicted: np.ndarray, target: np.ndarray, normalizer: None | float = None
) -> EvalReport:
    """Summarise the errors of predicted landmarks against GT.

    Args:
        predicted (np.ndarray): [N, K, 2] predictions.
        target (np.ndarray): [N, K, 2] GT landmarks.
        normalizer (None | float): When given, the error is also reported as
            a percentage of it.

    Returns:
        EvalReport: The report.
    """
    errors = landmark_errors(predicted, target)
    mean_error = float(errors.mean())
    report = EvalReport(
        mean_error=mean_error, per_landmark=[float(e) for e in errors.mean(axis=0)]
    )
    if normalizer is not None:
        if normalizer <= 0:
            raise ContractError(f"normalizer should be > 0, not {normalizer}")
        report.normalized_error = mean_error / normalizer * 100.0
    return report


def eval_landmarks(
    net: Any,
    samples: Sequence[Sample],
    normalizer: None | float = None,
    batch_size: int = EVAL_BATCH_SIZE,
) -> EvalReport:
    """Evaluate the landmark predictions of a network.

    Args:
        net (Any): Anything with ``forward_landmarks``.
        samples (Sequence[Sample]): Samples carrying GT landmarks.
        normalizer (None | float): See :func:`landmark_report`.
        batch_size (int): Prediction batch size.

    Raises:
        DataError: A sample has no GT landmarks.

    Returns:
        EvalReport: The report.
    """
    target = ground_truth(samples)
    return landmark_report(predict_landmarks(net, samples, batch_size), target, normalizer)


def class_accuracy(logits: np.ndarray, labels: Sequence[int]) -> float:
    """Fraction of rows whose argmax is the label; ties go to the lowest index."""
    labels = np.asarray(labels)
    if len(labels) == 0:
        raise ContractError("class accuracy of an empty set")
    return float(np.mean(np.argmax(logits, axis=-1) == labels))


def eval_classes(
    net: Any, samples: Sequence[Sample], batch_size: int = EVAL_BATCH_SIZE
) -> float:
    """Return the attribute accuracy of a network on the samples."""
    return class_accuracy(
        predict_logits(net, samples, batch_size), [s.label for s in samples]
    )


def consistency_from_landmarks(predicted: np.ndarray, shapes: np.ndarray) -> float:
    """Fraction of predictions lying nearer the shape their channel tracks.

    Every channel is assigned the shape it is nearer to in most samples (ties
    go to the first shape); the result is the fraction of (sample, channel)
    pairs nearer their assigned shape.

    Args:
        predicted (np.ndarray): [N, K, 2] predicted landmarks.
        shapes (np.ndarray): [N, 2, 2] centroids of the two shapes.

    Returns:
        float: The fraction.
    """
    predicted = np.asarray(predicted, dtype=np.float64)
    shapes = np.asarray(shapes, dtype=np.float64)
    to_first = np.linalg.norm(predicted - shapes[:, None, 0], axis=-1)
    to_second = np.linalg.norm(predicted - shapes[:, None, 1], axis=-1)
    nearer_second = to_second < to_first
    assigned_second = nearer_second.mean(axis=0) > 0.5
    return float(np.mean(nearer_second == assigned_second[None, :]))


def landmark_consistency(
    net: Any, samples: Sequence[Sample], batch_size: int = EVAL_BATCH_SIZE
) -> float:
    """Evaluate :func:`consistency_from_landmarks` for a network on Shapes samples.

    Raises:
        DataError: A sample has no GT centroids.
    """
    shapes = ground_truth(samples)
    return consistency_from_landmarks(predict_landmarks(net, samples, batch_size), shapes)


def bin_uniform(values: Sequence[float], bins: int = AMI_BINS) -> np.ndarray:
    """Discretize values into at most ``bins`` equal-width levels over their range.

    Constant input falls into a single level.
    """
    if bins < 2:
        raise ContractError(f"bins should be >= 2, not {bins}")
    values = np.asarray(values, dtype=np.float64)
    lo, hi = values.min(), values.max()
    if hi <= lo:
        return np.zeros(len(values), dtype=np.int64)
    index = np.floor((values - lo) / (hi - lo) * bins).astype(np.int64)
    return np.minimum(index, bins - 1)


def _labelings(
    first: Sequence[int], second: Sequence[int]
) -> tuple[np.ndarray, np.ndarray]:
    first = np.asarray(first)
    second = np.asarray(second)
    if first.shape != second.shape:
        raise ContractError(f"labelings differ in length: {first.shape} != {second.shape}")
    return first, second


def contingency(first: Sequence[int], second: Sequence[int]) -> np.ndarray:
    """Return the table of co-occurrence counts of two labelings."""
    return contingency_matrix(*_labelings(first, second))


def mutual_info(table: np.ndarray) -> float:
    """Mutual information (nats) of a contingency table."""
    return float(mutual_info_score(None, None, contingency=np.asarray(table)))


def adjusted_mutual_info(first: Sequence[int], second: Sequence[int]) -> float:
    """Mutual information adjusted for chance, normalised by the larger entropy.

    Two single-level labelings are a perfect match and score 1.
    """
    first, second = _labelings(first, second)
    return float(adjusted_mutual_info_score(first, second, average_method="max"))


def _check_landmarks(landmarks: Any, count: int) -> np.ndarray:
    landmarks = np.asarray(landmarks, dtype=np.float64)
    if landmarks.ndim != 3 or landmarks.shape[-1] != 2 or len(landmarks) != count:
        raise ContractError(
            f"expected [{count}, K, 2] landmarks, got shape {landmarks.shape}"
        )
    return landmarks


def ami_per_landmark(
    labels: Sequence[int], landmarks: Any, bins: int = AMI_BINS
) -> np.ndarray:
    """Return ``AMI(A; x) + AMI(A; y)`` for every landmark.

    Args:
        labels (Sequence[int]): The attribute of every sample.
        landmarks (Any): [N, K, 2] landmarks.
        bins (int): Levels every coordinate is discretized to.

    Raises:
        DataError: The attribute is constant.

    Returns:
        np.ndarray: [K] scores.
    """
    labels = np.asarray(labels)
    if len(np.unique(labels)) < 2:
        raise DataError("AMI needs at least two distinct attribute values")
    landmarks = _check_landmarks(landmarks, len(labels))
    return np.array(
        [
            adjusted_mutual_info(labels, bin_uniform(landmarks[:, k, 0], bins))
            + adjusted_mutual_info(labels, bin_uniform(landmarks[:, k, 1], bins))
            for k in range(landmarks.shape[1])
        ]
    )


def ami(
    labels: Sequence[int], landmarks: Any, bins: int = AMI_BINS
) -> tuple[float, float]:
    """Return the mean and max over landmarks of :func:`ami_per_landmark`."""
    scores = ami_per_landmark(labels, landmarks, bins)
    return float(scores.mean()), float(scores.max())


def coordinate_independence(landmarks: Any, bins: int = AMI_BINS) -> float:
    """Mean AMI between the x and y coordinate of each landmark.

    Values near zero support scoring the coordinates of a landmark separately.
    """
    landmarks = np.asarray(landmarks, dtype=np.float64)
    landmarks = _check_landmarks(landmarks, len(landmarks))
    scores = [
        adjusted_mutual_info(
            bin_uniform(landmarks[:, k, 0], bins), bin_uniform(landmarks[:, k, 1], bins)
        )
        for k in range(landmarks.shape[1])
    ]
    return float(np.mean(scores))


def result_row(
    regime: str, fraction: float, seed: int, report: EvalReport
) -> dict[str, str]:
    """Return one ``RESULT_COLUMNS`` row of a finished run."""
    return {
        "regime": str(regime),
        "fraction": repr(float(fraction)),
        "seed": str(seed),
        "epoch": "" if report.epoch is None else str(report.epoch),
        "test_pixel_error": "" if report.mean_error is None else repr(report.mean_error),
        "test_class_acc": (
            "" if report.class_accuracy is None else repr(report.class_accuracy)
        ),
    }


def _median(values: list[float]) -> None | float:
    return float(np.median(values)) if values else None


def summarize_results(rows: Iterable[dict[str, str]]) -> list[dict[str, Any]]:
    """Reduce result rows to medians over seeds per (regime, fraction).

    Args:
        rows (Iterable[dict[str, str]]): ``RESULT_COLUMNS`` rows.

    Returns:
        list[dict[str, Any]]: One entry per (regime, fraction), sorted by
            fraction then regime, holding ``runs`` and the medians.
    """
    groups: dict[tuple[str, float], dict[str, list[float]]] = {}
    for row in rows:
        key = (row["regime"], float(row["fraction"]))
        group = groups.setdefault(key, {"error": [], "accuracy": [], "seeds": []})
        group["seeds"].append(int(row["seed"]))
        if row.get("test_pixel_error"):
            group["error"].append(float(row["test_pixel_error"]))
        if row.get("test_class_acc"):
            group["accuracy"].append(float(row["test_class_acc"]))
    return [
        {
            "regime": regime,
            "fraction": fraction,
            "runs": len(group["seeds"]),
            "median_test_pixel_error": _median(group["error"]),
            "median_test_class_acc": _median(group["accuracy"]),
        }
        for (regime, fraction), group in sorted(
            groups.items(), key=lambda item: (item[0][1], item[0][0])
        )
    ]
