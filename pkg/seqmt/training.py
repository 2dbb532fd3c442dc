"""Mini-batch training with validation based early stopping."""

# Standard Library Imports
from __future__ import annotations

import dataclasses
import logging
from dataclasses import dataclass, field
from typing import Callable, Sequence

# Third-Party Imports
import numpy as np

# Local Imports
from seqmt.autodiff import describe_node, first_non_finite
from seqmt.config import Architecture, Regime, RunConfig, StopGradient, Task
from seqmt.datasets import DatasetSplit, Sample
from seqmt.errors import ConfigError, DataError, NaNLossError
from seqmt.evaluation import (
    EvalReport,
    class_accuracy,
    eval_classes,
    eval_landmarks,
    predict_in_batches,
)
from seqmt.geometry import TransformSampler
from seqmt.losses import Batch, LossWeights, attr_cost, composite
from seqmt.models import Network
from seqmt.optim import Adam

logger = logging.getLogger(__name__)

HISTORY_COLUMNS = (
    "epoch",
    "attr",
    "elt",
    "landmark",
    "decay",
    "total",
    "val_pixel_error",
    "val_class_acc",
)


@dataclass
class TrainConfig:
    """Everything a training run needs besides the data and the network.

    The regime decides which terms are active, so the weights are coerced to
    it: regimes without equivariance run with ``alpha = 0`` and the class-only
    regime ``A`` also with ``lambda = 0``.

    Raises:
        ConfigError: A value is out of range or the weights cannot express
            the regime.
    """

    regime: Regime = Regime.LELTA
    epochs: int = 150
    batch_size: int = 32
    seed: int = 0
    fraction: float = 1.0
    weights: LossWeights = field(default_factory=LossWeights)
    lr: float = 1e-3
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    rotation_deg: float = 20.0
    scale_range: tuple[float, float] = (0.9, 1.1)
    translate_frac: float = 0.1
    elt_on_labeled: bool = False
    stop_gradient: StopGradient = StopGradient.NoStop
    transforms_per_image: int = 1
    patience: int = 20
    eval_every: int = 1

    def __post_init__(self) -> None:
        self.regime = Regime.to_regime(self.regime)
        self.stop_gradient = StopGradient.to_stop_gradient(self.stop_gradient)
        for name, minimum in (
            ("epochs", 0),
            ("batch_size", 1),
            ("patience", 1),
            ("eval_every", 1),
            ("transforms_per_image", 1),
        ):
            value = getattr(self, name)
            if value < minimum:
                raise ConfigError(f"{name} should be >= {minimum}, not {value}")

        weights = self.weights
        if self.regime.uses_elt and weights.alpha <= 0:
            raise ConfigError(f"regime {self.regime} needs alpha > 0")
        if self.regime.uses_landmarks and weights.lam <= 0:
            raise ConfigError(f"regime {self.regime} needs lambda > 0")
        if not self.regime.uses_elt and weights.alpha != 0:
            logger.debug("regime %s ignores alpha=%s", self.regime, weights.alpha)
            weights = dataclasses.replace(weights, alpha=0.0)
        if not self.regime.uses_landmarks and weights.lam != 0:
            logger.debug("regime %s ignores lambda=%s", self.regime, weights.lam)
            weights = dataclasses.replace(weights, lam=0.0)
        self.weights = weights

    @classmethod
    def from_run_config(cls, config: RunConfig) -> TrainConfig:
        """Read a training config from the keys of a run configuration.

        Args:
            config (RunConfig): The run configuration.

        Returns:
            TrainConfig: The config.
        """
        return cls(
            regime=config.getenum("regime", Regime, Regime.LELTA),
            epochs=config.getint("epochs", 150),
            batch_size=config.getint("batch_size", 32),
            seed=config.getint("seed", 0),
            fraction=config.getfloat("fraction", 1.0),
            weights=LossWeights(
                alpha=config.getfloat("alpha", 1.0),
                lam=config.getfloat("lambda", 1.0),
                gamma=config.getfloat("gamma", 0.0),
                beta=config.getfloat("beta", 1.0),
            ),
            lr=config.getfloat("lr", 1e-3),
            adam_beta1=config.getfloat("adam_beta1", 0.9),
            adam_beta2=config.getfloat("adam_beta2", 0.999),
            adam_eps=config.getfloat("adam_eps", 1e-8),
            rotation_deg=config.getfloat("elt_rotation_deg", 20.0),
            scale_range=(
                config.getfloat("elt_scale_lo", 0.9),
                config.getfloat("elt_scale_hi", 1.1),
            ),
            translate_frac=config.getfloat("elt_translate_frac", 0.1),
            elt_on_labeled=config.getboolean("elt_on_labeled", False),
            stop_gradient=config.getenum("elt_stop_gradient", StopGradient, "none"),
            transforms_per_image=config.getint("elt_transforms_per_image", 1),
            patience=config.getint("patience", 20),
            eval_every=config.getint("eval_every", 1),
        )

    def make_sampler(self, image_size: tuple[int, int]) -> TransformSampler:
        """Return the transform sampler of the equivariance term."""
        return TransformSampler(
            rotation_deg=self.rotation_deg,
            scale=self.scale_range,
            translate_frac=self.translate_frac,
            image_size=image_size,
            seed=[self.seed, 2],
        )


@dataclass
class EpochRecord:
    """Mean term values of one epoch and the validation report, if any."""

    epoch: int
    attr: float
    elt: float
    landmark: float
    decay: float
    total: float
    steps: int
    validation: None | EvalReport = None

    def to_row(self) -> dict[str, str]:
        """Return the record as a ``HISTORY_COLUMNS`` keyed row."""
        val_error = val_acc = ""
        if self.validation is not None:
            if self.validation.mean_error is not None:
                val_error = repr(self.validation.mean_error)
            if self.validation.class_accuracy is not None:
                val_acc = repr(self.validation.class_accuracy)
        return {
            "epoch": str(self.epoch),
            "attr": repr(self.attr),
            "elt": repr(self.elt),
            "landmark": repr(self.landmark),
            "decay": repr(self.decay),
            "total": repr(self.total),
            "val_pixel_error": val_error,
            "val_class_acc": val_acc,
        }


@dataclass
class History:
    """What happened during a training run."""

    records: list[EpochRecord] = field(default_factory=list)
    best_epoch: None | int = None
    stopped_early: bool = False

    def __len__(self) -> int:
        return len(self.records)

    @property
    def evaluations(self) -> list[EvalReport]:
        """list[EvalReport]: The validation reports in epoch order."""
        return [r.validation for r in self.records if r.validation is not None]

    def to_rows(self) -> list[dict[str, str]]:
        """Return one ``HISTORY_COLUMNS`` row per epoch."""
        return [record.to_row() for record in self.records]


def _validation_score(
    net: Network, config: TrainConfig, split: DatasetSplit, epoch: int
) -> tuple[float, EvalReport]:
    """Return (score to minimise, report) on the validation samples."""
    if config.regime is Regime.A:
        accuracy = eval_classes(net, split.valid)
        report = EvalReport(class_accuracy=accuracy, epoch=epoch, seed=config.seed)
        return -accuracy, report
    report = eval_landmarks(net, split.valid)
    if config.regime.uses_attributes and net.config.task is Task.Classification:
        report.class_accuracy = eval_classes(net, split.valid)
    report.epoch = epoch
    report.seed = config.seed
    return report.mean_error, report


def train(
    config: TrainConfig,
    split: DatasetSplit,
    net: Network,
    on_epoch: None | Callable[[EpochRecord], None] = None,
) -> tuple[Network, History]:
    """Train a network on a (label masked) dataset.

    Args:
        config (TrainConfig): The run settings.
        split (DatasetSplit): The dataset, masked to ``config.fraction``.
        net (Network): The network, trained in place.
        on_epoch (None | Callable[[EpochRecord], None]): Called after each epoch.

    Raises:
        NaNLossError: A batch loss is not finite.
        DataError: The training split is empty.

    Returns:
        tuple[Network, History]: The network holding the best validated
            parameters (in eval mode) and the history.
    """
    history = History()
    if config.epochs == 0:
        return net, history
    if not split.train:
        raise DataError(f"dataset '{split.name}' has no training samples")

    n, s = split.n, split.s
    if not config.regime.uses_elt:
        n_elt = 0
    else:
        n_elt = n if config.elt_on_labeled else n - s
    logger.info(
        "regime %s: %d of %d training samples labelled, ELT applied to %d",
        config.regime, s, n, n_elt,
    )

    sampler = config.make_sampler(split.image_size) if config.regime.uses_elt else None
    shuffle_rng = np.random.default_rng([config.seed, 3])
    optimizer = Adam(
        net.parameters(),
        lr=config.lr,
        beta1=config.adam_beta1,
        beta2=config.adam_beta2,
        eps=config.adam_eps,
    )
    best_score = np.inf
    best_state = None
    bad_evals = 0
    net.train()
    for epoch in range(1, config.epochs + 1):
        order = shuffle_rng.permutation(n)
        sums = dict.fromkeys(("attr", "elt", "landmark", "decay", "total"), 0.0)
        steps = 0
        for step, start in enumerate(range(0, n, config.batch_size)):
            samples = [split.train[i] for i in order[start : start + config.batch_size]]
            batch = Batch.from_samples(samples, split.num_landmarks)
            report = composite(
                net,
                batch,
                config.weights,
                sampler=sampler,
                include_attr=config.regime.uses_attributes,
                elt_on_labeled=config.elt_on_labeled,
                stop_gradient=config.stop_gradient,
                transforms_per_image=config.transforms_per_image,
            )
            if not np.isfinite(report.total):
                node = first_non_finite(report.loss)
                name = describe_node(node) if node is not None else "loss"
                raise NaNLossError(name, epoch, step)
            if report.loss.requires_grad:
                optimizer.zero_grad()
                report.loss.backward()
                optimizer.step()
            for key in sums:
                sums[key] += getattr(report, key)
            steps += 1

        record = EpochRecord(
            epoch=epoch, steps=steps, **{k: v / steps for k, v in sums.items()}
        )
        if epoch % config.eval_every == 0 or epoch == config.epochs:
            with net.eval_mode():
                score, record.validation = _validation_score(net, config, split, epoch)
            if score < best_score:
                best_score, best_state = score, net.state_dict()
                history.best_epoch = epoch
                bad_evals = 0
            else:
                bad_evals += 1
        history.records.append(record)
        logger.debug(
            "epoch %d: total %.6g over %d steps", epoch, record.total, steps
        )
        if on_epoch is not None:
            on_epoch(record)
        if bad_evals >= config.patience:
            history.stopped_early = True
            logger.info("early stop after epoch %d, best epoch %d", epoch, history.best_epoch)
            break

    if best_state is not None:
        net.load_state_dict(best_state)
    net.eval()
    return net, history


def _gt_inputs(samples: Sequence[Sample], what: str) -> tuple[np.ndarray, np.ndarray]:
    labeled = [s for s in samples if s.landmarks is not None]
    if not labeled:
        raise DataError(f"the {what} samples carry no ground-truth landmarks")
    landmarks = np.stack([s.landmarks for s in labeled])
    labels = np.array([s.label for s in labeled], dtype=np.int64)
    return landmarks, labels


def fit_attributes_on_gt(
    net: Network, split: DatasetSplit, config: TrainConfig
) -> tuple[Network, float]:
    """Fit the attribute branch of a Seq-MT network on ground-truth landmarks.

    The localization part is left untouched; the attribute branch of a copy
    is trained on the GT coordinates of the labelled training samples. The
    resulting test accuracy bounds what the landmarks can explain about the
    attribute.

    Args:
        net (Network): A Seq-MT network. It is not modified.
        split (DatasetSplit): The dataset.
        config (TrainConfig): Epochs, batch size, optimizer and patience.

    Raises:
        ConfigError: The network is not a Seq-MT classifier.
        DataError: No training sample carries landmarks.

    Returns:
        tuple[Network, float]: The fitted copy and its test class accuracy.
    """
    if net.config.architecture is not Architecture.SeqMT:
        raise ConfigError(
            f"fitting attributes on landmarks needs seq-mt, not {net.config.architecture}"
        )
    if net.config.task is not Task.Classification:
        raise ConfigError("fitting attributes on landmarks needs a classification task")
    fitted = net.clone()
    train_x, train_y = _gt_inputs(split.train, "training")
    valid_x, valid_y = _gt_inputs(split.valid, "validation")
    test_x, test_y = _gt_inputs(split.test, "test")

    def accuracy(x: np.ndarray, y: np.ndarray) -> float:
        with fitted.eval_mode():
            logits = predict_in_batches(fitted.forward_attributes, x, config.batch_size)
        return class_accuracy(logits, y)

    optimizer = Adam(
        fitted.branch_parameters("attribute"),
        lr=config.lr,
        beta1=config.adam_beta1,
        beta2=config.adam_beta2,
        eps=config.adam_eps,
    )
    rng = np.random.default_rng([config.seed, 4])
    best_accuracy, best_state, bad_evals = -1.0, None, 0
    fitted.train()
    for epoch in range(1, config.epochs + 1):
        order = rng.permutation(len(train_y))
        for start in range(0, len(order), config.batch_size):
            index = order[start : start + config.batch_size]
            loss = attr_cost(
                fitted.forward_attributes(train_x[index]), train_y[index], Task.Classification
            )
            optimizer.zero_grad()
            loss.backward()
            optimizer.step()
        if epoch % config.eval_every == 0 or epoch == config.epochs:
            score = accuracy(valid_x, valid_y)
            if score > best_accuracy:
                best_accuracy, best_state, bad_evals = score, fitted.state_dict(), 0
            else:
                bad_evals += 1
            if bad_evals >= config.patience:
                break
    if best_state is not None:
        fitted.load_state_dict(best_state)
    fitted.eval()
    test_accuracy = accuracy(test_x, test_y)
    logger.info("attribute accuracy from GT landmarks: %.4f", test_accuracy)
    return fitted, test_accuracy
