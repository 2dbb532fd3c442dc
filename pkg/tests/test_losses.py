"""Objective term related tests are situated here."""

# Standard Library Imports
import math

# Third-Party Imports
import numpy as np
import pytest

# Local Imports
from conftest import make_toy_config, make_toy_split
from seqmt.autodiff import OpCounter, Tensor
from seqmt.config import Architecture, StopGradient, Task
from seqmt.datasets import Sample, place_blocks, render_blocks
from seqmt.errors import ConfigError, ContractError
from seqmt.geometry import TransformSampler
from seqmt.losses import (
    Batch,
    LossWeights,
    attr_cost,
    composite,
    elt_cost,
    heatmap_landmark_cost,
    landmark_cost,
    weight_decay,
)
from seqmt.models import build


class BlocksOracle:
    """Knows the exact landmarks of every Blocks image it rendered."""

    def __init__(self):
        self.placements = {}
        self.landmarks = {}

    def render(self, class_index, transform):
        image, landmarks = render_blocks(class_index, transform)
        image = image.astype(np.float64)
        self.placements[image.tobytes()] = (class_index, transform)
        self.landmarks[image.tobytes()] = landmarks
        return image

    def warp(self, transform, image):
        class_index, placement = self.placements[np.asarray(image, dtype=np.float64).tobytes()]
        return self.render(class_index, transform @ placement)

    def forward_landmarks(self, images):
        coords = [self.landmarks[np.asarray(im[0], dtype=np.float64).tobytes()] for im in images]
        return None, Tensor(np.stack(coords))


def _batch(n=4, **kwargs):
    split = make_toy_split(**kwargs)
    return Batch.from_samples(split.train[:n], split.num_landmarks)


def _identity_sampler(size=12):
    return TransformSampler(rotation_deg=0.0, scale=(1.0, 1.0), translate_frac=0.0,
                            image_size=(size, size))


def test_elt_of_an_exact_oracle_is_zero():
    """A perfectly equivariant predictor has no equivariance cost."""
    oracle = BlocksOracle()
    rng = np.random.default_rng(0)
    images = np.stack([
        oracle.render(i % 15, place_blocks(rng, i % 15, 60))[None] for i in range(20)
    ])
    sampler = TransformSampler(rotation_deg=10.0, scale=(0.9, 1.1), translate_frac=0.05,
                               image_size=(60, 60), seed=0)
    cost = elt_cost(oracle, images, sampler, transforms_per_image=5, warp=oracle.warp)
    assert cost.item() < 1e-9


def test_elt_under_the_identity_is_zero():
    """Without transforms a deterministic network is trivially equivariant."""
    net = build(make_toy_config())
    cost = elt_cost(net, _batch().images, _identity_sampler(), transforms_per_image=2)
    assert cost.item() == 0.0


def test_elt_needs_a_transform():
    """transforms_per_image must be positive."""
    net = build(make_toy_config())
    with pytest.raises(ContractError) as cm:
        elt_cost(net, _batch().images, _identity_sampler(), transforms_per_image=0)
    assert str(cm.value) == "transforms_per_image should be >= 1, not 0"


def test_stop_gradient_splits_the_gradient():
    """The full gradient is the sum of the two one-sided gradients."""
    images = _batch().images
    grads = {}
    for stop in StopGradient:
        net = build(make_toy_config(), seed=1)
        sampler = TransformSampler(rotation_deg=15.0, image_size=(12, 12), seed=2)
        elt_cost(net, images, sampler, stop_gradient=stop).backward()
        grads[stop] = {p.name: p.grad for p in net.branch_parameters("localization")}
    for name, full in grads[StopGradient.NoStop].items():
        np.testing.assert_allclose(
            full,
            grads[StopGradient.Original][name] + grads[StopGradient.Warped][name],
            rtol=1e-8,
            atol=1e-12,
        )


def test_landmark_cost_is_the_mean_squared_distance():
    """An offset of (3, 4) on every landmark costs 25."""
    target = np.random.default_rng(0).uniform(size=(3, 2, 2))
    predicted = Tensor.parameter(target + [3.0, 4.0])
    cost = landmark_cost(predicted, target, np.array([True, True, True]))
    assert cost.item() == pytest.approx(25.0)


def test_landmark_cost_ignores_unlabelled_rows():
    """Predictions and targets of unlabelled samples do not matter."""
    target = np.zeros((3, 2, 2))
    values = np.zeros((3, 2, 2)) + [3.0, 4.0]
    values[1] = 1e6
    predicted = Tensor.parameter(values)
    cost = landmark_cost(predicted, target, np.array([True, False, True]))
    assert cost.item() == pytest.approx(25.0)
    cost.backward()
    assert not predicted.grad[1].any()


def test_landmark_cost_without_labels_is_a_constant():
    """No labelled sample gives a constant zero."""
    cost = landmark_cost(Tensor.parameter(np.ones((2, 1, 2))), np.zeros((2, 1, 2)),
                         np.array([False, False]))
    assert cost.op == "constant"
    assert cost.item() == 0.0


def test_heatmap_landmark_cost_of_flat_maps():
    """Flat maps put probability 1 / (H * W) on every pixel."""
    heatmaps = Tensor.parameter(np.zeros((2, 3, 4, 5)))
    target = np.full((2, 3, 2), 1.0)
    cost = heatmap_landmark_cost(heatmaps, target, np.array([True, False]))
    assert cost.item() == pytest.approx(math.log(20.0))


def test_regression_attribute_cost_is_l1():
    """Regression uses the mean absolute error."""
    cost = attr_cost(Tensor([[1.0], [3.5]]), [2.0, 2.0], Task.Regression)
    assert cost.item() == pytest.approx(1.25)


def test_weight_decay_sums_the_squares():
    """weight_decay() is the sum of squared weights."""
    assert weight_decay([Tensor([1.0, 2.0]), Tensor([[3.0]])]).item() == 14.0


@pytest.mark.parametrize(
    "kwargs,message",
    [
        [{"alpha": -1.0}, "loss weight alpha should be >= 0, not -1.0"],
        [{"lam": -0.5}, "loss weight lam should be >= 0, not -0.5"],
        [{"beta": 0.0}, "beta should be > 0, not 0.0"],
    ],
)
def test_loss_weights_are_validated(kwargs, message):
    """Negative weights and non-positive temperatures are rejected."""
    with pytest.raises(ConfigError) as cm:
        LossWeights(**kwargs)
    assert str(cm.value) == message


def test_landmark_only_objective_builds_no_attribute_graph():
    """Without the attribute and equivariance terms those ops never run."""
    net = build(make_toy_config())
    with OpCounter() as counter:
        report = composite(net, _batch(), LossWeights(alpha=0.0, lam=1.0), include_attr=False)
    assert counter.counts["fully_connected"] == 0
    assert counter.counts["transform_coords"] == 0
    assert counter.counts["softmax_cross_entropy"] == 0
    assert report.attr == 0.0
    assert report.landmark > 0.0
    assert report.n_labeled == 4


def test_unlabelled_batch_without_other_terms_is_a_constant():
    """Landmark-only training on an unlabelled batch has nothing to learn from."""
    split = make_toy_split()
    samples = [s.without_landmarks() for s in split.train[:3]]
    batch = Batch.from_samples(samples, split.num_landmarks)
    net = build(make_toy_config())
    report = composite(net, batch, LossWeights(alpha=0.0, lam=1.0), include_attr=False)
    assert report.loss.op == "constant"
    assert report.total == 0.0
    assert report.n_labeled == 0


def test_equivariance_term_needs_a_sampler():
    """alpha > 0 with unlabelled samples needs a sampler."""
    split = make_toy_split()
    batch = Batch.from_samples(
        [split.train[0], split.train[1].without_landmarks()], split.num_landmarks
    )
    with pytest.raises(ConfigError) as cm:
        composite(build(make_toy_config()), batch, LossWeights(alpha=1.0))
    assert str(cm.value) == "alpha > 0 needs a transform sampler"


def test_equivariance_term_needs_a_differentiable_head():
    """A spatial-softmax Heatmap-MT has no differentiable landmarks."""
    net = build(make_toy_config(Architecture.HeatmapMT))
    with pytest.raises(ConfigError) as cm:
        composite(net, _batch(), LossWeights(alpha=1.0), _identity_sampler(),
                  elt_on_labeled=True)
    assert str(cm.value) == "the equivariance term needs a soft-argmax head on heatmap-mt"


def test_empty_batch():
    """A batch needs samples."""
    with pytest.raises(ContractError) as cm:
        Batch.from_samples([], 2)
    assert str(cm.value) == "a batch needs at least one sample"
    empty = Batch(np.zeros((0, 1, 12, 12)), np.zeros(0, dtype=np.int64),
                  np.zeros((0, 2, 2)), np.zeros(0, dtype=bool))
    with pytest.raises(ContractError) as cm:
        composite(build(make_toy_config()), empty, LossWeights())
    assert str(cm.value) == "composite needs a non-empty batch"


def test_report_recomposes_the_total():
    """The weighted reported terms add up to the loss."""
    net = build(make_toy_config())
    sampler = TransformSampler(rotation_deg=10.0, image_size=(12, 12), seed=0)
    weights = LossWeights(alpha=0.5, lam=2.0, gamma=1e-3)
    report = composite(net, _batch(), weights, sampler, elt_on_labeled=True)
    assert report.attr > 0 and report.elt > 0 and report.landmark > 0 and report.decay > 0
    assert report.recompose() == pytest.approx(report.total, rel=1e-12)
    assert report.n_elt == 4
    report.loss.backward()
    assert all(p.grad is not None for p in net.parameters())


def test_commmt_objective_runs():
    """Comm-MT trains its landmark branch with the squared distance."""
    net = build(make_toy_config(Architecture.CommMT))
    report = composite(net, _batch(), LossWeights(alpha=0.0, lam=1.0))
    report.loss.backward()
    assert net.params["landmark_branch.0.weight"].grad.any()


def test_unlabelled_samples_keep_the_class_term():
    """Samples without landmarks still contribute to the attribute term."""
    sample = make_toy_split().train[0]
    unlabelled = Sample(sample.image, None, sample.label)
    batch = Batch.from_samples([unlabelled], 2)
    assert not batch.landmarks.any()
    report = composite(build(make_toy_config()), batch, LossWeights(alpha=0.0))
    assert report.attr > 0
    assert report.landmark == 0.0
