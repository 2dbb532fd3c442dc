"""Shared fixtures."""

# Third-Party Imports
import numpy as np
import pytest

# Local Imports
from seqmt.config import Architecture, HeadKind
from seqmt.datasets import DatasetSplit, Sample
from seqmt.models import NetworkConfig, conv, dense, head


def make_toy_split(n_train=12, n_eval=6, size=12, num_landmarks=2, num_classes=3, seed=0):
    """Return a split of random images with random in-frame landmarks."""
    rng = np.random.default_rng(seed)

    def samples(n):
        return [
            Sample(
                image=rng.uniform(0.0, 1.0, size=(size, size)).astype(np.float32),
                landmarks=rng.uniform(1.0, size - 2.0, size=(num_landmarks, 2)),
                label=i % num_classes,
            )
            for i in range(n)
        ]

    return DatasetSplit(
        "toy",
        samples(n_train),
        samples(n_eval),
        samples(n_eval),
        num_classes=num_classes,
        num_landmarks=num_landmarks,
        image_size=(size, size),
    )


def make_toy_config(architecture=Architecture.SeqMT, size=12):
    """Return a tiny network config over 12x12 images, K=2 and 3 classes."""
    if architecture is Architecture.CommMT:
        return NetworkConfig(
            name="toy-commmt",
            architecture=architecture,
            input_size=(size, size, 1),
            num_landmarks=2,
            num_classes=3,
            localization=conv(3, 2) + dense(8),
            attribute=dense(3, relu=False),
            landmark_branch=dense(4, relu=False),
        )
    if architecture is Architecture.HeatmapMT:
        return NetworkConfig(
            name="toy-heatmapmt",
            architecture=architecture,
            input_size=(size, size, 1),
            num_landmarks=2,
            num_classes=3,
            localization=conv(3, 4) + conv(3, 2) + head(HeadKind.SpatialSoftmax),
            attribute=dense(8) + dense(3, relu=False),
        )
    return NetworkConfig(
        name="toy-seqmt",
        architecture=Architecture.SeqMT,
        input_size=(size, size, 1),
        num_landmarks=2,
        num_classes=3,
        localization=conv(3, 4) + conv(3, 2) + head(HeadKind.SoftArgmax, 1.0),
        attribute=dense(8) + dense(3, relu=False),
    )


@pytest.fixture
def toy_split():
    """A 12/6/6 split of random 12x12 images."""
    return make_toy_split()


@pytest.fixture
def toy_config():
    """A two conv layer Seq-MT config."""
    return make_toy_config()
