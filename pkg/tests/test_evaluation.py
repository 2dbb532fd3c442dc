"""Metric and AMI related tests are situated here."""

# Standard Library Imports
import itertools

# Third-Party Imports
import numpy as np
import pytest

# Local Imports
from conftest import make_toy_split
from seqmt.config import Regime
from seqmt.errors import ContractError, DataError
from seqmt.evaluation import (
    EvalReport,
    adjusted_mutual_info,
    ami,
    ami_per_landmark,
    bin_uniform,
    class_accuracy,
    consistency_from_landmarks,
    contingency,
    coordinate_independence,
    ground_truth,
    landmark_report,
    mutual_info,
    predict_in_batches,
    result_row,
    summarize_results,
)


def test_landmark_report_offset():
    """An offset of (3, 4) is an error of 5 pixels."""
    target = np.random.default_rng(0).uniform(0, 50, size=(6, 2, 2))
    report = landmark_report(target + [3.0, 4.0], target, normalizer=50.0)
    assert report.mean_error == pytest.approx(5.0)
    assert report.per_landmark == pytest.approx([5.0, 5.0])
    assert report.normalized_error == pytest.approx(10.0)


def test_landmark_report_normalizer_should_be_positive():
    """The normalizer of the percent error must be positive."""
    target = np.zeros((1, 1, 2))
    with pytest.raises(ContractError) as cm:
        landmark_report(target, target, normalizer=0)
    assert str(cm.value) == "normalizer should be > 0, not 0"


def test_class_accuracy_breaks_ties_to_the_lowest_index():
    """argmax ties go to the first class."""
    logits = np.array([[1.0, 1.0], [0.0, 2.0], [3.0, 0.0]])
    assert class_accuracy(logits, [0, 1, 1]) == pytest.approx(2.0 / 3.0)
    with pytest.raises(ContractError) as cm:
        class_accuracy(np.zeros((0, 2)), [])
    assert str(cm.value) == "class accuracy of an empty set"


def test_consistency_from_landmarks():
    """Channels tracking the same shape everywhere are fully consistent."""
    shapes = np.array([[[10.0, 10.0], [40.0, 40.0]]] * 4)
    predicted = shapes + 1.0
    assert consistency_from_landmarks(predicted, shapes) == 1.0
    predicted[:2] = predicted[:2, ::-1].copy()
    assert consistency_from_landmarks(predicted, shapes) == 0.5


def test_ground_truth_needs_labelled_samples():
    """Evaluation needs GT landmarks on every sample."""
    samples = make_toy_split().test[:3]
    samples[1] = samples[1].without_landmarks()
    with pytest.raises(DataError) as cm:
        ground_truth(samples)
    assert str(cm.value) == (
        "1 of 3 samples have no ground-truth landmarks, first is sample 1"
    )


def test_predict_in_batches():
    """Batched prediction concatenates the outputs in order."""
    inputs = np.arange(10.0)
    np.testing.assert_array_equal(predict_in_batches(lambda x: x * 2, inputs, 3), inputs * 2)
    with pytest.raises(ContractError) as cm:
        predict_in_batches(lambda x: x, np.zeros(0))
    assert str(cm.value) == "nothing to predict"


def test_bin_uniform():
    """Values fall into equal-width levels over their range."""
    np.testing.assert_array_equal(bin_uniform([0.0, 0.5, 0.99, 1.0], bins=2), [0, 1, 1, 1])
    np.testing.assert_array_equal(bin_uniform([3.0, 3.0, 3.0]), [0, 0, 0])
    with pytest.raises(ContractError) as cm:
        bin_uniform([1.0, 2.0], bins=1)
    assert str(cm.value) == "bins should be >= 2, not 1"


def test_contingency_counts_pairs():
    """contingency() counts co-occurrences over the distinct values."""
    table = contingency([5, 5, 7, 7, 7], ["a", "b", "b", "b", "a"])
    np.testing.assert_array_equal(table, [[1, 1], [1, 2]])


def test_mutual_info_of_identical_labelings_is_the_entropy():
    """I(X; X) = H(X)."""
    table = contingency([0, 0, 1, 1], [0, 0, 1, 1])
    assert mutual_info(table) == pytest.approx(np.log(2.0))


def test_ami_matches_enumerated_chance_correction():
    """AMI is MI corrected by its mean over all relabelings."""
    first = np.array([0, 0, 1, 1, 2, 3, 3])
    second = np.array([0, 1, 1, 2, 3, 3, 0])
    assert contingency(first, second).shape == (4, 4)
    expected_mi = np.mean(
        [
            mutual_info(contingency(first, second[list(perm)]))
            for perm in itertools.permutations(range(len(second)))
        ]
    )
    mi = mutual_info(contingency(first, second))
    h_first = mutual_info(contingency(first, first))
    h_second = mutual_info(contingency(second, second))
    expected = (mi - expected_mi) / (max(h_first, h_second) - expected_mi)
    assert adjusted_mutual_info(first, second) == pytest.approx(expected, abs=1e-9)


def test_ami_labelings_must_match_in_length():
    """adjusted_mutual_info() refuses labelings of different lengths."""
    with pytest.raises(ContractError) as cm:
        adjusted_mutual_info([0, 1, 1], [0, 1])
    assert str(cm.value) == "labelings differ in length: (3,) != (2,)"


def test_ami_of_a_labeling_with_itself_is_one():
    """Identical labelings score 1."""
    labels = np.random.default_rng(0).integers(0, 5, size=200)
    assert adjusted_mutual_info(labels, labels) == pytest.approx(1.0, abs=1e-9)
    assert adjusted_mutual_info([1, 1, 1], [2, 2, 2]) == 1.0


def test_ami_of_independent_labelings_is_near_zero():
    """Chance agreement is adjusted away."""
    rng = np.random.default_rng(1)
    first = rng.integers(0, 5, size=2000)
    second = rng.integers(0, 20, size=2000)
    assert abs(adjusted_mutual_info(first, second)) <= 0.01


def test_ami_ranks_informative_landmarks_first():
    """A landmark whose x follows the class scores higher than a random one."""
    rng = np.random.default_rng(2)
    labels = rng.integers(0, 5, size=2000)
    landmarks = rng.uniform(0.0, 60.0, size=(2000, 2, 2))
    landmarks[:, 0, 0] = labels * 10.0 + rng.uniform(0.0, 1.0, size=2000)
    scores = ami_per_landmark(labels, landmarks)
    assert scores[0] > 0.5
    assert abs(scores[1]) <= 0.02
    mean, best = ami(rng.permutation(labels), landmarks)
    assert abs(mean) <= 0.02
    assert best <= 0.03


def test_ami_needs_a_varying_attribute():
    """A constant attribute carries no information to score."""
    with pytest.raises(DataError) as cm:
        ami_per_landmark([0, 0, 0], np.zeros((3, 1, 2)))
    assert str(cm.value) == "AMI needs at least two distinct attribute values"


def test_ami_checks_the_landmark_shape():
    """One landmark set per attribute value is required."""
    with pytest.raises(ContractError) as cm:
        ami_per_landmark([0, 1, 0], np.zeros((2, 1, 2)))
    assert str(cm.value) == "expected [3, K, 2] landmarks, got shape (2, 1, 2)"


def test_coordinate_independence():
    """Independent coordinates score about 0, identical ones 1."""
    rng = np.random.default_rng(3)
    landmarks = rng.uniform(0.0, 60.0, size=(2000, 1, 2))
    assert abs(coordinate_independence(landmarks)) <= 0.01
    landmarks[:, 0, 1] = landmarks[:, 0, 0]
    assert coordinate_independence(landmarks) == pytest.approx(1.0, abs=1e-9)


def test_result_row():
    """A finished run becomes one flat result row."""
    row = result_row(Regime.LELT, 0.05, 1, EvalReport(mean_error=1.5, epoch=3))
    assert row == {
        "regime": "L+ELT",
        "fraction": "0.05",
        "seed": "1",
        "epoch": "3",
        "test_pixel_error": "1.5",
        "test_class_acc": "",
    }


def test_summarize_results_takes_medians_over_seeds():
    """Rows are grouped by regime and fraction."""
    rows = [
        {"regime": "L", "fraction": "0.5", "seed": str(seed), "test_pixel_error": str(error),
         "test_class_acc": ""}
        for seed, error in enumerate([1.0, 3.0, 2.0])
    ]
    rows.append({"regime": "A", "fraction": "0.05", "seed": "0", "test_pixel_error": "",
                 "test_class_acc": "0.8"})
    summary = summarize_results(rows)
    assert [(s["regime"], s["fraction"]) for s in summary] == [("A", 0.05), ("L", 0.5)]
    assert summary[0]["median_test_pixel_error"] is None
    assert summary[0]["median_test_class_acc"] == 0.8
    assert summary[1]["runs"] == 3
    assert summary[1]["median_test_pixel_error"] == 2.0
