"""Affine transform related tests are situated here."""

# Third-Party Imports
import numpy as np
import pytest

# Local Imports
from seqmt.autodiff import Tensor
from seqmt.config import RunConfig
from seqmt.errors import ConfigError, SingularTransformError
from seqmt.geometry import (
    AffineTransform,
    TransformSampler,
    apply_to_coords,
    compose,
    invert,
    warp_batch,
    warp_image,
)


def test_rotation_turns_x_towards_y():
    """A 90 degree rotation maps +x onto +y."""
    rotation = AffineTransform.rotation(90.0)
    np.testing.assert_allclose(rotation.apply_to_coords([[1.0, 0.0]]), [[0.0, 1.0]], atol=1e-12)


def test_rotation_about_a_center_keeps_the_center():
    """The rotation center is a fixed point."""
    rotation = AffineTransform.rotation(33.0, center=(4.0, 7.0))
    np.testing.assert_allclose(rotation.apply_to_coords([[4.0, 7.0]]), [[4.0, 7.0]], atol=1e-12)


def test_compose_applies_the_right_operand_first():
    """compose(a, b) applies b first."""
    scale = AffineTransform.scaling(2.0)
    shift = AffineTransform.translation(1.0, 0.0)
    point = [[1.0, 1.0]]
    np.testing.assert_allclose(apply_to_coords(compose(shift, scale), point), [[3.0, 2.0]])
    np.testing.assert_allclose(apply_to_coords(scale @ shift, point), [[4.0, 2.0]])


def test_invert_undoes_the_transform():
    """T^-1 @ T is the identity."""
    transform = AffineTransform([[1.2, -0.3, 4.0], [0.5, 0.9, -2.0]])
    assert (invert(transform) @ transform).allclose(AffineTransform.identity())


def test_invert_singular_transform():
    """Singular transforms cannot be inverted."""
    with pytest.raises(SingularTransformError) as cm:
        AffineTransform([[1.0, 2.0, 0.0], [2.0, 4.0, 0.0]]).invert()
    assert str(cm.value) == "affine transform is singular: |det| = 0"


def test_matrix_shape_is_checked():
    """Only 2x3 and 3x3 matrices are accepted."""
    assert AffineTransform(np.eye(3)).allclose(AffineTransform.identity())
    with pytest.raises(ValueError) as cm:
        AffineTransform(np.eye(2))
    assert str(cm.value) == "an affine matrix should be 2x3, not (2, 2)"


def test_apply_to_tensor_stays_differentiable():
    """Coordinates held in a Tensor are mapped by a graph operation."""
    points = Tensor.parameter(np.ones((2, 3, 2)))
    moved = AffineTransform.translation(1.0, -1.0).apply_to_coords(points)
    assert isinstance(moved, Tensor)
    np.testing.assert_allclose(moved.values[..., 0], 2.0)
    np.testing.assert_allclose(moved.values[..., 1], 0.0)
    moved.sum().backward()
    np.testing.assert_allclose(points.grad, np.ones((2, 3, 2)))


def test_warp_identity_is_exact():
    """Warping by the identity returns the same image."""
    image = np.random.default_rng(0).uniform(size=(9, 7)).astype(np.float32)
    warped = warp_image(AffineTransform.identity(), image)
    assert warped.dtype == np.float32
    np.testing.assert_array_equal(warped, image)


def test_warp_moves_content_with_the_transform():
    """A pixel at p moves to T(p) and uncovered pixels read zero."""
    image = np.zeros((6, 6))
    image[2, 3] = 1.0
    warped = warp_image(AffineTransform.translation(1.0, 2.0), image)
    assert warped[4, 4] == pytest.approx(1.0)
    assert warped.sum() == pytest.approx(1.0)
    assert warp_image(AffineTransform.translation(0.0, 10.0), image).sum() == 0.0


def test_warp_and_coordinates_agree():
    """The landmark of a warped image is the transformed landmark."""
    image = np.zeros((11, 11))
    image[3, 7] = 1.0
    transform = AffineTransform.rotation(90.0, center=(5.0, 5.0))
    x, y = transform.apply_to_coords([[7.0, 3.0]])[0]
    warped = warp_image(transform, image)
    assert warped[int(round(y)), int(round(x))] == pytest.approx(1.0)


def test_warp_batch_uses_one_transform_per_image():
    """warp_batch() warps each [1, H, W] slice by its own transform."""
    images = np.zeros((2, 1, 5, 5))
    images[:, 0, 2, 2] = 1.0
    out = warp_batch(
        [AffineTransform.translation(1.0, 0.0), AffineTransform.translation(0.0, 1.0)],
        images,
    )
    assert out[0, 0, 2, 3] == pytest.approx(1.0)
    assert out[1, 0, 3, 2] == pytest.approx(1.0)


def test_sampler_is_deterministic():
    """Equal seeds draw equal transforms."""
    first = TransformSampler(image_size=(40, 40), seed=[7, 2])
    second = TransformSampler(image_size=(40, 40), seed=[7, 2])
    for _ in range(5):
        assert first.sample().allclose(second.sample())


def test_sampler_parameters_stay_in_range():
    """Sampled parameters respect the configured ranges."""
    sampler = TransformSampler(
        rotation_deg=10.0, scale=(0.8, 1.2), translate_frac=0.05, image_size=(20, 40), seed=1
    )
    for _ in range(200):
        angle, scale, dx, dy = sampler.sample_parameters()
        assert -10.0 <= angle <= 10.0
        assert 0.8 <= scale <= 1.2
        assert abs(dx) <= 2.0
        assert abs(dy) <= 1.0


def test_zero_ranges_give_the_identity():
    """Without rotation, scaling and translation the sampler is the identity."""
    sampler = TransformSampler(rotation_deg=0.0, scale=(1.0, 1.0), translate_frac=0.0)
    assert sampler.sample().allclose(AffineTransform.identity())


def test_sample_containing_keeps_landmarks_in_the_frame():
    """Accepted transforms keep every landmark inside the image."""
    sampler = TransformSampler(rotation_deg=45.0, image_size=(30, 30), seed=3)
    landmarks = np.array([[2.0, 2.0], [27.0, 27.0], [15.0, 1.0]])
    for _ in range(20):
        moved = sampler.sample_containing(landmarks).apply_to_coords(landmarks)
        assert (moved >= 0.0).all() and (moved <= 29.0).all()


def test_sample_containing_falls_back_to_the_identity():
    """When no draw keeps the landmarks in the frame the identity is used."""
    sampler = TransformSampler(rotation_deg=0.0, scale=(1.0, 1.0), translate_frac=0.0, seed=0)
    outside = np.array([[-5.0, -5.0]])
    assert sampler.sample_containing(outside, max_tries=3).allclose(AffineTransform.identity())


@pytest.mark.parametrize(
    "kwargs,message",
    [
        [{"rotation_deg": -1.0}, "elt_rotation_deg should be >= 0, not -1.0"],
        [
            {"scale": (1.1, 1.2)},
            "elt scale range should satisfy 0 < lo <= 1 <= hi, not [1.1, 1.2]",
        ],
        [{"translate_frac": -0.1}, "elt_translate_frac should be >= 0, not -0.1"],
    ],
)
def test_sampler_ranges_are_validated(kwargs, message):
    """Invalid ranges are configuration errors."""
    with pytest.raises(ConfigError) as cm:
        TransformSampler(**kwargs)
    assert str(cm.value) == message


def test_sampler_from_run_config():
    """The elt_* keys configure the sampler."""
    config = RunConfig.from_string(
        "elt_rotation_deg = 5\nelt_scale_lo = 0.95\nelt_translate_frac = 0\n"
    )
    sampler = TransformSampler.from_run_config(config, (60, 60), seed=0)
    assert sampler.rotation_deg == 5.0
    assert sampler.scale == (0.95, 1.1)
    assert sampler.translate_frac == 0.0
    assert sampler.center == (29.5, 29.5)
