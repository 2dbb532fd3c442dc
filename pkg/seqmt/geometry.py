"""Affine coordinate transforms for landmarks and images.

A transform is a 2x3 matrix ``[a b tx; c d ty]`` acting on column vectors
``(x, y, 1)`` where x is the column and y the row of a pixel.
"""

# Standard Library Imports
from __future__ import annotations

import logging
import math
from typing import TYPE_CHECKING, Any, Sequence

# Third-Party Imports
import numpy as np
from scipy import ndimage

# Local Imports
from seqmt.autodiff import Tensor, transform_coords
from seqmt.errors import ConfigError, SingularTransformError

if TYPE_CHECKING:
    from seqmt.config import RunConfig

logger = logging.getLogger(__name__)

SINGULAR_TOLERANCE = 1e-9
MAX_CONTAINMENT_TRIES = 50


class AffineTransform:
    """An immutable 2-D affine transform.

    Args:
        matrix (Any): A 2x3 (or 3x3 homogeneous) array-like matrix.
    """

    def __init__(self, matrix: Any) -> None:
        matrix = np.array(matrix, dtype=np.float64)
        if matrix.shape == (3, 3):
            matrix = matrix[:2]
        if matrix.shape != (2, 3):
            raise ValueError(f"an affine matrix should be 2x3, not {matrix.shape}")
        matrix.setflags(write=False)
        self.matrix = matrix

    @classmethod
    def identity(cls) -> AffineTransform:
        """Return the identity transform."""
        return cls([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])

    @classmethod
    def translation(cls, tx: float, ty: float) -> AffineTransform:
        """Return a pure translation."""
        return cls([[1.0, 0.0, tx], [0.0, 1.0, ty]])

    @classmethod
    def rotation(
        cls, degrees: float, center: tuple[float, float] = (0.0, 0.0)
    ) -> AffineTransform:
        """Return a rotation about the given center.

        Positive angles turn +x towards +y, which is clockwise on screen as
        the y axis points down.

        Args:
            degrees (float): The angle.
            center (tuple[float, float]): The (x, y) fixed point.

        Returns:
            AffineTransform: The rotation.
        """
        theta = math.radians(degrees)
        c, s = math.cos(theta), math.sin(theta)
        rotate = cls([[c, -s, 0.0], [s, c, 0.0]])
        return cls.translation(*center) @ rotate @ cls.translation(-center[0], -center[1])

    @classmethod
    def scaling(
        cls, factor: float, center: tuple[float, float] = (0.0, 0.0)
    ) -> AffineTransform:
        """Return an isotropic scaling about the given center."""
        scale = cls([[factor, 0.0, 0.0], [0.0, factor, 0.0]])
        return cls.translation(*center) @ scale @ cls.translation(-center[0], -center[1])

    @property
    def homogeneous(self) -> np.ndarray:
        """np.ndarray: The 3x3 homogeneous form."""
        return np.vstack([self.matrix, [0.0, 0.0, 1.0]])

    @property
    def determinant(self) -> float:
        """float: Determinant of the linear part."""
        (a, b), (c, d) = self.matrix[:, :2]
        return float(a * d - b * c)

    def compose(self, other: AffineTransform) -> AffineTransform:
        """Return the transform applying ``other`` first and then ``self``.

        Args:
            other (AffineTransform): The inner transform.

        Returns:
            AffineTransform: The composition.
        """
        return AffineTransform(self.homogeneous @ other.homogeneous)

    def __matmul__(self, other: AffineTransform) -> AffineTransform:
        return self.compose(other)

    def invert(self) -> AffineTransform:
        """Return the inverse transform.

        Raises:
            SingularTransformError: The transform is not invertible.

        Returns:
            AffineTransform: The inverse.
        """
        det = self.determinant
        if abs(det) <= SINGULAR_TOLERANCE:
            raise SingularTransformError(
                f"affine transform is singular: |det| = {abs(det):.3g}"
            )
        linear_inv = np.linalg.inv(self.matrix[:, :2])
        offset = -linear_inv @ self.matrix[:, 2]
        return AffineTransform(np.column_stack([linear_inv, offset]))

    def apply_to_coords(self, points: Any) -> Any:
        """Map (x, y) coordinates through the transform.

        Args:
            points (Any): An array of shape [..., 2], or a Tensor of shape
                [M, K, 2]. Tensors stay differentiable.

        Returns:
            Any: The mapped coordinates, of the input's type.
        """
        if isinstance(points, Tensor):
            return transform_coords(points, self.matrix)
        points = np.asarray(points, dtype=np.float64)
        return points @ self.matrix[:, :2].T + self.matrix[:, 2]

    def allclose(self, other: AffineTransform, atol: float = 1e-10) -> bool:
        """Elementwise comparison of the matrices."""
        return bool(np.allclose(self.matrix, other.matrix, rtol=0.0, atol=atol))

    def __repr__(self) -> str:
        rows = "; ".join(" ".join(f"{v:.6g}" for v in row) for row in self.matrix)
        return f"AffineTransform([{rows}])"


def compose(first: AffineTransform, second: AffineTransform) -> AffineTransform:
    """Return ``first`` after ``second``, i.e. ``first @ second``."""
    return first.compose(second)


def invert(transform: AffineTransform) -> AffineTransform:
    """Return the inverse of the transform. See AffineTransform.invert."""
    return transform.invert()


def apply_to_coords(transform: AffineTransform, points: Any) -> Any:
    """Map coordinates. See AffineTransform.apply_to_coords."""
    return transform.apply_to_coords(points)


def warp_image(transform: AffineTransform, image: np.ndarray) -> np.ndarray:
    """Return ``T ⊙ I`` by inverse mapping with bilinear sampling.

    Output pixel p takes the bilinear sample of the input at ``T^-1(p)``;
    samples outside the input read as zero.

    Args:
        transform (AffineTransform): The transform T.
        image (np.ndarray): A single-channel image of shape [H, W].

    Raises:
        SingularTransformError: T is not invertible.

    Returns:
        np.ndarray: The warped image, same shape and dtype as the input.
    """
    inverse = transform.invert()
    h, w = image.shape
    rows, cols = np.mgrid[0:h, 0:w].astype(np.float64)
    source = inverse.apply_to_coords(np.stack([cols, rows], axis=-1))
    warped = ndimage.map_coordinates(
        image.astype(np.float64),
        [source[..., 1], source[..., 0]],
        order=1,
        mode="grid-constant",
        cval=0.0,
        prefilter=False,
    )
    return warped.astype(image.dtype)


def warp_batch(transforms: Sequence[AffineTransform], images: np.ndarray) -> np.ndarray:
    """Warp every image of an [N, 1, H, W] batch by its own transform.

    Args:
        transforms (Sequence[AffineTransform]): N transforms.
        images (np.ndarray): The batch.

    Returns:
        np.ndarray: The warped batch.
    """
    out = np.empty_like(images)
    for i, transform in enumerate(transforms):
        out[i, 0] = warp_image(transform, images[i, 0])
    return out


class TransformSampler:
    """Draws random similarity transforms about the image center.

    Args:
        rotation_deg (float): Angles are uniform in [-rotation_deg, rotation_deg].
        scale (tuple[float, float]): Scale factors are uniform in this range.
        translate_frac (float): Offsets are uniform in +/- this fraction of the
            image side.
        image_size (tuple[int, int]): The (H, W) of the images transformed.
        seed (Any): Seed (or seed sequence) of the generator.
    """

    def __init__(
        self,
        rotation_deg: float = 20.0,
        scale: tuple[float, float] = (0.9, 1.1),
        translate_frac: float = 0.1,
        image_size: tuple[int, int] = (60, 60),
        seed: Any = 0,
    ) -> None:
        scale_lo, scale_hi = scale
        if rotation_deg < 0:
            raise ConfigError(f"elt_rotation_deg should be >= 0, not {rotation_deg}")
        if not 0 < scale_lo <= 1.0 <= scale_hi:
            raise ConfigError(
                f"elt scale range should satisfy 0 < lo <= 1 <= hi, "
                f"not [{scale_lo}, {scale_hi}]"
            )
        if translate_frac < 0:
            raise ConfigError(
                f"elt_translate_frac should be >= 0, not {translate_frac}"
            )
        self.rotation_deg = float(rotation_deg)
        self.scale = (float(scale_lo), float(scale_hi))
        self.translate_frac = float(translate_frac)
        self.image_size = image_size
        self.seed = seed
        self.rng = np.random.default_rng(seed)

    @classmethod
    def from_run_config(
        cls, config: RunConfig, image_size: tuple[int, int], seed: Any
    ) -> TransformSampler:
        """Create a sampler from the ``elt_*`` keys of a run configuration.

        Args:
            config (RunConfig): The run configuration.
            image_size (tuple[int, int]): The (H, W) of the images.
            seed (Any): Seed of the generator.

        Returns:
            TransformSampler: The sampler.
        """
        return cls(
            rotation_deg=config.getfloat("elt_rotation_deg", 20.0),
            scale=(
                config.getfloat("elt_scale_lo", 0.9),
                config.getfloat("elt_scale_hi", 1.1),
            ),
            translate_frac=config.getfloat("elt_translate_frac", 0.1),
            image_size=image_size,
            seed=seed,
        )

    @property
    def center(self) -> tuple[float, float]:
        """tuple[float, float]: The (x, y) image center."""
        h, w = self.image_size
        return (w - 1) / 2.0, (h - 1) / 2.0

    def sample_parameters(self) -> tuple[float, float, float, float]:
        """Draw (angle in degrees, scale, dx, dy).

        Returns:
            tuple[float, float, float, float]: The parameters.
        """
        h, w = self.image_size
        angle = self.rng.uniform(-self.rotation_deg, self.rotation_deg)
        scale = self.rng.uniform(*self.scale)
        dx = self.rng.uniform(-self.translate_frac * w, self.translate_frac * w)
        dy = self.rng.uniform(-self.translate_frac * h, self.translate_frac * h)
        return float(angle), float(scale), float(dx), float(dy)

    def to_transform(
        self, angle: float, scale: float, dx: float, dy: float
    ) -> AffineTransform:
        """Build the transform for the given parameters.

        Returns:
            AffineTransform: ``translate(c) R S translate(-c) translate(d)``.
        """
        cx, cy = self.center
        return (
            AffineTransform.translation(cx, cy)
            @ AffineTransform.rotation(angle)
            @ AffineTransform.scaling(scale)
            @ AffineTransform.translation(-cx, -cy)
            @ AffineTransform.translation(dx, dy)
        )

    def sample(self) -> AffineTransform:
        """Draw a transform.

        Returns:
            AffineTransform: The transform.
        """
        return self.to_transform(*self.sample_parameters())

    def sample_containing(
        self, landmarks: np.ndarray, max_tries: int = MAX_CONTAINMENT_TRIES
    ) -> AffineTransform:
        """Draw a transform keeping every landmark inside the frame.

        Transforms moving a landmark outside ``[0, W-1] x [0, H-1]`` are
        rejected. When all tries are rejected the identity is returned.

        Args:
            landmarks (np.ndarray): Coordinates of shape [K, 2].
            max_tries (int): Number of draws before giving up.

        Returns:
            AffineTransform: The transform.
        """
        h, w = self.image_size
        for _ in range(max_tries):
            transform = self.sample()
            moved = transform.apply_to_coords(landmarks)
            if (
                (moved[:, 0] >= 0).all()
                and (moved[:, 0] <= w - 1).all()
                and (moved[:, 1] >= 0).all()
                and (moved[:, 1] <= h - 1).all()
            ):
                return transform
        logger.debug(
            "no in-frame transform after %d tries, using the identity", max_tries
        )
        return AffineTransform.identity()
