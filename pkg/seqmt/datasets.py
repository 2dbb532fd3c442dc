"""Procedural Shapes and Blocks datasets and semi-supervised label masking.

Shapes images hold one filled triangle and one filled square; the class says
which of the two is nearer the top-left corner. Blocks images hold a chain
of five squares behind a triangle head, the class is the chain's direction
sequence. Every sample is drawn from its own generator seeded with
``(seed, split index, sample index)`` so the output does not depend on the
order samples are generated in.
"""

# Standard Library Imports
from __future__ import annotations

import enum
import itertools
import logging
import math
from collections import Counter
from dataclasses import dataclass, field, replace
from typing import Sequence

# Third-Party Imports
import numpy as np
from PIL import Image, ImageDraw

# Local Imports
from seqmt.errors import DataError, GenerationError
from seqmt.geometry import AffineTransform

logger = logging.getLogger(__name__)

SPLIT_NAMES = ("train", "valid", "test")
SUPERSAMPLING = 4
MAX_TRIES = 100
ALLOWED_FRACTIONS = (0.01, 0.05, 0.10, 0.20, 0.50, 1.0)

SHAPES_IMAGE_SIZE = 60
SHAPES_RADIUS_RANGE = (8.0, 20.0)
SHAPES_AMBIGUITY_GUARD = 2.0
SHAPES_MIN_GAP = 1.0

BLOCKS_IMAGE_SIZE = 60
BLOCKS_NUM_CLASSES = 15
BLOCKS_UNIT_RANGE = (0.1, 1.0 / 6.0)
BLOCKS_SQUARE_SIDE = 0.9
DEFAULT_LANDMARK_SUBSET = (0, 1, 2, 3, 4)


class Direction(enum.Enum):
    """Steps of a Blocks chain, in cell units with y pointing down."""

    Up = (0, -1)
    Down = (0, 1)
    Left = (-1, 0)
    Right = (1, 0)

    @property
    def opposite(self) -> Direction:
        """Direction: The reverse step."""
        dx, dy = self.value
        return Direction((-dx, -dy))


DIRECTION_ORDER = (Direction.Up, Direction.Down, Direction.Left, Direction.Right)


@dataclass
class Sample:
    """One image with its class label and, when labelled, its landmarks.

    Args:
        image (np.ndarray): float32 array of shape [H, W] with values in [0, 1].
        landmarks (None | np.ndarray): float64 array of shape [K, 2] holding
            (x, y) pairs, or None when the landmarks are not labelled.
        label (int): The class label.
    """

    image: np.ndarray
    landmarks: None | np.ndarray
    label: int

    def __post_init__(self) -> None:
        if self.landmarks is not None:
            h, w = self.image.shape
            x, y = self.landmarks[:, 0], self.landmarks[:, 1]
            if (x < 0).any() or (x > w - 1).any() or (y < 0).any() or (y > h - 1).any():
                raise DataError("labelled landmarks should lie inside the image")

    @property
    def labeled(self) -> bool:
        """bool: True if the sample carries landmarks."""
        return self.landmarks is not None

    def without_landmarks(self) -> Sample:
        """Return a copy with the landmarks removed."""
        return replace(self, landmarks=None)


@dataclass
class DatasetSplit:
    """The train, valid and test samples of one dataset."""

    name: str
    train: list[Sample]
    valid: list[Sample]
    test: list[Sample]
    num_classes: int
    num_landmarks: int
    image_size: tuple[int, int] = field(default=(60, 60))

    @property
    def n(self) -> int:
        """int: Number of training samples."""
        return len(self.train)

    @property
    def s(self) -> int:
        """int: Number of training samples with labelled landmarks."""
        return sum(1 for sample in self.train if sample.labeled)

    def splits(self) -> dict[str, list[Sample]]:
        """Return the samples keyed by split name."""
        return {"train": self.train, "valid": self.valid, "test": self.test}


def class_histogram(samples: Sequence[Sample], num_classes: int) -> list[int]:
    """Count the samples of every class.

    Args:
        samples (Sequence[Sample]): The samples.
        num_classes (int): Number of classes.

    Returns:
        list[int]: One count per class.
    """
    counts = Counter(sample.label for sample in samples)
    return [counts.get(c, 0) for c in range(num_classes)]


def stack_images(samples: Sequence[Sample]) -> np.ndarray:
    """Stack sample images into a float64 batch of shape [N, 1, H, W]."""
    return np.stack([s.image for s in samples]).astype(np.float64)[:, None]


def sample_rng(seed: int, split_index: int, sample_index: int) -> np.random.Generator:
    """Return the generator owned by one sample."""
    return np.random.default_rng([seed, split_index, sample_index])


def rasterize(polygons: Sequence[np.ndarray], size: tuple[int, int]) -> np.ndarray:
    """Fill the given polygons white on black with 4x4 supersampling.

    Pixel (row, col) covers ``[col - 0.5, col + 0.5] x [row - 0.5, row + 0.5]``.

    Args:
        polygons (Sequence[np.ndarray]): Vertex arrays of shape [V, 2] in (x, y)
            pixel coordinates.
        size (tuple[int, int]): The (H, W) of the image.

    Returns:
        np.ndarray: float32 coverage image of shape [H, W].
    """
    h, w = size
    canvas = Image.new("L", (w * SUPERSAMPLING, h * SUPERSAMPLING), 0)
    draw = ImageDraw.Draw(canvas)
    for polygon in polygons:
        fine = (np.asarray(polygon, dtype=np.float64) + 0.5) * SUPERSAMPLING - 0.5
        draw.polygon([(float(x), float(y)) for x, y in fine], fill=255)
    coverage = np.asarray(canvas, dtype=np.float32) / np.float32(255.0)
    return coverage.reshape(h, SUPERSAMPLING, w, SUPERSAMPLING).mean(axis=(1, 3))


def _regular_polygon(sides: int, radius: float, angle_deg: float) -> np.ndarray:
    angles = np.radians(angle_deg) + 2.0 * np.pi * np.arange(sides) / sides
    return radius * np.stack([np.cos(angles), np.sin(angles)], axis=1)


def _placement_range(offsets: np.ndarray, length: int, axis: int) -> tuple[float, float]:
    return -offsets[:, axis].min(), (length - 1) - offsets[:, axis].max()


def polygons_overlap(first: np.ndarray, second: np.ndarray, gap: float = 0.0) -> bool:
    """Separating axis test for two convex polygons.

    Args:
        first (np.ndarray): Vertices of shape [V, 2].
        second (np.ndarray): Vertices of shape [U, 2].
        gap (float): Polygons closer than this along every axis count as
            overlapping.

    Returns:
        bool: True if no separating axis exists.
    """
    for polygon in (first, second):
        edges = np.roll(polygon, -1, axis=0) - polygon
        normals = np.stack([-edges[:, 1], edges[:, 0]], axis=1)
        normals /= np.linalg.norm(normals, axis=1, keepdims=True)
        for normal in normals:
            a, b = first @ normal, second @ normal
            if a.max() + gap <= b.min() or b.max() + gap <= a.min():
                return False
    return True


def _draw_shapes_sample(rng: np.random.Generator, size: int) -> Sample:
    for _ in range(MAX_TRIES):
        placed = []
        for sides in (3, 4):
            radius = rng.uniform(*SHAPES_RADIUS_RANGE)
            offsets = _regular_polygon(sides, radius, rng.uniform(0.0, 360.0))
            cx = rng.uniform(*_placement_range(offsets, size, 0))
            cy = rng.uniform(*_placement_range(offsets, size, 1))
            placed.append((np.array([cx, cy]), offsets + [cx, cy]))
        (triangle_center, triangle), (square_center, square) = placed
        if polygons_overlap(triangle, square, gap=SHAPES_MIN_GAP):
            continue
        d_triangle = float(np.linalg.norm(triangle_center))
        d_square = float(np.linalg.norm(square_center))
        if abs(d_triangle - d_square) < SHAPES_AMBIGUITY_GUARD:
            continue
        return Sample(
            image=rasterize([triangle, square], (size, size)),
            landmarks=np.stack([triangle_center, square_center]),
            label=0 if d_triangle < d_square else 1,
        )
    raise GenerationError(
        f"could not place a non-overlapping triangle and square after {MAX_TRIES} tries"
    )


def shapes_label(landmarks: np.ndarray) -> int:
    """Recompute the Shapes class from the (triangle, square) centroids."""
    d_triangle, d_square = np.linalg.norm(landmarks, axis=1)
    return 0 if d_triangle < d_square else 1


def gen_shapes(n: int, seed: int, image_size: int = SHAPES_IMAGE_SIZE) -> DatasetSplit:
    """Generate the Shapes dataset.

    Args:
        n (int): Number of training samples; valid and test get ``n // 4``
            (at least one) each.
        seed (int): The seed.
        image_size (int): Image side in pixels.

    Raises:
        DataError: n is smaller than 1.
        GenerationError: A sample could not be placed.

    Returns:
        DatasetSplit: The dataset, with K=2 landmarks (triangle, square).
    """
    if n < 1:
        raise DataError(f"shapes needs n >= 1, not {n}")
    sizes = (n, max(1, n // 4), max(1, n // 4))
    splits = [
        [
            _draw_shapes_sample(sample_rng(seed, split_index, i), image_size)
            for i in range(count)
        ]
        for split_index, count in enumerate(sizes)
    ]
    logger.debug("generated shapes %s with seed %d", sizes, seed)
    return DatasetSplit(
        "shapes", *splits, num_classes=2, num_landmarks=2,
        image_size=(image_size, image_size),
    )


class BlocksClassTable:
    """The direction sequences defining the Blocks classes.

    The table holds the lexicographically smallest (up < down < left < right)
    five-step sequences that never reverse, never revisit a cell and start
    with ``up``. Figures are rotated freely, so sequences equal up to a
    rotation would be indistinguishable; starting with ``up`` picks one
    representative per rotation class.

    Args:
        sequences (Sequence[Sequence[Direction]]): The class sequences.
    """

    def __init__(self, sequences: Sequence[Sequence[Direction]]) -> None:
        self.sequences = tuple(tuple(s) for s in sequences)
        if len(set(self.sequences)) != len(self.sequences):
            raise DataError("Blocks class sequences should be distinct")

    @classmethod
    def canonical(cls, num_classes: int = BLOCKS_NUM_CLASSES) -> BlocksClassTable:
        """Build the canonical table."""
        sequences = []
        for steps in itertools.product(DIRECTION_ORDER, repeat=5):
            if steps[0] is not Direction.Up:
                continue
            if any(b is a.opposite for a, b in zip(steps, steps[1:])):
                continue
            if len(set(map(tuple, cells_of(steps)))) != 6:
                continue
            sequences.append(steps)
            if len(sequences) == num_classes:
                break
        return cls(sequences)

    def __len__(self) -> int:
        return len(self.sequences)

    def __getitem__(self, index: int) -> tuple[Direction, ...]:
        return self.sequences[index]

    def names(self) -> list[str]:
        """Return a compact name per class, e.g. ``UULDD``."""
        return ["".join(d.name[0] for d in s) for s in self.sequences]


def cells_of(steps: Sequence[Direction]) -> np.ndarray:
    """Return the 6 cell positions (head first) of a direction sequence."""
    moves = np.array([(0, 0)] + [d.value for d in steps], dtype=np.float64)
    return np.cumsum(moves, axis=0)


BLOCKS_CLASSES = BlocksClassTable.canonical()


def canonical_blocks(class_index: int) -> tuple[list[np.ndarray], np.ndarray]:
    """Return the block polygons and block centers in unit cell coordinates.

    The figure is centered on the mean of its cell centers. Block 0 is the
    triangle head, blocks 1 to 5 are the squares in sequence order. The
    triangle's base faces the first square and its center is its centroid.

    Args:
        class_index (int): Index into the class table.

    Returns:
        tuple[list[np.ndarray], np.ndarray]: Six polygons and the [6, 2] centers.
    """
    steps = BLOCKS_CLASSES[class_index]
    cells = cells_of(steps)
    cells -= cells.mean(axis=0)
    half = BLOCKS_SQUARE_SIDE / 2.0
    forward = np.array(steps[0].value, dtype=np.float64)
    side = np.array([-forward[1], forward[0]])
    head = cells[0]
    triangle = np.stack(
        [head - half * forward, head + half * forward + half * side,
         head + half * forward - half * side]
    )
    corners = np.array([[-half, -half], [half, -half], [half, half], [-half, half]])
    polygons = [triangle] + [cell + corners for cell in cells[1:]]
    centers = np.vstack([triangle.mean(axis=0), cells[1:]])
    return polygons, centers


def blocks_polygons(
    class_index: int, transform: AffineTransform
) -> tuple[list[np.ndarray], np.ndarray]:
    """Return the six block polygons and centers mapped into the image."""
    polygons, centers = canonical_blocks(class_index)
    return (
        [transform.apply_to_coords(p) for p in polygons],
        transform.apply_to_coords(centers),
    )


def render_blocks(
    class_index: int,
    transform: AffineTransform,
    size: tuple[int, int] = (BLOCKS_IMAGE_SIZE, BLOCKS_IMAGE_SIZE),
    landmark_subset: Sequence[int] = DEFAULT_LANDMARK_SUBSET,
) -> tuple[np.ndarray, np.ndarray]:
    """Render a Blocks figure placed by the given cell-to-pixel transform.

    Args:
        class_index (int): Index into the class table.
        transform (AffineTransform): Maps unit cell coordinates to pixels.
        size (tuple[int, int]): The (H, W) of the image.
        landmark_subset (Sequence[int]): Blocks carrying landmarks.

    Returns:
        tuple[np.ndarray, np.ndarray]: The image and the [K, 2] landmarks.
    """
    polygons, centers = blocks_polygons(class_index, transform)
    return rasterize(polygons, size), centers[list(landmark_subset)]


def place_blocks(
    rng: np.random.Generator, class_index: int, size: int
) -> AffineTransform:
    """Draw a unit size, rotation and in-frame translation for a figure.

    Args:
        rng (np.random.Generator): The sample's generator.
        class_index (int): Index into the class table.
        size (int): Image side in pixels.

    Raises:
        GenerationError: No contained placement was found.

    Returns:
        AffineTransform: The cell-to-pixel transform.
    """
    polygons, _ = canonical_blocks(class_index)
    vertices = np.vstack(polygons)
    lo, hi = BLOCKS_UNIT_RANGE
    for _ in range(MAX_TRIES):
        unit = rng.uniform(lo * size, hi * size)
        shape = AffineTransform.rotation(rng.uniform(0.0, 360.0)) @ AffineTransform.scaling(unit)
        offsets = shape.apply_to_coords(vertices)
        x_lo, x_hi = _placement_range(offsets, size, 0)
        y_lo, y_hi = _placement_range(offsets, size, 1)
        if x_lo > x_hi or y_lo > y_hi:
            continue
        return AffineTransform.translation(rng.uniform(x_lo, x_hi), rng.uniform(y_lo, y_hi)) @ shape
    raise GenerationError(
        f"could not fit Blocks class {class_index} into {size}x{size} "
        f"after {MAX_TRIES} tries"
    )


def gen_blocks(
    n_per_split: int,
    seed: int,
    n_valid: None | int = None,
    n_test: None | int = None,
    image_size: int = BLOCKS_IMAGE_SIZE,
    landmark_subset: Sequence[int] = DEFAULT_LANDMARK_SUBSET,
) -> DatasetSplit:
    """Generate the Blocks dataset.

    Class labels are stratified: every split holds each class equally often
    within one sample.

    Args:
        n_per_split (int): Number of training samples, and of valid/test
            samples unless given separately.
        seed (int): The seed.
        n_valid (None | int): Number of validation samples.
        n_test (None | int): Number of test samples.
        image_size (int): Image side in pixels.
        landmark_subset (Sequence[int]): Which blocks (0 = triangle, 1 to 5 =
            squares in sequence order) carry landmarks.

    Raises:
        DataError: Fewer samples than classes, or an invalid landmark subset.
        GenerationError: A figure could not be placed.

    Returns:
        DatasetSplit: The dataset.
    """
    sizes = (
        n_per_split,
        n_per_split if n_valid is None else n_valid,
        n_per_split if n_test is None else n_test,
    )
    for name, count in zip(SPLIT_NAMES, sizes):
        if count < BLOCKS_NUM_CLASSES:
            raise DataError(
                f"blocks needs at least {BLOCKS_NUM_CLASSES} {name} samples "
                f"(one per class), not {count}"
            )
    landmark_subset = tuple(int(i) for i in landmark_subset)
    if not landmark_subset or len(set(landmark_subset)) != len(landmark_subset) or not all(
        0 <= i <= 5 for i in landmark_subset
    ):
        raise DataError(
            f"blocks_landmark_subset should hold distinct block indices in [0, 5], "
            f"not {list(landmark_subset)}"
        )
    splits = []
    for split_index, count in enumerate(sizes):
        labels = np.random.default_rng([seed, split_index]).permutation(
            np.arange(count) % BLOCKS_NUM_CLASSES
        )
        samples = []
        for i, label in enumerate(labels):
            transform = place_blocks(sample_rng(seed, split_index, i), int(label), image_size)
            image, landmarks = render_blocks(
                int(label), transform, (image_size, image_size), landmark_subset
            )
            samples.append(Sample(image=image, landmarks=landmarks, label=int(label)))
        splits.append(samples)
    logger.debug("generated blocks %s with seed %d", sizes, seed)
    return DatasetSplit(
        "blocks", *splits, num_classes=BLOCKS_NUM_CLASSES,
        num_landmarks=len(landmark_subset), image_size=(image_size, image_size),
    )


def _round_half_up(value: float) -> int:
    return int(math.floor(value + 0.5))


def mask_landmarks(split: DatasetSplit, fraction: float, seed: int) -> DatasetSplit:
    """Keep landmarks on a class-stratified share of the training samples.

    Exactly ``round(fraction * N)`` training samples keep their landmarks.
    The per-class quotas follow the class frequencies with the remainders
    going to the classes with the largest fractional parts, so balanced
    classes end up within one sample of each other. Valid and test samples
    are left untouched.

    Args:
        split (DatasetSplit): A split whose training samples are all labelled.
        fraction (float): One of 0.01, 0.05, 0.1, 0.2, 0.5 and 1.0.
        seed (int): Seed of the selection.

    Raises:
        DataError: Invalid fraction, too few labelled samples for one per
            class, or training samples already without landmarks.

    Returns:
        DatasetSplit: The masked split.
    """
    if not any(math.isclose(fraction, f) for f in ALLOWED_FRACTIONS):
        raise DataError(
            f"fraction should be one of {list(ALLOWED_FRACTIONS)}, not {fraction}"
        )
    if split.s != split.n:
        raise DataError("mask_landmarks needs a fully labelled training split")
    if math.isclose(fraction, 1.0):
        return split
    n = split.n
    target = _round_half_up(fraction * n)
    if target < split.num_classes:
        raise DataError(
            f"fraction {fraction} of {n} samples keeps {target} landmarks, "
            f"fewer than the {split.num_classes} classes"
        )
    rng = np.random.default_rng(seed)
    labels = np.array([s.label for s in split.train])
    counts = np.bincount(labels, minlength=split.num_classes)
    exact = target * counts / n
    quotas = np.floor(exact).astype(int)
    order = rng.permutation(split.num_classes)
    order = order[np.argsort(-(exact - quotas)[order], kind="stable")]
    quotas[order[: target - quotas.sum()]] += 1

    keep = np.zeros(n, dtype=bool)
    for c in range(split.num_classes):
        members = np.flatnonzero(labels == c)
        keep[rng.choice(members, size=quotas[c], replace=False)] = True
    train = [s if keep[i] else s.without_landmarks() for i, s in enumerate(split.train)]
    logger.info(
        "kept landmarks on %d of %d training samples (fraction %g)", target, n, fraction
    )
    return replace(split, train=train)
