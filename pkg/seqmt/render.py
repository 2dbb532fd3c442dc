"""PNG overlays of ground-truth and predicted landmarks."""

# Standard Library Imports
from __future__ import annotations

import io
import logging
from pathlib import Path
from typing import Any, Sequence

# Third-Party Imports
import numpy as np
from PIL import Image, ImageDraw

# Local Imports
from seqmt.datasets import Sample
from seqmt.errors import ContractError
from seqmt.evaluation import predict_landmarks

logger = logging.getLogger(__name__)

UPSCALE = 4
CROSS_ARM = 3
ERROR_COLOR = (255, 255, 0)
GT_COLOR = (0, 255, 0)
PREDICTION_COLOR = (255, 0, 0)


def to_canvas(x: float, y: float, scale: int = UPSCALE) -> tuple[float, float]:
    """Map pixel coordinates to the center of the upscaled pixel block."""
    return (x + 0.5) * scale - 0.5, (y + 0.5) * scale - 0.5


def _cross(draw: ImageDraw.ImageDraw, point: tuple[float, float], color: tuple) -> None:
    x, y = (round(v) for v in point)
    draw.line([(x - CROSS_ARM, y), (x + CROSS_ARM, y)], fill=color)
    draw.line([(x, y - CROSS_ARM), (x, y + CROSS_ARM)], fill=color)


def render_overlay(
    image: np.ndarray,
    predicted: np.ndarray,
    target: None | np.ndarray = None,
    scale: int = UPSCALE,
) -> Image.Image:
    """Draw landmarks over a grayscale image.

    The image is upscaled by nearest neighbour. Error segments are drawn
    first (yellow), then GT crosses (green), then predicted crosses (red), so
    a perfect prediction hides its GT marker entirely. Predictions are clamped
    to the frame.

    Args:
        image (np.ndarray): [H, W] intensities in [0, 1].
        predicted (np.ndarray): [K, 2] predicted (x, y) landmarks.
        target (None | np.ndarray): [K, 2] GT landmarks, if known.
        scale (int): The upscale factor.

    Returns:
        Image.Image: The RGB overlay.
    """
    image = np.asarray(image)
    if image.ndim != 2:
        raise ContractError(f"expected an [H, W] image, got shape {image.shape}")
    h, w = image.shape
    gray = np.round(np.clip(image, 0.0, 1.0) * 255.0).astype(np.uint8)
    canvas = Image.fromarray(gray, "L").convert("RGB")
    canvas = canvas.resize((w * scale, h * scale), Image.Resampling.NEAREST)
    draw = ImageDraw.Draw(canvas)

    predicted = np.asarray(predicted, dtype=np.float64).copy()
    predicted[:, 0] = np.clip(predicted[:, 0], 0, w - 1)
    predicted[:, 1] = np.clip(predicted[:, 1], 0, h - 1)
    pred_points = [to_canvas(x, y, scale) for x, y in predicted]
    gt_points = []
    if target is not None:
        gt_points = [to_canvas(x, y, scale) for x, y in np.asarray(target)]
        for gt, pred in zip(gt_points, pred_points):
            draw.line([gt, pred], fill=ERROR_COLOR)
    for point in gt_points:
        _cross(draw, point, GT_COLOR)
    for point in pred_points:
        _cross(draw, point, PREDICTION_COLOR)
    return canvas


def png_bytes(image: Image.Image) -> bytes:
    """Encode an image as PNG."""
    buffer = io.BytesIO()
    image.save(buffer, format="PNG")
    return buffer.getvalue()


def save_overlays(
    net: Any, samples: Sequence[Sample], n: int, directory: str | Path
) -> list[Path]:
    """Write overlays of the first ``n`` samples as ``overlay_XXXX.png``.

    Args:
        net (Any): Anything with ``forward_landmarks``.
        samples (Sequence[Sample]): The samples.
        n (int): The number of overlays; clamped to the number of samples.
        directory (str | Path): Output directory, created if missing.

    Returns:
        list[Path]: The written files.
    """
    if n > len(samples):
        logger.warning(
            "asked for %d overlays but the dataset has %d samples", n, len(samples)
        )
        n = len(samples)
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    if n <= 0:
        return []
    chosen = list(samples[:n])
    predicted = predict_landmarks(net, chosen)
    paths = []
    for index, (sample, landmarks) in enumerate(zip(chosen, predicted)):
        path = directory / f"overlay_{index:04d}.png"
        overlay = render_overlay(sample.image, landmarks, sample.landmarks)
        path.write_bytes(png_bytes(overlay))
        paths.append(path)
    return paths
