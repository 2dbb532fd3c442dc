"""Little-endian binary containers for datasets (LMK1) and network weights (LMW1).

LMK1 layout::

    magic "LMK1" | u32 version | u32 n_samples | u32 H | u32 W | u32 C | u32 K
    | u32 n_classes
    then per sample: f32[H*W*C] image | f32[K*2] (x, y) landmarks | u32 class
    | u8 landmark_labeled | 3 zero bytes

Unlabelled samples store zero landmarks. LMW1 layout::

    magic "LMW1" | u32 version | u32 tensor count
    then per tensor: u32 name length | name (utf-8) | u32 rank | u32[rank] dims
    | f64 payload
"""

# Standard Library Imports
from __future__ import annotations

import logging
import os
import struct
from pathlib import Path
from typing import Sequence

# Third-Party Imports
import numpy as np

# Local Imports
from seqmt.datasets import SPLIT_NAMES, DatasetSplit, Sample
from seqmt.errors import DataError, MagicMismatch, Truncation, VersionMismatch

logger = logging.getLogger(__name__)

DATASET_MAGIC = b"LMK1"
DATASET_VERSION = 1
DATASET_HEADER = struct.Struct("<4s7I")

WEIGHTS_MAGIC = b"LMW1"
WEIGHTS_VERSION = 1
WEIGHTS_HEADER = struct.Struct("<4s2I")
U32 = struct.Struct("<I")


def record_dtype(height: int, width: int, channels: int, num_landmarks: int) -> np.dtype:
    """Return the packed structured dtype of one LMK1 sample record."""
    return np.dtype(
        [
            ("image", "<f4", (height * width * channels,)),
            ("landmarks", "<f4", (num_landmarks * 2,)),
            ("label", "<u4"),
            ("labeled", "u1"),
            ("pad", "u1", (3,)),
        ]
    )


def encode_samples(
    samples: Sequence[Sample], num_classes: int, num_landmarks: int,
    image_size: tuple[int, int],
) -> bytes:
    """Encode samples as an LMK1 byte string.

    Args:
        samples (Sequence[Sample]): The samples.
        num_classes (int): Number of classes, recorded in the header.
        num_landmarks (int): K.
        image_size (tuple[int, int]): The (H, W) every image must have.

    Raises:
        DataError: A sample does not match the header.

    Returns:
        bytes: The encoded container.
    """
    h, w = image_size
    records = np.zeros(len(samples), dtype=record_dtype(h, w, 1, num_landmarks))
    for i, sample in enumerate(samples):
        if sample.image.shape != (h, w):
            raise DataError(
                f"sample {i} has image shape {sample.image.shape}, expected {(h, w)}"
            )
        records["image"][i] = sample.image.reshape(-1)
        if sample.landmarks is not None:
            if sample.landmarks.shape != (num_landmarks, 2):
                raise DataError(
                    f"sample {i} has landmark shape {sample.landmarks.shape}, "
                    f"expected {(num_landmarks, 2)}"
                )
            records["landmarks"][i] = sample.landmarks.reshape(-1)
        records["label"][i] = sample.label
        records["labeled"][i] = sample.labeled
    header = DATASET_HEADER.pack(
        DATASET_MAGIC, DATASET_VERSION, len(samples), h, w, 1, num_landmarks, num_classes
    )
    return header + records.tobytes()


def decode_samples(data: bytes) -> tuple[list[Sample], dict[str, int]]:
    """Decode an LMK1 byte string.

    Args:
        data (bytes): The container bytes.

    Raises:
        MagicMismatch: The data is not an LMK1 container.
        VersionMismatch: The container version is not supported.
        Truncation: The data is shorter than the header announces.

    Returns:
        tuple[list[Sample], dict[str, int]]: The samples and the header fields.
    """
    if data[:4] != DATASET_MAGIC:
        raise MagicMismatch(DATASET_MAGIC, bytes(data[:4]))
    if len(data) < DATASET_HEADER.size:
        raise Truncation(DATASET_HEADER.size, len(data))
    _, version, n, h, w, c, k, num_classes = DATASET_HEADER.unpack_from(data)
    if version != DATASET_VERSION:
        raise VersionMismatch(DATASET_VERSION, version)
    if c != 1:
        raise DataError(f"only single channel images are supported, got C={c}")
    dtype = record_dtype(h, w, c, k)
    expected = DATASET_HEADER.size + n * dtype.itemsize
    if len(data) < expected:
        raise Truncation(expected, len(data))
    records = np.frombuffer(data, dtype=dtype, count=n, offset=DATASET_HEADER.size)
    samples = [
        Sample(
            image=record["image"].reshape(h, w).astype(np.float32),
            landmarks=(
                record["landmarks"].reshape(k, 2).astype(np.float64)
                if record["labeled"]
                else None
            ),
            label=int(record["label"]),
        )
        for record in records
    ]
    header = {"n_samples": n, "height": h, "width": w, "channels": c,
              "num_landmarks": k, "num_classes": num_classes}
    return samples, header


def _write_atomic(path: Path, data: bytes) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(data)
    os.replace(tmp, path)


def _read(path: Path) -> bytes:
    if not path.is_file():
        raise DataError(f"file not found: {path}")
    return path.read_bytes()


def split_paths(directory: str | Path, name: str) -> dict[str, Path]:
    """Return the ``{name}.{split}.lmk`` paths of a dataset."""
    directory = Path(directory)
    return {split: directory / f"{name}.{split}.lmk" for split in SPLIT_NAMES}


def save_split(split: DatasetSplit, directory: str | Path) -> dict[str, Path]:
    """Write the three split files of a dataset.

    Args:
        split (DatasetSplit): The dataset.
        directory (str | Path): The output directory, created if missing.

    Returns:
        dict[str, Path]: The written paths by split name.
    """
    paths = split_paths(directory, split.name)
    Path(directory).mkdir(parents=True, exist_ok=True)
    for split_name, samples in split.splits().items():
        data = encode_samples(
            samples, split.num_classes, split.num_landmarks, split.image_size
        )
        _write_atomic(paths[split_name], data)
        logger.debug("wrote %d samples to %s", len(samples), paths[split_name])
    return paths


def load_split(directory: str | Path, name: str) -> DatasetSplit:
    """Read the three split files of a dataset.

    Args:
        directory (str | Path): The dataset directory.
        name (str): The dataset name, e.g. ``blocks``.

    Raises:
        DataError: A file is missing, malformed or the headers disagree.

    Returns:
        DatasetSplit: The dataset.
    """
    parts = {}
    headers = []
    for split_name, path in split_paths(directory, name).items():
        parts[split_name], header = decode_samples(_read(path))
        headers.append(header)
    first = headers[0]
    for header in headers[1:]:
        for key in ("height", "width", "num_landmarks", "num_classes"):
            if header[key] != first[key]:
                raise DataError(
                    f"dataset '{name}' splits disagree on {key}: "
                    f"{first[key]} != {header[key]}"
                )
    return DatasetSplit(
        name,
        parts["train"],
        parts["valid"],
        parts["test"],
        num_classes=first["num_classes"],
        num_landmarks=first["num_landmarks"],
        image_size=(first["height"], first["width"]),
    )


def encode_weights(state: dict[str, np.ndarray]) -> bytes:
    """Encode named float64 tensors as an LMW1 byte string."""
    chunks = [WEIGHTS_HEADER.pack(WEIGHTS_MAGIC, WEIGHTS_VERSION, len(state))]
    for name, values in state.items():
        encoded = name.encode("utf-8")
        values = np.asarray(values, dtype="<f8")
        chunks.append(U32.pack(len(encoded)))
        chunks.append(encoded)
        chunks.append(U32.pack(values.ndim))
        chunks.append(struct.pack(f"<{values.ndim}I", *values.shape))
        chunks.append(values.tobytes())
    return b"".join(chunks)


def decode_weights(data: bytes) -> dict[str, np.ndarray]:
    """Decode an LMW1 byte string.

    Raises:
        MagicMismatch: The data is not an LMW1 container.
        VersionMismatch: The container version is not supported.
        Truncation: The data ends early.

    Returns:
        dict[str, np.ndarray]: The tensors in file order.
    """
    if data[:4] != WEIGHTS_MAGIC:
        raise MagicMismatch(WEIGHTS_MAGIC, bytes(data[:4]))
    if len(data) < WEIGHTS_HEADER.size:
        raise Truncation(WEIGHTS_HEADER.size, len(data))
    _, version, count = WEIGHTS_HEADER.unpack_from(data)
    if version != WEIGHTS_VERSION:
        raise VersionMismatch(WEIGHTS_VERSION, version)
    offset = WEIGHTS_HEADER.size

    def take(size: int) -> bytes:
        nonlocal offset
        if offset + size > len(data):
            raise Truncation(offset + size, len(data))
        chunk = data[offset : offset + size]
        offset += size
        return chunk

    state = {}
    for _ in range(count):
        (name_length,) = U32.unpack(take(U32.size))
        name = take(name_length).decode("utf-8")
        (rank,) = U32.unpack(take(U32.size))
        shape = struct.unpack(f"<{rank}I", take(4 * rank))
        size = int(np.prod(shape, dtype=np.int64))
        state[name] = np.frombuffer(take(8 * size), dtype="<f8").reshape(shape).copy()
    return state


def save_weights(path: str | Path, state: dict[str, np.ndarray]) -> None:
    """Write an LMW1 checkpoint."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    _write_atomic(path, encode_weights(state))


def load_weights(path: str | Path) -> dict[str, np.ndarray]:
    """Read an LMW1 checkpoint."""
    return decode_weights(_read(Path(path)))
