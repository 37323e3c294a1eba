"""Binary dataset codecs and image dumps.

Readers for the classic IDX (handwritten-digit style) and 3073-byte-record
color-image formats, a double-precision container (DGT) for disguised
tensors, and portable PGM/PPM dumps for eyeballing results.  Disguised
pixels routinely leave [0, 255] and may be negative, so the container
stores raw float64 and never quantizes.
"""

from __future__ import annotations

import struct

import numpy as np

from .data import DISGUISED, ORIGINAL, LabeledDataset, as_image
from .errors import (
    BadMagicError,
    FormatError,
    FramingError,
    InvariantError,
    PartitionError,
    TruncatedError,
    VersionError,
)

IDX_IMAGE_MAGIC = 0x00000803
IDX_LABEL_MAGIC = 0x00000801

DGT_MAGIC = b"DGT1"
DGT_VERSION = 1

CIFAR_RECORD_BYTES = 3073
CIFAR_CLASSES = 10

# Sanity cap on declared element counts; anything above is a corrupt header.
_MAX_ELEMENTS = 1 << 40

_SPACE_CODES = {ORIGINAL: 0, DISGUISED: 1}
_SPACE_NAMES = {code: name for name, code in _SPACE_CODES.items()}


def _be_u32(data: bytes, offset: int, what: str) -> int:
    if len(data) < offset + 4:
        raise TruncatedError(f"{what}: need {offset + 4} bytes, got {len(data)}")
    return struct.unpack_from(">I", data, offset)[0]


def read_idx_images(data: bytes) -> np.ndarray:
    """Decode an IDX image file to an (n, 1, rows, cols) float64 array."""
    magic = _be_u32(data, 0, "image header")
    if magic != IDX_IMAGE_MAGIC:
        raise BadMagicError(
            f"expected image magic 0x{IDX_IMAGE_MAGIC:08x}, got 0x{magic:08x}"
        )
    count = _be_u32(data, 4, "image header")
    rows = _be_u32(data, 8, "image header")
    cols = _be_u32(data, 12, "image header")
    total = count * rows * cols
    if total > _MAX_ELEMENTS:
        raise FramingError(f"declared dimensions overflow: {count}x{rows}x{cols}")
    if count and (rows == 0 or cols == 0):
        raise FramingError(f"zero image dimensions: {rows}x{cols}")
    if len(data) < 16 + total:
        raise TruncatedError(f"image payload needs {16 + total} bytes, got {len(data)}")
    if len(data) > 16 + total:
        raise FramingError(f"{len(data) - 16 - total} trailing bytes after image payload")
    pixels = np.frombuffer(data, dtype=np.uint8, count=total, offset=16)
    return pixels.reshape(count, 1, rows, cols).astype(np.float64)


def read_idx_labels(data: bytes) -> np.ndarray:
    """Decode an IDX label file to an (n,) integer array."""
    magic = _be_u32(data, 0, "label header")
    if magic != IDX_LABEL_MAGIC:
        raise BadMagicError(
            f"expected label magic 0x{IDX_LABEL_MAGIC:08x}, got 0x{magic:08x}"
        )
    count = _be_u32(data, 4, "label header")
    if count > _MAX_ELEMENTS:
        raise FramingError(f"declared label count overflows: {count}")
    if len(data) < 8 + count:
        raise TruncatedError(f"label payload needs {8 + count} bytes, got {len(data)}")
    if len(data) > 8 + count:
        raise FramingError(f"{len(data) - 8 - count} trailing bytes after label payload")
    return np.frombuffer(data, dtype=np.uint8, count=count, offset=8).astype(np.int64)


def write_idx_images(images: np.ndarray) -> bytes:
    """Encode (n, 1, rows, cols) pixel data as an IDX image file."""
    arr = np.asarray(images)
    if arr.ndim != 4 or arr.shape[1] != 1:
        raise InvariantError(f"expected (n, 1, rows, cols) images, got shape {arr.shape}")
    n, _, rows, cols = arr.shape
    header = struct.pack(">IIII", IDX_IMAGE_MAGIC, n, rows, cols)
    return header + np.clip(np.rint(arr), 0, 255).astype(np.uint8).tobytes()


def write_idx_labels(labels: np.ndarray) -> bytes:
    arr = np.asarray(labels)
    if arr.ndim != 1 or (arr.size and (arr.min() < 0 or arr.max() > 255)):
        raise InvariantError("labels must be a 1-D array of values in [0, 255]")
    return struct.pack(">II", IDX_LABEL_MAGIC, len(arr)) + arr.astype(np.uint8).tobytes()


def load_idx_dataset(
    image_bytes: bytes, label_bytes: bytes, class_count: int = 10
) -> LabeledDataset:
    """Pair an IDX image file with its label file."""
    images = read_idx_images(image_bytes)
    labels = read_idx_labels(label_bytes)
    if len(images) != len(labels):
        raise InvariantError(f"{len(images)} images but {len(labels)} labels")
    return LabeledDataset(images, labels, class_count, ORIGINAL)


def read_cifar10_bin(data: bytes) -> LabeledDataset:
    """Decode 3073-byte records (label byte + 3 row-major color planes)."""
    if len(data) % CIFAR_RECORD_BYTES:
        raise FramingError(
            f"length {len(data)} is not a multiple of {CIFAR_RECORD_BYTES}"
        )
    n = len(data) // CIFAR_RECORD_BYTES
    records = np.frombuffer(data, dtype=np.uint8).reshape(n, CIFAR_RECORD_BYTES)
    labels = records[:, 0].astype(np.int64)
    if labels.size and labels.max() >= CIFAR_CLASSES:
        raise InvariantError(
            f"label {labels.max()} out of range for {CIFAR_CLASSES} classes"
        )
    images = records[:, 1:].reshape(n, 3, 32, 32).astype(np.float64)
    return LabeledDataset(images, labels, CIFAR_CLASSES, ORIGINAL)


# -- DGT container ----------------------------------------------------------
#
# DGT1 layout, little-endian:
#   magic 4s | version u16 | count u32 | channels u8 | height u16 |
#   width u16 | class_count u16 | space u8 |
#   payload count x (channels*height*width) f64 | labels count x u16

_DGT_HEADER = struct.Struct("<4sHIBHHHB")


def write_dgt(dataset: LabeledDataset) -> bytes:
    """Encode a dataset as a DGT container (lossless for finite doubles)."""
    n = len(dataset)
    c, h, w = dataset.images.shape[1:]
    header = _DGT_HEADER.pack(
        DGT_MAGIC,
        DGT_VERSION,
        n,
        c,
        h,
        w,
        dataset.class_count,
        _SPACE_CODES[dataset.space],
    )
    return b"".join(
        (
            header,
            dataset.images.astype("<f8").tobytes(),
            dataset.labels.astype("<u2").tobytes(),
        )
    )


def read_dgt(data: bytes) -> LabeledDataset:
    """Decode a DGT container, validating every header field."""
    if len(data) < 4:
        raise TruncatedError(f"container is {len(data)} bytes, shorter than the magic")
    if data[:4] != DGT_MAGIC:
        raise BadMagicError(f"expected magic {DGT_MAGIC!r}, got {bytes(data[:4])!r}")
    if len(data) < _DGT_HEADER.size:
        raise TruncatedError(
            f"container header needs {_DGT_HEADER.size} bytes, got {len(data)}"
        )
    _magic, version, count, channels, height, width, class_count, space_code = (
        _DGT_HEADER.unpack_from(data, 0)
    )
    if version != DGT_VERSION:
        raise VersionError(f"unsupported container version {version}")
    if channels not in (1, 3):
        raise FormatError(f"channels must be 1 or 3, got {channels}")
    if space_code not in _SPACE_NAMES:
        raise FormatError(f"unknown space code {space_code}")
    if class_count < 1:
        raise FormatError("class_count must be >= 1")
    per_image = channels * height * width
    if count * per_image > _MAX_ELEMENTS:
        raise FramingError(f"declared dimensions overflow: {count}x{per_image}")
    payload_bytes = 8 * count * per_image
    label_bytes = 2 * count
    expected = _DGT_HEADER.size + payload_bytes + label_bytes
    if len(data) < expected:
        raise TruncatedError(f"container needs {expected} bytes, got {len(data)}")
    if len(data) > expected:
        raise FramingError(f"{len(data) - expected} trailing bytes after container payload")

    images = (
        np.frombuffer(data, dtype="<f8", count=count * per_image, offset=_DGT_HEADER.size)
        .reshape(count, channels, height, width)
        .copy()
    )
    labels = np.frombuffer(
        data, dtype="<u2", count=count, offset=_DGT_HEADER.size + payload_bytes
    ).astype(np.int64)
    return LabeledDataset(images, labels, class_count, _SPACE_NAMES[space_code])


def save_dgt(path, dataset: LabeledDataset):
    with open(path, "wb") as fh:
        fh.write(write_dgt(dataset))


def load_dgt(path) -> LabeledDataset:
    with open(path, "rb") as fh:
        return read_dgt(fh.read())


# -- PNM dumps and padding ---------------------------------------------------

CLAMP = "clamp"
MINMAX = "minmax"


def export_pnm(image, normalization: str = CLAMP) -> bytes:
    """Render an image as binary PGM (1 channel) or PPM (3 channels).

    ``clamp`` clips to the 0-255 pixel scale; ``minmax`` rescales the value
    range onto it, which is the useful view for disguised images.
    """
    arr = as_image(image)
    if normalization == MINMAX:
        lo, hi = float(arr.min()), float(arr.max())
        arr = np.zeros_like(arr) if hi == lo else (arr - lo) * (255.0 / (hi - lo))
    elif normalization != CLAMP:
        raise InvariantError(f"unknown normalization {normalization!r}")
    raster = np.clip(np.rint(arr), 0, 255).astype(np.uint8)
    c, h, w = raster.shape
    if c == 1:
        return b"P5\n%d %d\n255\n" % (w, h) + raster[0].tobytes()
    return b"P6\n%d %d\n255\n" % (w, h) + raster.transpose(1, 2, 0).tobytes()


def pad_to_block_multiple(image, block_rows: int, block_cols: int) -> np.ndarray:
    """Zero-pad bottom/right so the geometry divides into whole blocks.

    Recording the original size for later cropping is the caller's duty.
    """
    arr = as_image(image)
    if block_rows < 1 or block_cols < 1:
        raise PartitionError("block dimensions must be >= 1")
    _, h, w = arr.shape
    pad_h = (-h) % block_rows
    pad_w = (-w) % block_cols
    if pad_h == 0 and pad_w == 0:
        return arr
    return np.pad(arr, ((0, 0), (0, pad_h), (0, pad_w)))
