"""Shared containers: single images and labeled image datasets.

An image is a ``(channels, height, width)`` float64 array on the 0-255
scale before disguising; after disguising values are unrestricted reals.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import GeometryMismatchError, InvariantError

ORIGINAL = "original"
DISGUISED = "disguised"


def as_image(pixels) -> np.ndarray:
    """Coerce to a (channels, height, width) float64 array and validate it."""
    arr = np.asarray(pixels, dtype=np.float64)
    if arr.ndim != 3 or arr.shape[0] not in (1, 3):
        raise GeometryMismatchError(
            f"expected a (channels, height, width) array with 1 or 3 channels, "
            f"got shape {arr.shape}"
        )
    if not np.all(np.isfinite(arr)):
        raise InvariantError("image contains non-finite pixel values")
    return arr


@dataclass
class LabeledDataset:
    """Ordered images with integer class labels.

    Attributes
    ----------
    images : (n, channels, height, width) float64 array
    labels : (n,) integer array, each value in ``[0, class_count)``
    class_count : number of classes the labels are drawn from
    space : ``ORIGINAL`` before disguising, ``DISGUISED`` after
    """

    images: np.ndarray
    labels: np.ndarray
    class_count: int
    space: str = ORIGINAL

    def __post_init__(self):
        self.images = np.ascontiguousarray(self.images, dtype=np.float64)
        self.labels = np.ascontiguousarray(self.labels, dtype=np.int64)
        if self.images.ndim != 4:
            raise GeometryMismatchError(
                f"expected (n, channels, height, width) images, got shape {self.images.shape}"
            )
        if self.images.shape[1] not in (1, 3):
            raise GeometryMismatchError(
                f"expected 1 or 3 channels, got {self.images.shape[1]}"
            )
        if self.labels.ndim != 1 or len(self.labels) != len(self.images):
            raise InvariantError(
                f"{len(self.images)} images but {self.labels.shape} labels"
            )
        if self.class_count < 1:
            raise InvariantError("class_count must be >= 1")
        if self.labels.size:
            lo, hi = int(self.labels.min()), int(self.labels.max())
            if lo < 0 or hi >= self.class_count:
                raise InvariantError(
                    f"labels must lie in [0, {self.class_count}), found range [{lo}, {hi}]"
                )
        if self.space not in (ORIGINAL, DISGUISED):
            raise InvariantError(f"unknown space tag {self.space!r}")

    def __len__(self) -> int:
        return len(self.images)

    @property
    def geometry(self) -> tuple[int, int, int]:
        """(channels, height, width) of every image in the set."""
        return tuple(self.images.shape[1:])
