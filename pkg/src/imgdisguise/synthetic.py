"""Synthetic benchmark-shaped image sets for self-contained experiments.

Real photographic benchmarks cannot be bundled, so these generators
produce labeled datasets with the same geometry (28x28 grayscale, ten
classes by default) and enough class structure that a pixel-space
nearest-neighbor classifier behaves the way it does on handwriting data:
high accuracy on held-out samples, chance-level accuracy on disguised ones.

Two families are provided.  Stroke images imitate sparse handwriting: a
per-class scribble prototype, shifted and speckled per sample.  Texture
images imitate a foreign domain (dense periodic patterns) whose per-sample
phase jitter spreads their nearest neighbors across many stroke classes.
"""

from __future__ import annotations

import numpy as np

from .data import ORIGINAL, LabeledDataset
from .errors import InvariantError
from .keys import rng_stream

_PROTO_STREAM = 10
_SAMPLE_STREAM = 11
_SHUFFLE_STREAM = 12

_DIRECTIONS = [(-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1)]


def _stroke_prototype(rng: np.random.Generator, size: int) -> np.ndarray:
    """Sparse scribble: a few thick random walks on a dark canvas."""
    proto = np.zeros((size, size))
    lo, hi = 4, size - 5
    for _ in range(3):
        y = int(rng.integers(lo, hi + 1))
        x = int(rng.integers(lo, hi + 1))
        dy, dx = _DIRECTIONS[int(rng.integers(0, 8))]
        for _ in range(3 * size // 2):
            proto[y, x] = 255.0
            proto[min(y + 1, hi + 1), x] = 255.0
            proto[y, min(x + 1, hi + 1)] = 255.0
            if rng.random() < 0.25:
                dy, dx = _DIRECTIONS[int(rng.integers(0, 8))]
            y = min(max(y + dy, lo), hi)
            x = min(max(x + dx, lo), hi)
    return proto


def stroke_images(
    n_per_class: int,
    *,
    image_size: int = 28,
    class_count: int = 10,
    seed: int = 0,
    part: int = 0,
) -> LabeledDataset:
    """Handwriting-like sparse dataset: one scribble prototype per class,
    each sample shifted by up to two pixels, rescaled, and speckled.

    The class prototypes depend only on ``seed``; sample jitter also mixes
    in ``part``, so disjoint parts give train/test splits from one
    distribution.
    """
    if n_per_class < 1 or class_count < 1:
        raise InvariantError("n_per_class and class_count must be >= 1")
    protos = [
        _stroke_prototype(rng_stream(seed, _PROTO_STREAM, c), image_size)
        for c in range(class_count)
    ]
    n = n_per_class * class_count
    images = np.empty((n, 1, image_size, image_size))
    labels = np.empty(n, dtype=np.int64)
    rng = rng_stream(seed, _SAMPLE_STREAM, part)
    ramp = np.linspace(0.0, 1.0, image_size)
    for i in range(n):
        c = i % class_count
        dy, dx = rng.integers(-3, 4, size=2)
        img = np.roll(protos[c], (int(dy), int(dx)), axis=(0, 1))
        img = img * rng.uniform(0.75, 1.25)
        # smooth per-sample background: varies the images without moving
        # the class boundaries much
        gy, gx = rng.uniform(-30.0, 30.0, size=2)
        img = img + gy * ramp[:, None] + gx * ramp[None, :]
        img = img + rng.normal(0.0, 18.0, img.shape)
        images[i, 0] = np.clip(img, 0.0, 255.0)
        labels[i] = c
    return _shuffled(images, labels, class_count, seed, part)


def texture_images(
    n_per_class: int,
    *,
    image_size: int = 28,
    class_count: int = 10,
    seed: int = 0,
    part: int = 0,
) -> LabeledDataset:
    """Foreign-domain dense dataset: per-class oriented gratings whose
    phase, frequency, and amplitude jitter per sample.

    ``seed`` fixes the class parameters, ``part`` selects an independent
    batch of samples, mirroring :func:`stroke_images`.
    """
    if n_per_class < 1 or class_count < 1:
        raise InvariantError("n_per_class and class_count must be >= 1")
    grid = np.mgrid[0:image_size, 0:image_size] / image_size
    class_params = []
    for c in range(class_count):
        prng = rng_stream(seed, _PROTO_STREAM, class_count + c)
        class_params.append(
            (prng.uniform(1.5, 5.5, size=2), prng.uniform(1.5, 5.5, size=2))
        )
    n = n_per_class * class_count
    images = np.empty((n, 1, image_size, image_size))
    labels = np.empty(n, dtype=np.int64)
    rng = rng_stream(seed, _SAMPLE_STREAM + 1, part)
    yy, xx = grid
    for i in range(n):
        c = i % class_count
        (f1, f2) = class_params[c]
        w1 = f1 + rng.uniform(-0.4, 0.4, size=2)
        w2 = f2 + rng.uniform(-0.4, 0.4, size=2)
        img = (
            127.5
            + rng.uniform(45.0, 75.0)
            * np.sin(2 * np.pi * (w1[0] * yy + w1[1] * xx) + rng.uniform(0, 2 * np.pi))
            + rng.uniform(25.0, 55.0)
            * np.sin(2 * np.pi * (w2[0] * yy - w2[1] * xx) + rng.uniform(0, 2 * np.pi))
        )
        img = img + rng.normal(0.0, 10.0, img.shape)
        images[i, 0] = np.clip(img, 0.0, 255.0)
        labels[i] = c
    return _shuffled(images, labels, class_count, seed, part)


def _shuffled(images, labels, class_count, seed, part) -> LabeledDataset:
    order = rng_stream(seed, _SHUFFLE_STREAM, part).permutation(len(images))
    return LabeledDataset(images[order], labels[order], class_count, ORIGINAL)
