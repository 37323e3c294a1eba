"""The disguising transform and its inverse.

The forward pipeline per image: partition into uniform blocks, add fresh
uniform noise and left-multiply each block by its secret matrix, shuffle
the blocks with the secret permutation, reassemble.  With an orthogonal
noise-free key the transform is an isometry in the Frobenius norm, which
is what lets distance-based learning survive disguising.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .data import DISGUISED, ORIGINAL, LabeledDataset, as_image
from .errors import (
    GeometryMismatchError,
    InvariantError,
    NotInvertibleError,
    PartitionError,
)
from .keys import DisguiseKey, MatrixKind, rng_stream

# Stream tag for per-image noise; disjoint from the key-generation tags.
_NOISE_STREAM = 3


@dataclass
class BlockGrid:
    """An image cut into a row-major grid of uniform blocks.

    ``blocks`` has shape ``(t, channels, block_rows, block_cols)`` with
    ``t == grid_rows * grid_cols``; block j sits at grid position
    ``(j // grid_cols, j % grid_cols)``.
    """

    grid_rows: int
    grid_cols: int
    blocks: np.ndarray

    def __post_init__(self):
        self.blocks = np.ascontiguousarray(self.blocks, dtype=np.float64)
        if self.blocks.ndim != 4:
            raise InvariantError(
                f"blocks must be a (t, channels, rows, cols) array, got shape "
                f"{self.blocks.shape}"
            )
        if len(self.blocks) != self.grid_rows * self.grid_cols:
            raise InvariantError(
                f"{len(self.blocks)} blocks cannot fill a "
                f"{self.grid_rows}x{self.grid_cols} grid"
            )

    @property
    def block_count(self) -> int:
        return len(self.blocks)

    @property
    def block_shape(self) -> tuple[int, int]:
        return tuple(self.blocks.shape[2:])


def partition(image, block_rows: int, block_cols: int) -> BlockGrid:
    """Cut an image into its block grid; lossless (``assemble`` inverts it)."""
    arr = as_image(image)
    c, h, w = arr.shape
    if block_rows < 1 or block_cols < 1:
        raise PartitionError("block dimensions must be >= 1")
    if h % block_rows:
        raise PartitionError(f"height {h} is not divisible by block rows {block_rows}")
    if w % block_cols:
        raise PartitionError(f"width {w} is not divisible by block cols {block_cols}")
    gr, gc = h // block_rows, w // block_cols
    blocks = (
        arr.reshape(c, gr, block_rows, gc, block_cols)
        .transpose(1, 3, 0, 2, 4)
        .reshape(gr * gc, c, block_rows, block_cols)
    )
    return BlockGrid(gr, gc, blocks)


def assemble(grid: BlockGrid) -> np.ndarray:
    """Reassemble a block grid into the image it partitions."""
    t, c, br, bc = grid.blocks.shape
    gr, gc = grid.grid_rows, grid.grid_cols
    return np.ascontiguousarray(
        grid.blocks.reshape(gr, gc, c, br, bc)
        .transpose(2, 0, 3, 1, 4)
        .reshape(c, gr * br, gc * bc)
    )


def permute_blocks(grid: BlockGrid, perm) -> BlockGrid:
    """Shuffle blocks: output block j is input block ``perm[j]``."""
    perm = np.asarray(perm, dtype=np.int64)
    if len(perm) != grid.block_count:
        raise InvariantError(
            f"permutation has {len(perm)} entries for {grid.block_count} blocks"
        )
    if not np.array_equal(np.sort(perm), np.arange(len(perm))):
        raise InvariantError("permutation is not a bijection")
    return BlockGrid(grid.grid_rows, grid.grid_cols, grid.blocks[perm])


def rmt_block(
    block, matrix: np.ndarray, noise_level: float, rng: np.random.Generator
) -> np.ndarray:
    """Randomized transform of one block: ``matrix @ (block + noise)``.

    Noise entries are i.i.d. Uniform[0, noise_level], drawn fresh from
    ``rng`` on every call; a zero noise level draws nothing.
    """
    b = np.asarray(block, dtype=np.float64)
    if b.ndim != 2:
        raise GeometryMismatchError(f"block must be 2-D, got shape {b.shape}")
    matrix = np.asarray(matrix, dtype=np.float64)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise GeometryMismatchError(f"matrix must be square, got shape {matrix.shape}")
    if matrix.shape[0] != b.shape[0]:
        raise GeometryMismatchError(
            f"matrix of size {matrix.shape[0]} cannot act on a block with "
            f"{b.shape[0]} rows"
        )
    if noise_level < 0:
        raise InvariantError(f"noise level must be >= 0, got {noise_level}")
    if noise_level > 0:
        b = b + rng.uniform(0.0, noise_level, size=b.shape)
    return matrix @ b


def _check_geometry(arr: np.ndarray, key: DisguiseKey):
    if tuple(arr.shape) != key.geometry:
        raise GeometryMismatchError(
            f"image geometry {tuple(arr.shape)} does not match key geometry {key.geometry}"
        )


def disguise(image, key: DisguiseKey, rng: np.random.Generator) -> np.ndarray:
    """Apply the full transform to one image.

    Per block (pre-permutation labeling): each channel gets fresh noise but
    the same matrix.  Deterministic given ``(key, rng)``.
    """
    arr = as_image(image)
    _check_geometry(arr, key)
    grid = partition(arr, key.block_rows, key.block_cols)
    out = np.empty_like(grid.blocks)
    for i in range(grid.block_count):
        for c in range(key.channels):
            out[i, c] = rmt_block(grid.blocks[i, c], key.matrices[i], key.noise_level, rng)
    shuffled = permute_blocks(BlockGrid(grid.grid_rows, grid.grid_cols, out), key.permutation)
    return assemble(shuffled)


def invert(image, key: DisguiseKey) -> np.ndarray:
    """Undo the permutation and per-block matrices of a disguised image.

    Returns the original plus whatever additive noise the forward pass drew,
    so the result is exact only for noise-free keys.  Projection keys are
    rejected: a projection matrix has no reliable inverse.
    """
    if key.matrix_kind == MatrixKind.PROJECTION:
        raise NotInvertibleError("projection keys cannot be inverted")
    arr = as_image(image)
    _check_geometry(arr, key)
    grid = partition(arr, key.block_rows, key.block_cols)
    unshuffled = permute_blocks(grid, np.argsort(key.permutation))
    out = np.empty_like(unshuffled.blocks)
    for i in range(grid.block_count):
        for c in range(key.channels):
            out[i, c] = key.matrices[i].T @ unshuffled.blocks[i, c]
    return assemble(BlockGrid(grid.grid_rows, grid.grid_cols, out))


def _image_rng(base_seed: int, index: int) -> np.random.Generator:
    return rng_stream(base_seed, _NOISE_STREAM, index)


def disguise_dataset(
    dataset: LabeledDataset, key: DisguiseKey, base_seed: int = 0, jobs: int = 1
) -> LabeledDataset:
    """Disguise every image and remap the labels through the key.

    Image i draws its noise from a stream derived from ``(base_seed, i)``,
    so the output is byte-identical for any ``jobs`` degree.
    """
    if dataset.space != ORIGINAL:
        raise InvariantError("dataset is already disguised")
    if dataset.class_count != key.class_count:
        raise InvariantError(
            f"dataset has {dataset.class_count} classes, key maps {key.class_count}"
        )
    if len(dataset) and dataset.geometry != key.geometry:
        raise GeometryMismatchError(
            f"dataset geometry {dataset.geometry} does not match key geometry "
            f"{key.geometry} (first offending image: index 0)"
        )
    out = np.empty_like(dataset.images)

    def work(i):
        out[i] = disguise(dataset.images[i], key, _image_rng(base_seed, i))

    _run_indexed(work, len(dataset), jobs)
    return LabeledDataset(
        images=out,
        labels=key.label_permutation[dataset.labels],
        class_count=dataset.class_count,
        space=DISGUISED,
    )


def invert_dataset(dataset: LabeledDataset, key: DisguiseKey, jobs: int = 1) -> LabeledDataset:
    """Invert every image of a disguised dataset and restore its labels."""
    if dataset.space != DISGUISED:
        raise InvariantError("dataset is not in disguised space")
    if dataset.class_count != key.class_count:
        raise InvariantError(
            f"dataset has {dataset.class_count} classes, key maps {key.class_count}"
        )
    if len(dataset) and dataset.geometry != key.geometry:
        raise GeometryMismatchError(
            f"dataset geometry {dataset.geometry} does not match key geometry {key.geometry}"
        )
    out = np.empty_like(dataset.images)

    def work(i):
        out[i] = invert(dataset.images[i], key)

    _run_indexed(work, len(dataset), jobs)
    return LabeledDataset(
        images=out,
        labels=np.argsort(key.label_permutation)[dataset.labels],
        class_count=dataset.class_count,
        space=ORIGINAL,
    )


def _run_indexed(work, n: int, jobs: int):
    if jobs <= 1:
        for i in range(n):
            work(i)
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            list(pool.map(work, range(n)))
