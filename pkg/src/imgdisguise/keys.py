"""Secret-key generation and the binary key-file codec.

A :class:`DisguiseKey` holds everything the data owner must keep secret:
the block geometry, one random matrix per block, the block permutation,
the additive-noise level, and the class-label permutation.  All randomness
comes from counter-based Philox streams derived from a single 64-bit seed,
with a dedicated stream per purpose so that, for example, changing the
number of matrices never shifts the permutation draw.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, fields
from enum import IntEnum

import numpy as np

from .errors import (
    BadMagicError,
    FormatError,
    FramingError,
    InvalidDimensionError,
    InvariantError,
    PartitionError,
    TruncatedError,
    VersionError,
)

KEY_MAGIC = b"DNK1"
KEY_VERSION = 1

ORTHOGONALITY_TOL = 1e-9

# Stream tags for the per-purpose RNG substreams.
_PERM_STREAM = 0
_LABEL_STREAM = 1
_MATRIX_STREAM = 2


class MatrixKind(IntEnum):
    """Per-block matrix family; values double as the on-disk codes."""

    IDENTITY = 0
    ORTHOGONAL = 1
    PROJECTION = 2


def rng_stream(seed: int, *tags: int) -> np.random.Generator:
    """Independent, reproducible substream of the counter-based generator.

    Streams with different ``tags`` never overlap, which keeps every draw
    reproducible under parallel or reordered execution.
    """
    entropy = (int(seed),) + tuple(int(t) for t in tags)
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy=entropy)))


def sample_haar_orthogonal(m: int, rng: np.random.Generator) -> np.ndarray:
    """Draw an ``m x m`` orthogonal matrix uniformly under the Haar measure.

    QR-decomposes a Gaussian matrix and folds the signs of the triangular
    factor's diagonal back into Q.  Without that sign correction the raw QR
    output is biased and not Haar-uniform.
    """
    if m < 1:
        raise InvalidDimensionError(f"matrix dimension must be >= 1, got {m}")
    gauss = rng.standard_normal((m, m))
    q, r = np.linalg.qr(gauss)
    signs = np.sign(np.diag(r))
    signs[signs == 0] = 1.0
    return q * signs


def sample_projection(m: int, rng: np.random.Generator) -> np.ndarray:
    """Random projection matrix with i.i.d. Normal(0, 1/m) entries.

    The 1/m variance preserves vector norms in expectation, so projected
    blocks stay on the same numeric scale as orthogonally rotated ones.
    """
    if m < 1:
        raise InvalidDimensionError(f"matrix dimension must be >= 1, got {m}")
    return rng.normal(0.0, 1.0 / np.sqrt(m), size=(m, m))


def sample_permutation(t: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform random permutation of ``{0..t-1}``."""
    if t < 1:
        raise InvalidDimensionError(f"element count must be >= 1, got {t}")
    return rng.permutation(t).astype(np.int64)


def _is_bijection(perm: np.ndarray) -> bool:
    return perm.ndim == 1 and np.array_equal(np.sort(perm), np.arange(len(perm)))


@dataclass(frozen=True, eq=False)
class DisguiseKey:
    """The complete transformation secret.

    ``matrices`` has shape ``(t, m, m)`` with ``m == block_rows``; matrix i
    left-multiplies block i (in pre-permutation labeling) of every image.
    Instances are immutable and safe to share across worker threads.
    """

    version: int
    channels: int
    height: int
    width: int
    block_rows: int
    block_cols: int
    matrix_kind: MatrixKind
    matrices: np.ndarray
    permutation: np.ndarray
    noise_level: float
    label_permutation: np.ndarray
    seed: int

    def __post_init__(self):
        object.__setattr__(self, "matrix_kind", MatrixKind(self.matrix_kind))
        object.__setattr__(
            self, "matrices", np.ascontiguousarray(self.matrices, dtype=np.float64)
        )
        object.__setattr__(
            self, "permutation", np.ascontiguousarray(self.permutation, dtype=np.int64)
        )
        object.__setattr__(
            self,
            "label_permutation",
            np.ascontiguousarray(self.label_permutation, dtype=np.int64),
        )
        object.__setattr__(self, "noise_level", float(self.noise_level))
        self.validate()

    # -- derived geometry ------------------------------------------------

    @property
    def grid_rows(self) -> int:
        return self.height // self.block_rows

    @property
    def grid_cols(self) -> int:
        return self.width // self.block_cols

    @property
    def block_count(self) -> int:
        return self.grid_rows * self.grid_cols

    @property
    def class_count(self) -> int:
        return len(self.label_permutation)

    @property
    def geometry(self) -> tuple[int, int, int]:
        return (self.channels, self.height, self.width)

    # -- validation and equality -----------------------------------------

    def validate(self):
        """Raise :class:`InvariantError` unless every structural invariant holds."""
        if self.version != KEY_VERSION:
            raise InvariantError(f"unsupported key version {self.version}")
        if self.channels not in (1, 3):
            raise InvariantError(f"channels must be 1 or 3, got {self.channels}")
        for name in ("height", "width", "block_rows", "block_cols"):
            if getattr(self, name) < 1:
                raise InvariantError(f"{name} must be >= 1")
        if self.height % self.block_rows or self.width % self.block_cols:
            raise InvariantError(
                f"geometry {self.height}x{self.width} is not divisible into "
                f"{self.block_rows}x{self.block_cols} blocks"
            )
        t, m = self.block_count, self.block_rows
        if self.matrices.shape != (t, m, m):
            raise InvariantError(
                f"expected {t} matrices of shape {m}x{m}, got array of shape "
                f"{self.matrices.shape}"
            )
        if not np.all(np.isfinite(self.matrices)):
            raise InvariantError("matrices contain non-finite entries")
        if not _is_bijection(self.permutation) or len(self.permutation) != t:
            raise InvariantError(f"permutation is not a bijection on 0..{t - 1}")
        if not _is_bijection(self.label_permutation):
            raise InvariantError("label_permutation is not a bijection")
        if self.class_count < 1 or self.class_count > 0xFFFF:
            raise InvariantError(f"class count {self.class_count} out of range")
        if not np.isfinite(self.noise_level) or self.noise_level < 0:
            raise InvariantError(f"noise_level must be finite and >= 0, got {self.noise_level}")
        if not 0 <= self.seed < 2**64:
            raise InvariantError(f"seed {self.seed} does not fit in 64 bits")
        if self.matrix_kind == MatrixKind.ORTHOGONAL:
            eye = np.eye(m)
            for i, mat in enumerate(self.matrices):
                err = np.max(np.abs(mat @ mat.T - eye))
                if err > ORTHOGONALITY_TOL:
                    raise InvariantError(
                        f"matrix {i} deviates from orthogonality by {err:.3e}"
                    )

    def __eq__(self, other) -> bool:
        if not isinstance(other, DisguiseKey):
            return NotImplemented
        for f in fields(self):
            a, b = getattr(self, f.name), getattr(other, f.name)
            equal = np.array_equal(a, b) if isinstance(a, np.ndarray) else a == b
            if not equal:
                return False
        return True


def generate_key(
    *,
    channels: int,
    height: int,
    width: int,
    block_rows: int,
    block_cols: int,
    matrix_kind: MatrixKind | str = MatrixKind.ORTHOGONAL,
    noise_level: float = 0.0,
    class_count: int = 10,
    seed: int = 0,
) -> DisguiseKey:
    """Derive a complete key from a seed.

    Pure function of its arguments: equal inputs always produce equal keys.
    """
    if isinstance(matrix_kind, str):
        try:
            matrix_kind = MatrixKind[matrix_kind.upper()]
        except KeyError:
            raise InvariantError(f"unknown matrix kind {matrix_kind!r}") from None
    if height < 1 or width < 1 or block_rows < 1 or block_cols < 1:
        raise InvalidDimensionError("image and block dimensions must be >= 1")
    if height % block_rows:
        raise PartitionError(f"height {height} is not divisible by block rows {block_rows}")
    if width % block_cols:
        raise PartitionError(f"width {width} is not divisible by block cols {block_cols}")

    t = (height // block_rows) * (width // block_cols)
    m = block_rows
    if matrix_kind == MatrixKind.IDENTITY:
        matrices = np.tile(np.eye(m), (t, 1, 1))
    elif matrix_kind == MatrixKind.ORTHOGONAL:
        matrices = np.stack(
            [sample_haar_orthogonal(m, rng_stream(seed, _MATRIX_STREAM, i)) for i in range(t)]
        )
    elif matrix_kind == MatrixKind.PROJECTION:
        matrices = np.stack(
            [sample_projection(m, rng_stream(seed, _MATRIX_STREAM, i)) for i in range(t)]
        )
    else:  # pragma: no cover - IntEnum exhausts the kinds
        raise InvariantError(f"unknown matrix kind {matrix_kind!r}")

    return DisguiseKey(
        version=KEY_VERSION,
        channels=channels,
        height=height,
        width=width,
        block_rows=block_rows,
        block_cols=block_cols,
        matrix_kind=matrix_kind,
        matrices=matrices,
        permutation=sample_permutation(t, rng_stream(seed, _PERM_STREAM)),
        noise_level=noise_level,
        label_permutation=sample_permutation(class_count, rng_stream(seed, _LABEL_STREAM)),
        seed=seed,
    )


def identity_key(
    *,
    channels: int,
    height: int,
    width: int,
    block_rows: int,
    block_cols: int,
    class_count: int = 10,
) -> DisguiseKey:
    """Key whose transform is the identity: unit matrices, identity
    permutations, zero noise.  Useful for controls and ablations."""
    if height % block_rows or width % block_cols:
        raise PartitionError(
            f"geometry {height}x{width} is not divisible into "
            f"{block_rows}x{block_cols} blocks"
        )
    t = (height // block_rows) * (width // block_cols)
    return DisguiseKey(
        version=KEY_VERSION,
        channels=channels,
        height=height,
        width=width,
        block_rows=block_rows,
        block_cols=block_cols,
        matrix_kind=MatrixKind.IDENTITY,
        matrices=np.tile(np.eye(block_rows), (t, 1, 1)),
        permutation=np.arange(t),
        noise_level=0.0,
        label_permutation=np.arange(class_count),
        seed=0,
    )


# -- binary codec ----------------------------------------------------------
#
# DNK1 layout, all integers little-endian:
#   magic 4s | version u16 | channels u8 | height u16 | width u16 |
#   block_rows u16 | block_cols u16 | matrix_kind u8 | noise_level f64 |
#   class_count u16 | seed u64 | t u32 |
#   permutation t x u32 | label_permutation k x u16 |
#   matrices t x (m x m) f64 row-major

_HEADER = struct.Struct("<4sHBHHHHBdHQI")


def serialize_key(key: DisguiseKey) -> bytes:
    """Encode a key to the DNK1 byte layout (bit-exact round trip)."""
    header = _HEADER.pack(
        KEY_MAGIC,
        key.version,
        key.channels,
        key.height,
        key.width,
        key.block_rows,
        key.block_cols,
        int(key.matrix_kind),
        key.noise_level,
        key.class_count,
        key.seed,
        key.block_count,
    )
    return b"".join(
        (
            header,
            key.permutation.astype("<u4").tobytes(),
            key.label_permutation.astype("<u2").tobytes(),
            key.matrices.astype("<f8").tobytes(),
        )
    )


def deserialize_key(data: bytes) -> DisguiseKey:
    """Decode DNK1 bytes, validating magic, version, length, and invariants."""
    if len(data) < 4:
        raise TruncatedError(f"key file is {len(data)} bytes, shorter than the magic")
    if data[:4] != KEY_MAGIC:
        raise BadMagicError(f"expected magic {KEY_MAGIC!r}, got {bytes(data[:4])!r}")
    if len(data) < _HEADER.size:
        raise TruncatedError(
            f"key header needs {_HEADER.size} bytes, only {len(data)} present"
        )
    (
        _magic,
        version,
        channels,
        height,
        width,
        block_rows,
        block_cols,
        kind_code,
        noise_level,
        class_count,
        seed,
        t,
    ) = _HEADER.unpack_from(data, 0)
    if version != KEY_VERSION:
        raise VersionError(f"unsupported key version {version}")
    try:
        kind = MatrixKind(kind_code)
    except ValueError:
        raise FormatError(f"unknown matrix-kind code {kind_code}") from None

    m = block_rows
    perm_bytes = 4 * t
    label_bytes = 2 * class_count
    matrix_bytes = 8 * t * m * m
    expected = _HEADER.size + perm_bytes + label_bytes + matrix_bytes
    if len(data) < expected:
        raise TruncatedError(f"key payload needs {expected} bytes, got {len(data)}")
    if len(data) > expected:
        raise FramingError(f"{len(data) - expected} trailing bytes after key payload")

    off = _HEADER.size
    permutation = np.frombuffer(data, dtype="<u4", count=t, offset=off).astype(np.int64)
    off += perm_bytes
    label_permutation = np.frombuffer(data, dtype="<u2", count=class_count, offset=off).astype(
        np.int64
    )
    off += label_bytes
    matrices = (
        np.frombuffer(data, dtype="<f8", count=t * m * m, offset=off)
        .reshape(t, m, m)
        .copy()
    )

    return DisguiseKey(
        version=version,
        channels=channels,
        height=height,
        width=width,
        block_rows=block_rows,
        block_cols=block_cols,
        matrix_kind=kind,
        matrices=matrices,
        permutation=permutation,
        noise_level=noise_level,
        label_permutation=label_permutation,
        seed=seed,
    )


def save_key(path, key: DisguiseKey):
    with open(path, "wb") as fh:
        fh.write(serialize_key(key))


def load_key(path) -> DisguiseKey:
    with open(path, "rb") as fh:
        return deserialize_key(fh.read())
