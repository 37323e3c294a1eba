"""Closed-form keyspace accounting, reported in log2 units.

Raw counts overflow any fixed-width integer, so everything is a log2
figure.  The counts are lower-bound order-of-magnitude estimates from the
finite-field orthogonal-group count, not exact enumerations.
"""

from __future__ import annotations

import math

from .errors import InvalidDimensionError, InvariantError

# Largest n for which log2(n!) is an exact term-by-term sum; a Stirling
# series takes over beyond that.
_EXACT_SUM_LIMIT = 10**6


def log2_orthogonal_count(h: int, m: int) -> float:
    """log2 of the candidate count for m x m orthogonal matrices over
    h-bit encoded values: h * m."""
    if h < 1 or m < 1:
        raise InvalidDimensionError(f"h and m must be >= 1, got h={h}, m={m}")
    return float(h * m)


def log2_factorial(n: int) -> float:
    """log2(n!) by exact summation, switching to a Stirling series above 1e6."""
    if n < 0:
        raise InvalidDimensionError(f"n must be >= 0, got {n}")
    if n <= _EXACT_SUM_LIMIT:
        return math.fsum(map(math.log2, range(2, n + 1)))
    ln = (
        n * math.log(n)
        - n
        + 0.5 * math.log(2.0 * math.pi * n)
        + 1.0 / (12.0 * n)
        - 1.0 / (360.0 * n**3)
        + 1.0 / (1260.0 * n**5)
    )
    return ln / math.log(2.0)


def log2_combined_keyspace(h: int, m: int, r: int) -> float:
    """log2 of the combined permutation-and-matrix keyspace.

    With each matrix dimension split into r shares there are r*r blocks;
    the count is (r^2)! block permutations times 2^(h*m*r) matrix choices,
    so the log2 figure is log2((r^2)!) + h*m*r.  For r = 1 this reduces to
    :func:`log2_orthogonal_count`.
    """
    if h < 1 or m < 1 or r < 1:
        raise InvalidDimensionError(f"h, m, r must be >= 1, got h={h}, m={m}, r={r}")
    if m % r:
        raise InvariantError(f"matrix dimension {m} is not divisible into {r} shares")
    return log2_factorial(r * r) + float(h * m * r)
