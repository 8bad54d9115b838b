"""Deterministic sampling utilities.

All randomness in the package flows through counter-based Philox generators
keyed by a single seed plus an integer stream id, so results are bit-identical
across runs and across worker counts.  Low-discrepancy coverage of parameter
boxes uses an unscrambled Halton sequence, which is a fixed mathematical
object (no RNG state at all).
"""

from __future__ import annotations

import numpy as np

_HALTON_BASES = (2, 3, 5, 7, 11, 13)


def radical_inverse(index: int, base: int) -> float:
    """van der Corput radical inverse of ``index`` in the given base."""
    inv = 0.0
    f = 1.0 / base
    while index > 0:
        inv += f * (index % base)
        index //= base
        f /= base
    return inv


def halton(n: int, dim: int, offset: int = 0) -> np.ndarray:
    """First ``n`` points of the ``dim``-dimensional Halton sequence.

    ``offset`` shifts the starting index (index 0 is always skipped; it maps
    to the origin and degrades coverage).  Returns an (n, dim) array in
    [0, 1)^dim.
    """
    if dim > len(_HALTON_BASES):
        raise ValueError(f"halton supports up to {len(_HALTON_BASES)} dimensions")
    if n < 0:
        raise ValueError("n must be nonnegative")
    out = np.empty((n, dim))
    for j in range(dim):
        base = _HALTON_BASES[j]
        out[:, j] = [radical_inverse(offset + 1 + i, base) for i in range(n)]
    return out


def scale_box(points01: np.ndarray, lo, hi) -> np.ndarray:
    """Affinely map [0,1)^dim points into the box [lo, hi] (per column)."""
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    return lo + points01 * (hi - lo)


def make_rng(seed: int, stream: int = 0) -> np.random.Generator:
    """Counter-based generator for (seed, stream); independent across streams."""
    return np.random.Generator(np.random.Philox(key=[seed & (2**64 - 1), stream & (2**64 - 1)]))


def smooth_cosine_field(
    x: np.ndarray,
    y: np.ndarray,
    lx: float,
    ly: float,
    rng: np.random.Generator,
    kmax: int = 3,
) -> np.ndarray:
    """Seeded smooth field with zero normal derivative on the rectangle walls.

    Sum of cos(k pi x / lx) cos(l pi y / ly) modes with 1 <= k+l <= 2*kmax and
    decaying random coefficients, normalized to unit max-norm.  x and y are
    broadcastable coordinate arrays (cell centers, typically).
    """
    field = np.zeros(np.broadcast(x, y).shape)
    for k in range(kmax + 1):
        for l in range(kmax + 1):
            if k == 0 and l == 0:
                continue
            c = rng.standard_normal() / (1.0 + k * k + l * l)
            field = field + c * np.cos(k * np.pi * x / lx) * np.cos(l * np.pi * y / ly)
    peak = np.max(np.abs(field))
    if peak > 0.0:
        field = field / peak
    return field
