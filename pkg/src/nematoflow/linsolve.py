"""Matrix-free conjugate-gradient solver with diagonal preconditioning.

Works on fields of any shape (the operator is a closure over grid slicing).
Inner products use numpy's pairwise reduction on elementwise products, which
is deterministic for a fixed array shape independent of BLAS threading, so
solves are bit-reproducible at any worker count.

The stopping criterion is ||r||_2 <= rtol * ||b||_2 against the full
right-hand side (not the initial residual), so warm starts cannot weaken the
guarantee.  For the singular all-Neumann pressure problem, ``remove_mean``
keeps iterates in the mean-free complement of the constant kernel (the
projection is reapplied periodically to stop round-off drift).
"""

from __future__ import annotations

from typing import Callable, Optional

import numpy as np


class LinearSolveError(RuntimeError):
    """Conjugate-gradient iteration failed to reach the requested tolerance."""


_MEAN_REPROJECT_EVERY = 32


def _dot(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.add.reduce(np.multiply(a, b).ravel()))


def cg(apply_op: Callable[[np.ndarray], np.ndarray],
       b: np.ndarray,
       x0: Optional[np.ndarray] = None,
       diag: Optional[np.ndarray] = None,
       rtol: float = 1e-10,
       max_iter: Optional[int] = None,
       remove_mean: bool = False,
       label: str = "cg") -> np.ndarray:
    """Solve apply_op(x) = b for a symmetric positive (semi)definite operator.

    diag is the operator diagonal (Jacobi preconditioner); max_iter defaults
    to 10 * b.size.  Raises LinearSolveError on non-convergence.
    """
    b = np.asarray(b, dtype=float)
    if max_iter is None:
        max_iter = 10 * b.size
    if remove_mean:
        b = b - np.mean(b)
    norm_b_sq = _dot(b, b)
    if norm_b_sq == 0.0:
        return np.zeros_like(b)
    stop_sq = rtol * rtol * norm_b_sq

    x = np.zeros_like(b) if x0 is None else np.array(x0, dtype=float, copy=True)
    if remove_mean:
        x -= np.mean(x)
    r = b - apply_op(x)
    if remove_mean:
        r -= np.mean(r)
    if _dot(r, r) <= stop_sq:
        return x

    inv_diag = None if diag is None else 1.0 / diag
    z = r if inv_diag is None else r * inv_diag
    p = z.copy()
    rz = _dot(r, z)
    for k in range(1, max_iter + 1):
        Ap = apply_op(p)
        pAp = _dot(p, Ap)
        if pAp <= 0.0:
            raise LinearSolveError(f"{label}: operator not positive definite (pAp={pAp})")
        alpha = rz / pAp
        x += alpha * p
        r -= alpha * Ap
        if remove_mean and k % _MEAN_REPROJECT_EVERY == 0:
            r -= np.mean(r)
        if _dot(r, r) <= stop_sq:
            if remove_mean:
                x -= np.mean(x)
            return x
        z = r if inv_diag is None else r * inv_diag
        rz_new = _dot(r, z)
        p = z + (rz_new / rz) * p
        rz = rz_new
    raise LinearSolveError(
        f"{label}: no convergence in {max_iter} iterations "
        f"(residual {np.sqrt(_dot(r, r) / norm_b_sq):.3e} relative)")
