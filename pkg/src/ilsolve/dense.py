"""Dense symmetric kernels: Cholesky factorization and triangular solves.

The factorization doubles as the positive-definiteness test used by the
convergence-condition checks, so it reports the failing elimination step
instead of a bare exception.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import NotSpdError

__all__ = ["CholeskyFactor", "dense_cholesky", "cholesky_solve", "is_spd", "one_norm_dense"]

_EPS = float(np.finfo(np.float64).eps)


@dataclass(frozen=True)
class CholeskyFactor:
    """Lower-triangular factor L with L L' equal to the input matrix."""

    n: int
    lower: np.ndarray

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        return cholesky_solve(self, rhs)


def dense_cholesky(m: np.ndarray, symmetry_tol: float = 1e-12) -> CholeskyFactor:
    """Factor a symmetric positive definite matrix as L L'.

    Raises NotSpdError with the elimination step when a pivot is
    non-positive or falls below n*eps*max|diag| (the rounding guard that
    keeps semidefinite inputs from slipping through as definite).
    """
    a = np.array(m, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("matrix must be square")
    n = a.shape[0]
    scale = np.abs(a).max() if n else 0.0
    if n and np.abs(a - a.T).max() > symmetry_tol * max(scale, 1e-300):
        raise ValueError("matrix is not symmetric to the required tolerance")
    pivot_floor = n * _EPS * max(np.abs(np.diag(a)).max(), 0.0) if n else 0.0
    for k in range(n):
        pivot = a[k, k]
        if pivot <= 0.0 or pivot <= pivot_floor:
            raise NotSpdError(k, pivot)
        root = math.sqrt(pivot)
        a[k, k] = root
        if k + 1 < n:
            col = a[k + 1 :, k] / root
            a[k + 1 :, k] = col
            a[k + 1 :, k + 1 :] -= np.outer(col, col)
    return CholeskyFactor(n, np.tril(a))


def cholesky_solve(factor: CholeskyFactor, rhs: np.ndarray) -> np.ndarray:
    """Solve M z = rhs given the factor of M."""
    rhs = np.asarray(rhs, dtype=np.float64)
    if rhs.shape[0] != factor.n:
        raise ValueError(f"right-hand side has length {rhs.shape[0]}, expected {factor.n}")
    y = solve_lower(factor.lower, rhs)
    return solve_lower_transpose(factor.lower, y)


def solve_lower(lower: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Forward substitution for L y = b (b may be a matrix of columns)."""
    n = lower.shape[0]
    y = np.array(b, dtype=np.float64)
    for i in range(n):
        if i:
            y[i] -= lower[i, :i] @ y[:i]
        y[i] /= lower[i, i]
    return y


def solve_lower_transpose(lower: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Back substitution for L' z = b."""
    n = lower.shape[0]
    z = np.array(b, dtype=np.float64)
    for i in range(n - 1, -1, -1):
        if i + 1 < n:
            z[i] -= lower[i + 1 :, i] @ z[i + 1 :]
        z[i] /= lower[i, i]
    return z


def is_spd(m: np.ndarray) -> bool:
    """Positive-definiteness via attempted factorization."""
    try:
        dense_cholesky(m)
    except NotSpdError:
        return False
    return True


def one_norm_dense(m: np.ndarray) -> float:
    m = np.asarray(m, dtype=np.float64)
    if m.size == 0:
        return 0.0
    return float(np.abs(m).sum(axis=0).max())
