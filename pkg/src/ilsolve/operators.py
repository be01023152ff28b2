"""A minimal matrix-free linear-operator abstraction.

Solvers only ever need "apply to a vector", so sparse matrices, dense
arrays and composed expressions (shifted Gram products and the like) all
travel through this one interface.
"""

from __future__ import annotations

import numpy as np

from .sparse import SparseMatrixCsr, spmv, spmv_transpose

__all__ = ["LinearOperator", "aslinearoperator", "identity_operator", "operator_to_dense"]


class LinearOperator:
    """Wraps an apply callable (and optionally its transpose) with a shape."""

    __slots__ = ("n_rows", "n_cols", "_apply", "_apply_t")

    def __init__(self, n_rows, n_cols, apply, apply_transpose=None):
        self.n_rows = int(n_rows)
        self.n_cols = int(n_cols)
        self._apply = apply
        self._apply_t = apply_transpose

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n_rows, self.n_cols)

    def apply(self, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v, dtype=np.float64)
        if v.shape != (self.n_cols,):
            raise ValueError(f"operand has shape {v.shape}, expected ({self.n_cols},)")
        return self._apply(v)

    def apply_transpose(self, v: np.ndarray) -> np.ndarray:
        if self._apply_t is None:
            raise NotImplementedError("operator has no transpose apply")
        v = np.asarray(v, dtype=np.float64)
        if v.shape != (self.n_rows,):
            raise ValueError(f"operand has shape {v.shape}, expected ({self.n_rows},)")
        return self._apply_t(v)

    def __call__(self, v: np.ndarray) -> np.ndarray:
        return self.apply(v)


def aslinearoperator(a) -> LinearOperator:
    """Adapt a CSR matrix, 2-D ndarray, or LinearOperator to the interface."""
    if isinstance(a, LinearOperator):
        return a
    if isinstance(a, SparseMatrixCsr):
        return LinearOperator(
            a.n_rows, a.n_cols, lambda v: spmv(a, v), lambda v: spmv_transpose(a, v)
        )
    arr = np.asarray(a, dtype=np.float64)
    if arr.ndim != 2:
        raise TypeError(f"cannot interpret {type(a).__name__} as a linear operator")
    return LinearOperator(
        arr.shape[0], arr.shape[1], lambda v: arr @ v, lambda v: arr.T @ v
    )


def identity_operator(n: int) -> LinearOperator:
    return LinearOperator(n, n, lambda v: v.copy(), lambda v: v.copy())


def operator_to_dense(op: LinearOperator) -> np.ndarray:
    """Materialize by applying to unit vectors (desk-scale use only)."""
    out = np.empty((op.n_rows, op.n_cols))
    e = np.zeros(op.n_cols)
    for j in range(op.n_cols):
        e[j] = 1.0
        out[:, j] = op.apply(e)
        e[j] = 0.0
    return out
