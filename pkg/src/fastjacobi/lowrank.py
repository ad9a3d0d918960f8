"""Interpolative decomposition A ~= A[:, skel] @ R via column-pivoted QR."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import qr, solve_triangular

from .errors import ParameterError

__all__ = ["IDFactorization", "interpolative_decomposition"]


@dataclass(frozen=True)
class IDFactorization:
    """Skeleton column indices and the r x m interpolation matrix R."""

    skel: np.ndarray
    R: np.ndarray

    @property
    def rank(self) -> int:
        return int(self.skel.size)

    def reconstruct(self, A) -> np.ndarray:
        return np.asarray(A)[:, self.skel] @ self.R


def interpolative_decomposition(A, eps: float) -> IDFactorization:
    """eps-accurate column ID of A.

    The rank is the position of the first diagonal entry of the pivoted R
    factor at or below eps times the first.  The remaining columns are
    expressed in terms of the skeleton by a triangular solve.
    """
    if not eps > 0:
        raise ParameterError("eps must be positive")
    A = np.asarray(A)
    if A.ndim != 2:
        raise ParameterError("A must be a matrix")
    m = A.shape[1]
    if A.size == 0 or not np.any(A):
        return IDFactorization(np.zeros(0, dtype=int), np.zeros((0, m), dtype=A.dtype))
    _, Rq, piv = qr(A, mode="economic", pivoting=True)
    diag = np.abs(np.diag(Rq))
    small = np.nonzero(diag <= eps * diag[0])[0]
    r = int(small[0]) if small.size else diag.size
    T = solve_triangular(Rq[:r, :r], Rq[:r, r:])
    dtype = np.result_type(A.dtype, float)
    R = np.zeros((r, m), dtype=dtype)
    R[:, piv[:r]] = np.eye(r)
    R[:, piv[r:]] = T
    return IDFactorization(np.array(piv[:r]), R)
