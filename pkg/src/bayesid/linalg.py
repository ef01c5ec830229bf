"""Column-pivoted QR and QR-based least squares.

Thin wrappers around LAPACK (via scipy) that pin down the conventions the
rest of the package relies on: permutation as an index array, nonincreasing
|R| diagonal, and rank deficiency reported as an error instead of a silent
minimum-norm solution.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import RankDeficiencyError


@dataclass
class PivotedQr:
    """Economic factorization A[:, perm] = q @ r with |diag(r)| nonincreasing."""

    q: np.ndarray
    r: np.ndarray
    perm: np.ndarray


def _as_matrix(a) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.ndim != 2:
        raise ValueError(f"expected a 2-d array, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix contains non-finite entries")
    return a


def cpqr(a) -> PivotedQr:
    """Householder QR with column pivoting (economic form)."""
    a = _as_matrix(a)
    q, r, perm = scipy.linalg.qr(a, mode="economic", pivoting=True)
    return PivotedQr(q=q, r=r, perm=perm)


def numerical_rank(r: np.ndarray, rtol: float | None = None) -> int:
    """Rank estimate from the diagonal of a pivoted R factor."""
    diag = np.abs(np.diag(r))
    if diag.size == 0 or diag[0] == 0.0:
        return 0
    if rtol is None:
        rtol = max(r.shape) * np.finfo(float).eps
    return int(np.count_nonzero(diag > rtol * diag[0]))


def solve_least_squares(c, a) -> np.ndarray:
    """Minimize ||a - c @ w||_F over w, via pivoted QR of c.

    Raises RankDeficiencyError (carrying the numerical rank) when c does not
    have full column rank; the caller decides how to recover.
    """
    c = _as_matrix(c)
    a = _as_matrix(a)
    if c.shape[0] != a.shape[0]:
        raise ValueError(f"row counts differ: c has {c.shape[0]}, a has {a.shape[0]}")
    fac = cpqr(c)
    rank = numerical_rank(fac.r)
    if rank < c.shape[1]:
        raise RankDeficiencyError("least-squares matrix is rank deficient", rank)
    w_perm = scipy.linalg.solve_triangular(fac.r, fac.q.T @ a)
    w = np.empty_like(w_perm)
    w[fac.perm] = w_perm
    return w
