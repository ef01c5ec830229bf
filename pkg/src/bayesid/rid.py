"""Randomized interpolative decomposition baseline.

Samples a modest overset of columns uniformly, lets a column-pivoted QR
pick K of them, and solves an unconstrained least squares for the
interpolation weights. Fast, but nothing bounds the weight magnitudes;
``max_magnitude_excess`` quantifies how far outside [-1, 1] they land.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError
from .linalg import cpqr, solve_least_squares


@dataclass
class RidResult:
    """Selected column set, basis C = A[:, j_set], and weights W with A ~ C @ W."""

    j_set: np.ndarray
    c: np.ndarray
    w: np.ndarray
    max_abs_w: float


def randomized_id(a, k: int, rng: np.random.Generator, oversample: float = 1.2) -> RidResult:
    """Interpolative decomposition with randomized column sampling.

    ``ceil(oversample * k)`` distinct columns are sampled uniformly (all of
    them when that exceeds the column count), pivoted QR keeps the first k
    pivots, and the weights are recomputed against the full matrix.
    """
    a = np.asarray(a, dtype=float)
    if a.ndim != 2:
        raise ValueError(f"expected a 2-d array, got shape {a.shape}")
    n = a.shape[1]
    if not 1 <= k <= n:
        raise ConfigurationError(f"k must lie in [1, {n}], got {k}")
    if oversample < 1.0:
        raise ConfigurationError(f"oversample must be at least 1, got {oversample}")

    n_sample = min(math.ceil(oversample * k), n)
    sampled = np.sort(rng.choice(n, size=n_sample, replace=False))
    fac = cpqr(a[:, sampled])
    j_set = np.sort(sampled[fac.perm[:k]])
    c = a[:, j_set]
    w = solve_least_squares(c, a)
    return RidResult(j_set=j_set, c=c, w=w, max_abs_w=float(np.max(np.abs(w))))


def max_magnitude_excess(w) -> float:
    """How far the largest |w| entry exceeds 1; zero when all weights are bounded."""
    w = np.asarray(w, dtype=float)
    if w.size == 0:
        return 0.0
    return max(0.0, float(np.max(np.abs(w))) - 1.0)
