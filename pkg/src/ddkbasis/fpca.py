"""Functional principal components through basis coefficients.

Curves are projected on an orthonormal basis, the coefficient covariance is
estimated and diagonalized; eigenvector ``k`` holds the coefficients of the
estimated eigenfunction ``e_k = sum_i v_ik f_i``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .bases import OrthoBasis, project, synthesize
from .errors import ContractViolation, RangeError, TooFewCurvesError
from .fcore import FunctionalDataset, Grid
from .linalg import eig_sym

__all__ = [
    "CoefCovariance",
    "FpcaResult",
    "eig_sym",
    "estimate_covariance",
    "fpca",
    "reconstruct",
    "truncation_error",
]

SIGN_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class CoefCovariance:
    matrix: np.ndarray
    centered: bool
    mean_coefs: np.ndarray
    n: int


def estimate_covariance(coefs, center: bool = False) -> CoefCovariance:
    """Sample covariance of coefficient rows with divisor ``n - 1``.

    Without centering the second-moment matrix ``C^T C / (n - 1)`` is
    returned and ``mean_coefs`` is zero.
    """
    c = np.atleast_2d(np.asarray(coefs, dtype=float))
    n = c.shape[0]
    if n < 2:
        raise TooFewCurvesError("covariance needs at least two samples")
    mean = c.mean(axis=0) if center else np.zeros(c.shape[1])
    d = c - mean
    s = d.T @ d / (n - 1)
    return CoefCovariance(0.5 * (s + s.T), center, mean, n)


@dataclass(frozen=True, eq=False)
class FpcaResult:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray  # columns, coefficient space
    basis: OrthoBasis
    mean_coefs: np.ndarray

    def eigenfunctions(self, grid: Grid, count: int | None = None) -> np.ndarray:
        """``count x m`` samples of the leading eigenfunctions."""
        k = self.eigenvalues.size if count is None else count
        return synthesize(self.eigenvectors[:, :k].T, self.basis, grid)

    def mean_function(self, grid: Grid) -> np.ndarray:
        return synthesize(self.mean_coefs, self.basis, grid)[0]


def _fix_signs(vectors: np.ndarray) -> np.ndarray:
    v = vectors.copy()
    for k in range(v.shape[1]):
        nz = np.nonzero(np.abs(v[:, k]) > SIGN_TOL)[0]
        if nz.size and v[nz[0], k] < 0:
            v[:, k] = -v[:, k]
    return v


def fpca(dataset: FunctionalDataset, basis: OrthoBasis, center: bool = False) -> FpcaResult:
    cov = estimate_covariance(project(dataset, basis), center)
    values, vectors = eig_sym(cov.matrix)
    values = np.maximum(values, 0.0)
    return FpcaResult(values, _fix_signs(vectors), basis, cov.mean_coefs)


def reconstruct(dataset: FunctionalDataset, result: FpcaResult, K: int) -> FunctionalDataset:
    """Mean plus the projection of each centred curve on the first ``K``
    eigenfunctions, sampled on the dataset grid."""
    size = result.eigenvalues.size
    if not 1 <= K <= size:
        raise RangeError(f"K must lie in [1, {size}], got {K}")
    coefs = project(dataset, result.basis) - result.mean_coefs
    v = result.eigenvectors[:, :K]
    fitted = (coefs @ v) @ v.T + result.mean_coefs
    return FunctionalDataset(dataset.grid, synthesize(fitted, result.basis, dataset.grid), dataset.labels, dataset.domain)


def truncation_error(A, lam, kept: Iterable[int]) -> float:
    """Expected squared error ``sum_k lam_k sum_{i not in kept} A_ki^2`` of
    representing the noiseless model in the span of the kept basis elements
    (zero-based indices)."""
    a = np.atleast_2d(np.asarray(A, dtype=float))
    lam = np.asarray(lam, dtype=float)
    if np.max(np.abs(a @ a.T - np.eye(a.shape[0]))) > 1e-9:
        raise ContractViolation("rows of A must be orthonormal")
    keep = np.zeros(a.shape[1], dtype=bool)
    idx = np.asarray(list(kept), dtype=int)
    if idx.size and (idx.min() < 0 or idx.max() >= a.shape[1]):
        raise RangeError("kept index out of range")
    keep[idx] = True
    return float(np.sum(lam[:, None] * a[:, ~keep] ** 2))
