"""Symmetric eigensolver and symmetric orthonormalization."""
from __future__ import annotations

import numba
import numpy as np

from .errors import ContractViolation

MAX_SWEEPS = 60


@numba.njit(cache=True)
def _jacobi_sweeps(a, v, threshold, max_sweeps):
    n = a.shape[0]
    for sweep in range(max_sweeps):
        off = 0.0
        for i in range(n):
            for j in range(i + 1, n):
                off = max(off, abs(a[i, j]))
        if off < threshold:
            return sweep
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= 0.1 * threshold:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                if theta == 0.0:
                    t = 1.0
                else:
                    t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                # A <- J^T A J with J[p,p]=J[q,q]=c, J[p,q]=s, J[q,p]=-s
                for k in range(n):
                    akp = a[k, p]
                    akq = a[k, q]
                    a[k, p] = c * akp - s * akq
                    a[k, q] = s * akp + c * akq
                for k in range(n):
                    apk = a[p, k]
                    aqk = a[q, k]
                    a[p, k] = c * apk - s * aqk
                    a[q, k] = s * apk + c * aqk
                for k in range(n):
                    vkp = v[k, p]
                    vkq = v[k, q]
                    v[k, p] = c * vkp - s * vkq
                    v[k, q] = s * vkp + c * vkq
    return -1


def eig_sym(matrix, tol: float = 1e-12):
    """Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.

    Pairs ``(p, q)`` are visited row by row; sweeps stop once the largest
    off-diagonal entry is below ``tol * ||M||_F``.

    Returns
    -------
    values : ndarray
        Eigenvalues in nonincreasing order.
    vectors : ndarray
        Orthonormal eigenvectors as columns, matching ``values``.
    """
    a = np.array(matrix, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ContractViolation("eig_sym needs a square matrix")
    n = a.shape[0]
    scale = float(np.linalg.norm(a))
    if n and np.max(np.abs(a - a.T)) > 1e-9 * max(scale, 1.0):
        raise ContractViolation("eig_sym needs a symmetric matrix")
    a = np.ascontiguousarray(0.5 * (a + a.T))
    v = np.eye(n)
    if n > 1 and scale > 0.0:
        if _jacobi_sweeps(a, v, tol * scale, MAX_SWEEPS) < 0:
            raise ArithmeticError("Jacobi iteration did not converge")
    values = np.diag(a).copy()
    order = np.argsort(-values, kind="stable")
    return values[order], v[:, order]


def inverse_sqrt(matrix) -> np.ndarray:
    """Symmetric inverse square root of a positive definite matrix."""
    w, u = eig_sym(matrix)
    if np.min(w) <= 0.0:
        raise ArithmeticError("matrix is not positive definite")
    return (u / np.sqrt(w)) @ u.T


def lowdin(vectors: np.ndarray, metric: np.ndarray) -> np.ndarray:
    """Symmetric (Lowdin) orthonormalization of the columns of ``vectors``
    with respect to the inner product ``x^T metric y``."""
    overlap = vectors.T @ metric @ vectors
    return vectors @ inverse_sqrt(0.5 * (overlap + overlap.T))
