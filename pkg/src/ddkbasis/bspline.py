"""B-splines on clamped knot sequences, evaluated by the Cox-de Boor recursion."""
from __future__ import annotations

import numpy as np

from .errors import DomainError, RangeError

_EDGE_TOL = 1e-14


def clamped_knots(internal, degree: int) -> np.ndarray:
    """Extended sequence with 0 and 1 each repeated ``degree + 1`` times."""
    internal = np.asarray(internal, dtype=float)
    return np.concatenate([np.zeros(degree + 1), internal, np.ones(degree + 1)])


def bspline_matrix(ext, degree: int, t) -> np.ndarray:
    """All B-splines of ``degree`` on the extended knots ``ext`` at points ``t``.

    Returns an array of shape ``(len(t), len(ext) - degree - 1)``.  Basis
    intervals are half-open on the right, except that the last nondegenerate
    interval is closed so the right end point is covered.  Terms with a zero
    denominator contribute zero.
    """
    ext = np.asarray(ext, dtype=float)
    t = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(t < ext[0] - _EDGE_TOL) or np.any(t > ext[-1] + _EDGE_TOL):
        raise DomainError("evaluation points outside the knot range")
    n_int = ext.size - 1
    left, right = ext[:-1], ext[1:]
    b = ((t[:, None] >= left) & (t[:, None] < right)).astype(float)
    last = np.nonzero(right > left)[0]
    if last.size:
        j = last[-1]
        at_end = t >= right[j]
        b[at_end, :] = 0.0
        b[at_end, j] = 1.0
    for d in range(1, degree + 1):
        n_fun = n_int - d
        lo, hi = ext[:n_fun], ext[d : d + n_fun]
        lo1, hi1 = ext[1 : 1 + n_fun], ext[d + 1 : d + 1 + n_fun]
        den1 = hi - lo
        den2 = hi1 - lo1
        w1 = np.divide(t[:, None] - lo, den1, out=np.zeros((t.size, n_fun)), where=den1 > 0)
        w2 = np.divide(hi1 - t[:, None], den2, out=np.zeros((t.size, n_fun)), where=den2 > 0)
        b = w1 * b[:, :n_fun] + w2 * b[:, 1 : n_fun + 1]
    return b


def eval_bspline(ext, degree: int, index: int, t: float) -> float:
    """Value of the ``index``-th B-spline of ``degree`` at ``t`` in [0, 1]."""
    ext = np.asarray(ext, dtype=float)
    if np.any(np.diff(ext) < 0):
        raise DomainError("extended knot sequence must be nondecreasing")
    if not 0 <= index <= ext.size - degree - 2:
        raise RangeError(f"B-spline index {index} out of range")
    if not 0.0 <= t <= 1.0:
        raise DomainError(f"t={t} outside [0, 1]")
    return float(bspline_matrix(ext, degree, [t])[0, index])


def gauss_nodes(breaks, n_nodes: int):
    """Gauss-Legendre nodes and weights on every nondegenerate break interval."""
    breaks = np.unique(np.asarray(breaks, dtype=float))
    x, w = np.polynomial.legendre.leggauss(n_nodes)
    a, b = breaks[:-1], breaks[1:]
    half = 0.5 * (b - a)
    nodes = ((a + half)[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def bspline_gram(ext, degree: int) -> np.ndarray:
    """Exact Gram matrix of the B-splines; products have degree ``2*degree``
    so ``degree + 1`` Gauss nodes per interval integrate them exactly."""
    nodes, weights = gauss_nodes(ext, degree + 1)
    b = bspline_matrix(ext, degree, nodes)
    g = (b * weights[:, None]).T @ b
    return 0.5 * (g + g.T)


class SplineFunction:
    """A fixed linear combination of B-splines, usable as a piecewise
    polynomial by :func:`ddkbasis.fcore.exact_poly_inner_product`."""

    def __init__(self, ext, degree: int, coef):
        self.ext = np.asarray(ext, dtype=float)
        self.degree = int(degree)
        self.coef = np.asarray(coef, dtype=float)
        self.breaks = np.unique(self.ext)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        return (bspline_matrix(self.ext, self.degree, t.ravel()) @ self.coef).reshape(t.shape)
