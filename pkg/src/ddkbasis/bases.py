"""Orthonormal bases on [0, 1]: piecewise constants, Fourier and splinets.

A splinet is an orthonormal basis spanning the same space as the clamped
B-splines of a given degree.  It is built by nested dissection of the
B-spline index range: single B-splines sit at the leaves of a binary tree,
each inner node holds the ``degree`` B-splines separating its two children,
and a node's separators are orthogonalized against everything already built
below them and then among themselves by the symmetric (Lowdin) method.
Leaves and separators at the same level have disjoint supports, so the
result is orthonormal while every level-``l`` element stays supported on at
most ``(degree + 1) * 2**l`` knot intervals.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .bspline import SplineFunction, bspline_gram, bspline_matrix, clamped_knots
from .errors import DomainError, InsufficientKnotsError
from .fcore import FunctionalDataset, Grid, PiecewisePolynomial, exact_poly_inner_product
from .linalg import lowdin

_DUP_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class KnotSet:
    """Simple interior knots; the boundary knots 0 and 1 are implicit."""

    internal: np.ndarray

    def __post_init__(self):
        k = np.asarray(self.internal, dtype=float).ravel()
        if k.size:
            if np.any(k <= 0.0) or np.any(k >= 1.0):
                raise DomainError("interior knots must lie strictly inside (0, 1)")
            if np.any(np.diff(k) <= _DUP_TOL):
                raise DomainError("knots must be strictly increasing and distinct")
        k.setflags(write=False)
        object.__setattr__(self, "internal", k)

    @classmethod
    def from_unsorted(cls, knots) -> "KnotSet":
        return cls(np.sort(np.asarray(knots, dtype=float)))

    @classmethod
    def equispaced(cls, count: int) -> "KnotSet":
        return cls(np.arange(1, count + 1) / (count + 1))

    def __len__(self):
        return self.internal.size

    @property
    def breaks(self) -> np.ndarray:
        return np.concatenate([[0.0], self.internal, [1.0]])

    def __eq__(self, other):
        return isinstance(other, KnotSet) and np.array_equal(self.internal, other.internal)

    def __hash__(self):
        return hash(self.internal.tobytes())


class OrthoBasis:
    """Common interface: ``evaluate(t)`` returns a ``(len(t), size)`` matrix."""

    kind: str = ""
    size: int
    knots: Optional[KnotSet] = None
    degree: int = 0

    def evaluate(self, t) -> np.ndarray:
        raise NotImplementedError

    def gram(self) -> np.ndarray:
        raise NotImplementedError

    def __repr__(self):
        return f"{type(self).__name__}(kind={self.kind!r}, size={self.size})"


class PiecewiseConstantBasis(OrthoBasis):
    kind = "piecewise_constant"

    def __init__(self, knots: KnotSet):
        self.knots = knots
        self.degree = 0
        self.breaks = knots.breaks
        self.size = self.breaks.size - 1
        self.heights = 1.0 / np.sqrt(np.diff(self.breaks))

    def interval_index(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        return np.clip(np.searchsorted(self.breaks, t, side="right") - 1, 0, self.size - 1)

    def evaluate(self, t) -> np.ndarray:
        t = np.atleast_1d(np.asarray(t, dtype=float))
        idx = self.interval_index(t)
        out = np.zeros((t.size, self.size))
        out[np.arange(t.size), idx] = self.heights[idx]
        return out

    def element(self, j: int) -> PiecewisePolynomial:
        return PiecewisePolynomial(self.breaks[j : j + 2], [[self.heights[j]]])

    def gram(self) -> np.ndarray:
        return _exact_gram([self.element(j) for j in range(self.size)])


class FourierBasis(OrthoBasis):
    """``1, sqrt2 sin 2pi t, sqrt2 cos 2pi t, sqrt2 sin 4pi t, ...`` cut at ``size``."""

    kind = "fourier"

    def __init__(self, size: int):
        if size < 1:
            raise ValueError("Fourier basis needs at least one element")
        self.size = int(size)
        self.degree = 0
        self.knots = None

    def evaluate(self, t) -> np.ndarray:
        t = np.atleast_1d(np.asarray(t, dtype=float))
        out = np.empty((t.size, self.size))
        out[:, 0] = 1.0
        for j in range(1, self.size):
            freq = 2.0 * np.pi * ((j + 1) // 2)
            out[:, j] = np.sqrt(2.0) * (np.sin(freq * t) if j % 2 else np.cos(freq * t))
        return out

    def gram(self) -> np.ndarray:
        # composite Gauss rule, far beyond the needed accuracy for these frequencies
        x, w = np.polynomial.legendre.leggauss(20)
        pieces = max(16, 2 * self.size)
        a = np.arange(pieces) / pieces
        h = 0.5 / pieces
        nodes = ((a + h)[:, None] + h * x[None, :]).ravel()
        weights = np.tile(h * w, pieces)
        f = self.evaluate(nodes)
        return (f * weights[:, None]).T @ f


class SplinetBasis(OrthoBasis):
    kind = "splinet"

    def __init__(self, knots: KnotSet, degree: int, coef: np.ndarray, levels: np.ndarray):
        self.knots = knots
        self.degree = int(degree)
        self.ext = clamped_knots(knots.internal, degree)
        self.coef = coef
        self.levels = levels
        self.size = coef.shape[1]

    def evaluate(self, t) -> np.ndarray:
        t = np.atleast_1d(np.asarray(t, dtype=float))
        return bspline_matrix(self.ext, self.degree, t) @ self.coef

    def element(self, j: int) -> SplineFunction:
        return SplineFunction(self.ext, self.degree, self.coef[:, j])

    def gram(self) -> np.ndarray:
        return self.coef.T @ bspline_gram(self.ext, self.degree) @ self.coef

    def support_intervals(self, j: int) -> int:
        """Number of nondegenerate knot intervals under element ``j``."""
        nz = np.nonzero(self.coef[:, j])[0]
        lo, hi = self.ext[nz[0]], self.ext[nz[-1] + self.degree + 1]
        br = self.knots.breaks
        return int(np.count_nonzero((br[:-1] >= lo) & (br[1:] <= hi)))


def _exact_gram(elements) -> np.ndarray:
    n = len(elements)
    g = np.empty((n, n))
    for i in range(n):
        for j in range(i, n):
            g[i, j] = g[j, i] = exact_poly_inner_product(elements[i], elements[j])
    return g


def build_piecewise_constant(knots: KnotSet) -> PiecewiseConstantBasis:
    return PiecewiseConstantBasis(knots)


def build_fourier(size: int) -> FourierBasis:
    return FourierBasis(size)


def _dissection_sizes(degree: int, n: int):
    sizes = [1]
    while sizes[-1] < n:
        sizes.append(2 * sizes[-1] + degree)
    return sizes


def _dissect(lo: int, hi: int, degree: int, sizes, out):
    """Append ``(level, indices, lo, hi)`` nodes for the index range
    [lo, hi) in bottom-up order (children before their parent)."""
    count = hi - lo
    if count <= 0:
        return
    level = next(ell for ell, s in enumerate(sizes) if s >= count)
    if level == 0:
        out.append((0, [lo], lo, hi))
        return
    half = sizes[level - 1]
    sep_lo = lo + half
    sep_hi = min(hi, sep_lo + degree)
    _dissect(lo, sep_lo, degree, sizes, out)
    _dissect(sep_hi, hi, degree, sizes, out)
    if sep_hi > sep_lo:
        out.append((level, list(range(sep_lo, sep_hi)), lo, hi))


def build_splinet(knots: KnotSet, degree: int = 3) -> SplinetBasis:
    """Orthonormal splinet spanning the clamped B-splines of ``degree``."""
    if len(knots) < degree + 1:
        raise InsufficientKnotsError(
            f"a degree-{degree} splinet needs at least {degree + 1} interior knots, got {len(knots)}"
        )
    ext = clamped_knots(knots.internal, degree)
    gram = bspline_gram(ext, degree)
    n = ext.size - degree - 1
    groups = []
    _dissect(0, n, degree, _dissection_sizes(degree, n), groups)

    coef = np.zeros((n, n))
    levels = np.zeros(n, dtype=int)
    done = np.zeros(n, dtype=bool)
    for level, idx, node_lo, node_hi in groups:
        lo, hi = idx[0], idx[-1] + 1
        # every finished element inside the node's range is a descendant
        below = np.nonzero(done[node_lo:node_hi])[0] + node_lo
        resid = np.zeros((n, len(idx)))
        resid[idx, np.arange(len(idx))] = 1.0
        if below.size:
            basis = coef[:, below]
            for _ in range(2):  # re-orthogonalize once against round-off
                resid = resid - basis @ (basis.T @ gram @ resid)
        coef[:, lo:hi] = lowdin(resid, gram)
        levels[lo:hi] = level
        done[lo:hi] = True
    return SplinetBasis(knots, degree, coef, levels)


def bspline_family_matrix(knots: KnotSet, degree: int, t) -> np.ndarray:
    """The (non-orthogonal) clamped B-splines evaluated at ``t``."""
    return bspline_matrix(clamped_knots(knots.internal, degree), degree, t)


def project(dataset: FunctionalDataset, basis: OrthoBasis) -> np.ndarray:
    """Coefficients ``<x_i, f_j>`` as an ``n x size`` matrix."""
    f = basis.evaluate(dataset.grid.points)
    return dataset.values @ (f * dataset.grid.weights[:, None])


def synthesize(coefs, basis: OrthoBasis, grid: Grid) -> np.ndarray:
    """Curves ``sum_j c_ij f_j`` sampled on ``grid``."""
    return np.atleast_2d(coefs) @ basis.evaluate(grid.points).T


def projection_residuals(dataset: FunctionalDataset, basis: OrthoBasis) -> np.ndarray:
    """Squared grid norms of ``x_i - P x_i`` with ``P`` the orthogonal
    projection (in the Riemann inner product) onto the span of ``basis``."""
    sw = np.sqrt(dataset.grid.weights)
    design = basis.evaluate(dataset.grid.points) * sw[:, None]
    u, s, _ = np.linalg.svd(design, full_matrices=False)
    rank = int(np.count_nonzero(s > s[0] * max(design.shape) * np.finfo(float).eps)) if s.size else 0
    u = u[:, :rank]
    y = dataset.values * sw
    r = y - (y @ u) @ u.T
    return np.sum(r * r, axis=1)


def amse(dataset: FunctionalDataset, basis: OrthoBasis) -> float:
    """Average over curves of the squared distance to the basis span."""
    return float(np.mean(projection_residuals(dataset, basis)))
