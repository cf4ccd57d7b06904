"""Grids, sampled functions, quadrature and inner products on [0, 1].

Sampled data are integrated with left Riemann sums on the observation grid:
the cell of point ``t_j`` is ``t_{j+1} - t_j`` and the last cell repeats the
one before it.  Piecewise polynomials known in closed form are integrated
exactly with Gauss-Legendre rules instead.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Protocol, Sequence

import numpy as np

from .errors import DimensionError, DomainError, UnsupportedDegreeError

MAX_POLY_DEGREE = 10
_UNIFORM_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class Grid:
    """Strictly increasing sampling points inside [0, 1]."""

    points: np.ndarray
    uniform_step: Optional[float] = field(init=False, default=None)

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float).ravel()
        if pts.size == 0:
            raise DimensionError("grid must contain at least one point")
        if not np.all(np.isfinite(pts)):
            raise DomainError("grid points must be finite")
        if pts[0] < 0.0 or pts[-1] > 1.0:
            raise DomainError("grid points must lie in [0, 1]")
        if pts.size > 1 and np.any(np.diff(pts) <= 0):
            raise DomainError("grid points must be strictly increasing")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        step = None
        if pts.size > 1:
            d = np.diff(pts)
            h = (pts[-1] - pts[0]) / (pts.size - 1)
            if np.max(np.abs(d - h)) < _UNIFORM_TOL:
                step = float(h)
        object.__setattr__(self, "uniform_step", step)

    @classmethod
    def uniform(cls, m: int, endpoint: bool = False) -> "Grid":
        """``m`` equispaced points; by default the left cell ends ``j/m``.

        With ``endpoint=False`` the Riemann weights are all ``1/m`` and sum
        to exactly one, which is the natural grid for the inner product.
        """
        if endpoint:
            return cls(np.linspace(0.0, 1.0, m))
        return cls(np.arange(m) / m)

    @classmethod
    def midpoints(cls, m: int) -> "Grid":
        """Centres ``(j + 1/2) / m`` of ``m`` equal cells.  All Riemann
        weights are ``1/m``, so the sums become the midpoint rule and avoid
        the first-order end-point error of ``uniform``."""
        return cls((np.arange(m) + 0.5) / m)

    @property
    def size(self) -> int:
        return self.points.size

    @property
    def weights(self) -> np.ndarray:
        if self.size == 1:
            return np.ones(1)
        d = np.diff(self.points)
        return np.append(d, d[-1])

    def same_as(self, other: "Grid") -> bool:
        return self is other or (
            self.size == other.size and np.array_equal(self.points, other.points)
        )

    def __eq__(self, other):
        return isinstance(other, Grid) and self.same_as(other)

    def __hash__(self):
        return hash(self.points.tobytes())


@dataclass(frozen=True, eq=False)
class SampledFunction:
    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float).ravel()
        if v.size != self.grid.size:
            raise DimensionError(f"{v.size} samples for a grid of {self.grid.size}")
        object.__setattr__(self, "values", v)


@dataclass(frozen=True, eq=False)
class FunctionalDataset:
    """``n`` curves sampled on a shared grid.

    ``domain`` records the original interval when the data were rescaled
    onto [0, 1] at ingestion; knot positions are mapped back through it.
    """

    grid: Grid
    values: np.ndarray
    labels: Optional[tuple] = None
    domain: tuple = (0.0, 1.0)

    def __post_init__(self):
        v = np.array(self.values, dtype=float, ndmin=2)
        if v.ndim != 2 or v.shape[0] < 1:
            raise DimensionError("values must be an n x m matrix with n >= 1")
        if v.shape[1] != self.grid.size:
            raise DimensionError(
                f"values have {v.shape[1]} columns, grid has {self.grid.size} points"
            )
        if not np.all(np.isfinite(v)):
            raise DomainError("curve values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        if self.labels is not None:
            labels = tuple(self.labels)
            if len(labels) != v.shape[0]:
                raise DimensionError("one label per curve is required")
            object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "domain", (float(self.domain[0]), float(self.domain[1])))

    @classmethod
    def from_samples(cls, t, values, labels=None) -> "FunctionalDataset":
        """Build a dataset from raw sample points, rescaling them onto [0, 1]
        when they leave the unit interval."""
        t = np.asarray(t, dtype=float)
        lo, hi = float(t[0]), float(t[-1])
        if lo < 0.0 or hi > 1.0:
            if hi <= lo:
                raise DomainError("cannot rescale a degenerate interval")
            s = (t - lo) / (hi - lo)
            s[0], s[-1] = 0.0, 1.0
            return cls(Grid(s), values, labels, domain=(lo, hi))
        return cls(Grid(t), values, labels)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def m(self) -> int:
        return self.values.shape[1]

    def subset(self, rows) -> "FunctionalDataset":
        rows = np.asarray(rows, dtype=int)
        labels = None if self.labels is None else tuple(self.labels[i] for i in rows)
        return FunctionalDataset(self.grid, self.values[rows], labels, self.domain)

    def curve(self, i: int) -> SampledFunction:
        return SampledFunction(self.grid, self.values[i])

    def to_domain(self, s):
        """Map unit-interval coordinates back to the original domain."""
        lo, hi = self.domain
        return lo + np.asarray(s, dtype=float) * (hi - lo)


def inner_product(x: SampledFunction, y: SampledFunction) -> float:
    if not x.grid.same_as(y.grid):
        raise DimensionError("functions are sampled on different grids")
    return float(np.sum(x.values * y.values * x.grid.weights))


def l2_norm_sq(x: SampledFunction) -> float:
    return inner_product(x, x)


def gram_on_grid(values: np.ndarray, grid: Grid) -> np.ndarray:
    """Riemann inner products between the rows of ``values``."""
    v = np.asarray(values, dtype=float)
    return (v * grid.weights) @ v.T


@dataclass(frozen=True)
class QuadratureRule:
    """Gauss-Legendre rule on an interval; exact up to ``degree``."""

    nodes: np.ndarray
    weights: np.ndarray
    degree: int
    interval: tuple = (0.0, 1.0)

    @classmethod
    def gauss_legendre(cls, n_nodes: int, a: float = 0.0, b: float = 1.0) -> "QuadratureRule":
        x, w = np.polynomial.legendre.leggauss(int(n_nodes))
        half = 0.5 * (b - a)
        return cls(a + half * (x + 1.0), half * w, 2 * int(n_nodes) - 1, (a, b))

    def integrate(self, f) -> float:
        return float(np.sum(self.weights * f(self.nodes)))


class PiecewisePoly(Protocol):
    """Anything callable on arrays that is a polynomial of ``degree`` between
    consecutive ``breaks``."""

    breaks: np.ndarray
    degree: int

    def __call__(self, t: np.ndarray) -> np.ndarray: ...


class PiecewisePolynomial:
    """Piecewise polynomial in local monomials ``sum_p c[i, p] (t - b_i)^p``."""

    def __init__(self, breaks: Sequence[float], coefs):
        self.breaks = np.asarray(breaks, dtype=float)
        c = np.array(coefs, dtype=float, ndmin=2)
        if c.shape[0] != self.breaks.size - 1:
            raise DimensionError("one coefficient row per piece is required")
        self.coefs = c
        self.degree = c.shape[1] - 1

    @classmethod
    def polynomial(cls, coefs, a: float = 0.0, b: float = 1.0) -> "PiecewisePolynomial":
        """A single global polynomial ``sum_p c[p] t^p`` restricted to [a, b]."""
        c = np.asarray(coefs, dtype=float)
        # re-expand about the left end
        local = np.polynomial.polynomial.Polynomial(c)(np.polynomial.polynomial.Polynomial([a, 1.0]))
        lc = np.zeros(c.size)
        lc[: local.coef.size] = local.coef
        return cls([a, b], lc[None, :])

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        idx = np.clip(np.searchsorted(self.breaks, t, side="right") - 1, 0, self.coefs.shape[0] - 1)
        inside = (t >= self.breaks[0]) & (t <= self.breaks[-1])
        local = t - self.breaks[idx]
        out = np.zeros_like(t)
        for p in range(self.degree, -1, -1):
            out = out * local + self.coefs[idx, p]
        return np.where(inside, out, 0.0)


def exact_poly_inner_product(p: PiecewisePoly, q: PiecewisePoly) -> float:
    """Integral of ``p * q`` over the common refinement of their breaks."""
    if p.degree > MAX_POLY_DEGREE or q.degree > MAX_POLY_DEGREE:
        raise UnsupportedDegreeError(
            f"degrees {p.degree}, {q.degree} exceed the cap of {MAX_POLY_DEGREE}"
        )
    lo = max(p.breaks[0], q.breaks[0])
    hi = min(p.breaks[-1], q.breaks[-1])
    if hi <= lo:
        return 0.0
    br = np.union1d(p.breaks, q.breaks)
    br = br[(br >= lo) & (br <= hi)]
    n_nodes = int(np.ceil((p.degree + q.degree + 1) / 2))
    x, w = np.polynomial.legendre.leggauss(max(n_nodes, 1))
    a, b = br[:-1], br[1:]
    half = 0.5 * (b - a)
    nodes = (a + half)[:, None] + half[:, None] * x[None, :]
    weights = half[:, None] * w[None, :]
    return float(np.sum(weights * p(nodes) * q(nodes)))
