"""Data-driven knot selection.

Knots are inserted greedily, one per iteration, at the grid point that
minimizes the training AMSE of the piecewise-constant fit (a regression-tree
style split search).  Each interval keeps the Riemann-weighted sums
``sum_j w_j x_ij`` per curve and ``sum_ij w_j x_ij^2``, so the squared error
of the best constant fit on any grid segment is available in O(n) from
prefix sums, and one split search is a single pass over the grid.  Inserting
a knot replaces one basis element (the constant on the split interval) with
two; all other intervals keep their errors.

Stopping is decided on a held-out validation set.
"""
from __future__ import annotations

import bisect
from dataclasses import dataclass
from typing import List, Literal, Tuple

import numpy as np

from .bases import KnotSet
from .errors import DimensionError, SaturatedError, TooFewCurvesError, TooShortError
from .fcore import FunctionalDataset
from .rng import Stream

TIE_RTOL = 1e-12


@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float = 0.6
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise ValueError("train_fraction must lie in (0, 1)")


@dataclass(frozen=True)
class DdkConfig:
    theta: float
    criterion: Literal["absolute_step", "relative_step"] = "absolute_step"
    max_knots: int = 200
    candidate_policy: Literal["grid_points"] = "grid_points"

    def __post_init__(self):
        if not self.theta > 0:
            raise ValueError("theta must be positive")
        if self.max_knots < 1:
            raise ValueError("max_knots must be at least 1")
        if self.criterion not in ("absolute_step", "relative_step"):
            raise ValueError(f"unknown criterion {self.criterion!r}")
        if self.candidate_policy != "grid_points":
            raise ValueError("only grid-point candidates are supported")


@dataclass
class DdkResult:
    selection_order: List[float]
    train_amse: List[float]
    valid_amse: List[float]
    stopped_at: int
    stop_reason: Literal["threshold", "max_knots"]
    elbow_index: int
    domain: Tuple[float, float] = (0.0, 1.0)

    @property
    def knots(self) -> KnotSet:
        return KnotSet.from_unsorted(self.selection_order)

    def knots_at(self, s: int) -> KnotSet:
        """Knot set after iteration ``s``."""
        return KnotSet.from_unsorted(self.selection_order[:s])

    def knots_in_domain(self) -> np.ndarray:
        lo, hi = self.domain
        return lo + self.knots.internal * (hi - lo)


def split_dataset(dataset: FunctionalDataset, spec: SplitSpec):
    """Random per-curve train/validation split, reproducible from the seed."""
    n = dataset.n
    if n < 2:
        raise TooFewCurvesError("need at least two curves to split")
    n_train = int(round(spec.train_fraction * n))
    n_train = min(max(n_train, 1), n - 1)
    keys = Stream(spec.seed).uniform(n)
    order = np.argsort(keys, kind="stable")
    train = np.sort(order[:n_train])
    valid = np.sort(order[n_train:])
    return dataset.subset(train), dataset.subset(valid)


class _Segments:
    """Piecewise-constant fit state over grid-index segments [b_i, b_{i+1})."""

    def __init__(self, values: np.ndarray, weights: np.ndarray):
        self.n = values.shape[0]
        wx = values * weights
        # prefix sums with a leading zero column
        self.s1 = np.concatenate([np.zeros((self.n, 1)), np.cumsum(wx, axis=1)], axis=1)
        self.s2 = np.concatenate([[0.0], np.cumsum(np.sum(wx * values, axis=0))])
        self.w = np.concatenate([[0.0], np.cumsum(weights)])
        self.bounds = [0, values.shape[1]]
        self.sse = [self.segment_sse(0, values.shape[1])]

    def segment_sse(self, a: int, b: int) -> float:
        wsum = self.w[b] - self.w[a]
        lin = self.s1[:, b] - self.s1[:, a]
        return max(float(self.s2[b] - self.s2[a] - np.dot(lin, lin) / wsum), 0.0)

    @property
    def amse(self) -> float:
        return sum(self.sse) / self.n

    def split_scan(self, a: int, b: int) -> np.ndarray:
        """SSE of the two halves for every split index j in (a, b)."""
        j = np.arange(a + 1, b)
        wl = self.w[j] - self.w[a]
        wr = self.w[b] - self.w[j]
        left = self.s1[:, j] - self.s1[:, [a]]
        right = self.s1[:, [b]] - self.s1[:, j]
        sq = self.s2[b] - self.s2[a]
        out = sq - np.sum(left * left, axis=0) / wl - np.sum(right * right, axis=0) / wr
        return np.maximum(out, 0.0)

    def insert(self, j: int):
        pos = bisect.bisect_right(self.bounds, j) - 1
        a, b = self.bounds[pos], self.bounds[pos + 1]
        self.bounds.insert(pos + 1, j)
        self.sse[pos : pos + 1] = [self.segment_sse(a, j), self.segment_sse(j, b)]


def _check_same_grid(a: FunctionalDataset, b: FunctionalDataset):
    if not a.grid.same_as(b.grid):
        raise DimensionError("train and validation data must share a grid")


def _grid_index(points: np.ndarray, xi: float) -> int:
    j = int(np.searchsorted(points, xi))
    if j >= points.size or abs(points[j] - xi) > 1e-12:
        raise ValueError(f"knot {xi} is not a grid point")
    return j


def _candidate_amse(state: _Segments, points: np.ndarray):
    """Post-insertion training SSE for every admissible candidate, in
    increasing grid order."""
    total = sum(state.sse)
    cands, values = [], []
    for pos in range(len(state.bounds) - 1):
        a, b = state.bounds[pos], state.bounds[pos + 1]
        if b - a < 2:
            continue
        cand = np.arange(a + 1, b)
        after = total - state.sse[pos] + state.split_scan(a, b)
        ok = (points[cand] > 0.0) & (points[cand] < 1.0)
        cands.append(cand[ok])
        values.append(after[ok])
    if not cands:
        return np.empty(0, dtype=int), np.empty(0)
    return np.concatenate(cands), np.concatenate(values)


def _best_split(state: _Segments, points: np.ndarray):
    """Global argmin over all admissible candidates, smallest xi on ties."""
    cand, after = _candidate_amse(state, points)
    if cand.size == 0:
        raise SaturatedError("no admissible knot candidate left")
    best = after.min()
    tol = TIE_RTOL * max(float(state.s2[-1]), np.finfo(float).tiny)
    k = int(np.nonzero(after <= best + tol)[0][0])
    return int(cand[k]), float(after[k]) / state.n


def best_split(train: FunctionalDataset, knots: KnotSet) -> Tuple[float, float]:
    """Best new knot for ``train`` given existing ``knots`` (all grid points).

    Returns the knot position and the training AMSE after inserting it.
    """
    points = train.grid.points
    state = _Segments(train.values, train.grid.weights)
    for xi in knots.internal:
        state.insert(_grid_index(points, xi))
    j, value = _best_split(state, points)
    return float(points[j]), value


def _stop(prev: float, cur: float, config: DdkConfig) -> bool:
    step = abs(cur - prev)
    if config.criterion == "absolute_step":
        return step < config.theta
    return step < config.theta * abs(cur)


def select_knots(train: FunctionalDataset, valid: FunctionalDataset, config: DdkConfig) -> DdkResult:
    """Greedy knot insertion on ``train`` with a validation stopping rule.

    At each iteration ``s >= 1`` one knot is inserted and the validation AMSE
    is updated; the run stops at the first ``s`` whose validation step
    satisfies the configured criterion, or when ``max_knots`` is reached or
    no candidate is left.

    Both AMSE trajectories (and hence ``theta``) are expressed in the units
    of the data's original domain: squared errors integrate over
    ``[lo, hi]`` rather than the rescaled unit interval.
    """
    _check_same_grid(train, valid)
    points = train.grid.points
    scale = train.domain[1] - train.domain[0]
    tr = _Segments(train.values, train.grid.weights)
    va = _Segments(valid.values, valid.grid.weights)
    order: List[float] = []
    train_amse, valid_amse = [scale * tr.amse], [scale * va.amse]
    reason = "max_knots"
    while len(order) < config.max_knots:
        try:
            j, _ = _best_split(tr, points)
        except SaturatedError:
            break
        tr.insert(j)
        va.insert(j)
        order.append(float(points[j]))
        train_amse.append(scale * tr.amse)
        valid_amse.append(scale * va.amse)
        if _stop(valid_amse[-2], valid_amse[-1], config):
            reason = "threshold"
            break
    stopped = len(order)
    elbow = elbow_index(valid_amse) if len(valid_amse) >= 3 else stopped
    return DdkResult(order, train_amse, valid_amse, stopped, reason, elbow, train.domain)


def greedy_knots(dataset: FunctionalDataset, count: int) -> List[float]:
    """The first ``count`` greedy knots on ``dataset`` in selection order
    (fewer if the grid saturates)."""
    points = dataset.grid.points
    state = _Segments(dataset.values, dataset.grid.weights)
    order = []
    for _ in range(count):
        try:
            j, _ = _best_split(state, points)
        except SaturatedError:
            break
        state.insert(j)
        order.append(float(points[j]))
    return order


def elbow_index(valid_amse) -> int:
    """Index of the point farthest from the chord joining the first and
    last points of the trajectory; the smallest interior index on ties."""
    y = np.asarray(valid_amse, dtype=float)
    if y.size < 3:
        raise TooShortError("elbow needs at least three trajectory points")
    s = np.arange(y.size, dtype=float)
    dx, dy = s[-1] - s[0], y[-1] - y[0]
    dist = np.abs(dx * (y - y[0]) - dy * (s - s[0])) / np.hypot(dx, dy)
    interior = dist[1:-1]
    top = interior.max()
    tol = TIE_RTOL * max(top, np.max(np.abs(y)) * y.size, np.finfo(float).tiny)
    return int(np.nonzero(interior >= top - tol)[0][0]) + 1
