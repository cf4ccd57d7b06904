"""CSV readers and writers for datasets, knots and traces."""
from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .errors import DimensionError
from .fcore import FunctionalDataset


def read_dataset(path) -> FunctionalDataset:
    """Read a wide CSV: first column ``t``, one further column per curve."""
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and not r[0].startswith("#")]
    if len(rows) < 2:
        raise DimensionError(f"{path}: no data rows")
    header, body = rows[0], np.array(rows[1:], dtype=float)
    if body.shape[1] < 2:
        raise DimensionError(f"{path}: need a t column and at least one curve")
    labels = tuple(header[1:])
    return FunctionalDataset.from_samples(body[:, 0], body[:, 1:].T, labels)


def write_dataset(path, dataset: FunctionalDataset):
    t = dataset.to_domain(dataset.grid.points)
    labels = dataset.labels or tuple(f"curve_{i + 1}" for i in range(dataset.n))
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", *labels])
        for j in range(dataset.m):
            w.writerow([repr(float(t[j])), *(repr(float(v)) for v in dataset.values[:, j])])


def read_knots(path) -> np.ndarray:
    lines = Path(path).read_text().split()
    return np.array([float(x) for x in lines])


def write_knots(path, knots):
    Path(path).write_text("".join(f"{float(k)!r}\n" for k in knots))


def write_trace(path, result):
    """One row per iteration; iteration 0 is the empty knot set."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["iter", "knot", "train_amse", "valid_amse"])
        lo, hi = result.domain
        for s, (tr, va) in enumerate(zip(result.train_amse, result.valid_amse)):
            knot = "" if s == 0 else repr(lo + result.selection_order[s - 1] * (hi - lo))
            w.writerow([s, knot, repr(tr), repr(va)])


def write_matrix(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        if header:
            w.writerow(header)
        for r in rows:
            w.writerow([repr(float(x)) for x in r])
