"""Monte Carlo experiment harness.

Three experiments are available:

``eigen_mse``
    Eigenvalue estimation error of FPCA in the sparse KL model, true basis
    against an equispaced splinet, across sample sizes.
``basis_compare``
    AMSE of Fourier, DDK piecewise-constant and DDK splinet bases of equal
    size on random-functional data, with knots refit per sample or fixed
    from a reference sample.
``ddk_vs_equispaced``
    DDK-selected knots against the same number of equispaced knots, both
    carrying a cubic splinet.

Every replicate draws from its own stream, seeded by
``derive_seed(derive_seed(root_seed, cell), replicate)``, so results do not
depend on the number of workers or the order in which replicates finish.
"""
from __future__ import annotations

import csv
import dataclasses
import hashlib
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Any, Dict, List, Optional

import numpy as np

from . import __version__
from .bases import KnotSet, amse, build_fourier, build_piecewise_constant, build_splinet
from .ddk import DdkConfig, SplitSpec, greedy_knots, select_knots, split_dataset
from .errors import ConfigError, InsufficientKnotsError
from .fcore import FunctionalDataset, Grid
from .fpca import fpca
from .rng import derive_seed
from .simulate import (
    EXAMPLE_KNOTS,
    EXAMPLE_LAMBDA,
    KlModel,
    RandomFunctionalConfig,
    example_kl_model,
    random_functional_dataset,
    sample_kl,
)

EXPERIMENTS = ("eigen_mse", "basis_compare", "ddk_vs_equispaced")
COLUMNS = ("experiment", "basis", "mode", "size", "replicate", "metric", "value")


@dataclass
class ExperimentConfig:
    experiment: str
    sample_sizes: List[int] = field(default_factory=lambda: [25, 50, 100, 200, 400, 700])
    mc_replicates: int = 200
    root_seed: int = 0
    grid_size: int = 2000
    workers: int = 1
    output: Optional[str] = None
    # eigen_mse
    sigma0_sq: float = 0.1
    model_knots: List[float] = field(default_factory=lambda: list(EXAMPLE_KNOTS))
    splinet_knots: int = 200
    components: int = 4
    # basis_compare
    basis_sizes: List[int] = field(default_factory=lambda: list(range(4, 41, 4)))
    generator: Dict[str, Any] = field(default_factory=dict)
    # ddk_vs_equispaced
    theta: float = 0.38
    train_fraction: float = 0.6
    domain_length: float = 1999.0
    max_knots: int = 200
    degree: int = 3
    input: Optional[str] = None

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"experiment must be one of {EXPERIMENTS}, got {self.experiment!r}")
        if self.mc_replicates < 1:
            raise ConfigError("mc_replicates must be at least 1")
        if not self.sample_sizes or any(int(n) < 1 for n in self.sample_sizes):
            raise ConfigError("sample_sizes must be a nonempty list of positive integers")
        if self.experiment == "eigen_mse" and min(self.sample_sizes) < 2:
            raise ConfigError("eigen_mse needs sample sizes of at least 2")
        if not self.basis_sizes or min(self.basis_sizes) < 1:
            raise ConfigError("basis_sizes must be positive")
        if self.grid_size < 2 or self.workers < 1:
            raise ConfigError("grid_size >= 2 and workers >= 1 required")
        if self.sigma0_sq < 0 or self.theta <= 0 or self.domain_length <= 0:
            raise ConfigError("sigma0_sq >= 0, theta > 0 and domain_length > 0 required")
        if not 0 < self.train_fraction < 1:
            raise ConfigError("train_fraction must lie in (0, 1)")
        try:
            RandomFunctionalConfig(**_tuples(self.generator))
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad generator settings: {exc}") from exc

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ExperimentConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        if "experiment" not in data:
            raise ConfigError("config must name an experiment")
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        try:
            with open(path) as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        return cls.from_dict(data)

    def to_dict(self) -> Dict[str, Any]:
        return dataclasses.asdict(self)

    def canonical_json(self) -> str:
        d = self.to_dict()
        for key in ("workers", "output"):  # execution details, not results
            d.pop(key)
        return json.dumps(d, sort_keys=True, separators=(",", ":"))

    @property
    def sha256(self) -> str:
        return hashlib.sha256(self.canonical_json().encode()).hexdigest()


def _tuples(d: Dict[str, Any]) -> Dict[str, Any]:
    return {k: tuple(v) if isinstance(v, list) else v for k, v in d.items()}


@dataclass
class ResultTable:
    """Tidy rows ``(experiment, basis, mode, size, replicate, metric, value)``.

    Aggregates use ``replicate = "all"``.  ``to_csv`` prefixes the rows with
    ``#`` metadata lines; only the ``# created`` line changes between runs
    of the same configuration.
    """

    rows: List[tuple] = field(default_factory=list)
    metadata: Dict[str, str] = field(default_factory=dict)

    def add(self, experiment, basis, mode, size, replicate, metric, value):
        self.rows.append((experiment, basis, mode, int(size), replicate, metric, float(value)))

    def sort(self):
        def key(r):
            rep = r[4]
            return (r[0], r[1], r[2], r[3], 1 if rep == "all" else 0, rep if rep != "all" else 0, r[5])

        self.rows.sort(key=key)

    def select(self, **match) -> List[tuple]:
        idx = {c: i for i, c in enumerate(COLUMNS)}
        return [r for r in self.rows if all(r[idx[k]] == v for k, v in match.items())]

    def values(self, **match) -> np.ndarray:
        return np.array([r[6] for r in self.select(**match)])

    def to_csv_string(self) -> str:
        buf = io.StringIO()
        for k in ("version", "experiment", "config_sha256", "root_seed", "created"):
            if k in self.metadata:
                buf.write(f"# {k}: {self.metadata[k]}\n")
        if "config" in self.metadata:
            buf.write(f"# config: {self.metadata['config']}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(COLUMNS)
        for r in self.rows:
            w.writerow([*r[:6], repr(r[6])])
        return buf.getvalue()

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            fh.write(self.to_csv_string())


def _metadata(config: ExperimentConfig) -> Dict[str, str]:
    return {
        "version": __version__,
        "experiment": config.experiment,
        "config_sha256": config.sha256,
        "root_seed": str(config.root_seed),
        "created": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "config": config.canonical_json(),
    }


def replicate_seed(root: int, cell: int, replicate: int) -> int:
    return derive_seed(derive_seed(root, cell), replicate)


def _map(fn, tasks, workers: int):
    if workers <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, tasks, chunksize=max(1, len(tasks) // (4 * workers))))


# ---------------------------------------------------------------- eigen_mse


def _eigen_task(task):
    config, n, rep = task
    grid = Grid.uniform(config.grid_size)
    model = example_kl_model(math.sqrt(config.sigma0_sq), config.model_knots)
    data = sample_kl(model, n, grid, replicate_seed(config.root_seed, n, rep))
    out = {}
    for name, basis in _eigen_bases(config, model):
        out[name] = fpca(data, basis).eigenvalues[: config.components]
    return n, rep, out


_BASIS_CACHE: Dict[tuple, Any] = {}


def _eigen_bases(config: ExperimentConfig, model: KlModel):
    key = (config.splinet_knots, config.degree)
    if key not in _BASIS_CACHE:
        _BASIS_CACHE[key] = build_splinet(KnotSet.equispaced(config.splinet_knots), config.degree)
    return [("true", model.basis), (f"splinet{config.splinet_knots}", _BASIS_CACHE[key])]


def run_eigen_mse(config: ExperimentConfig) -> ResultTable:
    """Leading FPCA eigenvalues per replicate, with per-cell mean and MSE
    against the model eigenvalues.  Both bases see the same data."""
    lam = EXAMPLE_LAMBDA[: config.components]
    tasks = [(config, int(n), r) for n in config.sample_sizes for r in range(config.mc_replicates)]
    table = ResultTable(metadata=_metadata(config))
    collected: Dict[tuple, list] = {}
    for n, rep, out in _map(_eigen_task, tasks, config.workers):
        for name, vals in out.items():
            collected.setdefault((name, n), []).append((rep, vals))
    for (name, n), items in collected.items():
        items.sort(key=lambda x: x[0])
        est = np.array([v for _, v in items])
        for rep, vals in items:
            for k, v in enumerate(vals):
                table.add("eigen_mse", name, "-", n, rep, f"lambda_{k + 1}", v)
        for k in range(est.shape[1]):
            table.add("eigen_mse", name, "-", n, "all", f"mean_lambda_{k + 1}", est[:, k].mean())
            table.add("eigen_mse", name, "-", n, "all", f"mse_lambda_{k + 1}", np.mean((est[:, k] - lam[k]) ** 2))
    table.sort()
    return table


# ---------------------------------------------------------------- basis_compare


def _ddk_bases(knot_order, size: int, degree: int):
    """Piecewise-constant and splinet bases with ``size`` elements built on
    the first knots of a greedy selection order."""
    pc = build_piecewise_constant(KnotSet.from_unsorted(knot_order[: size - 1])) if size >= 1 else None
    n_sp = size - degree - 1
    try:
        sp = build_splinet(KnotSet.from_unsorted(knot_order[:n_sp]), degree) if n_sp >= 0 else None
    except InsufficientKnotsError:
        sp = None
    return pc, sp


def _compare_task(task):
    config, n, rep, reference_order = task
    grid = Grid.uniform(config.grid_size)
    gen = RandomFunctionalConfig(**_tuples(config.generator))
    data = random_functional_dataset(n, grid, replicate_seed(config.root_seed, n, rep), gen)
    top = max(config.basis_sizes)
    own_order = greedy_knots(data, top)
    rows = []
    for size in config.basis_sizes:
        f = amse(data, build_fourier(size))
        for mode, order in (("refit", own_order), ("fixed", reference_order)):
            pc, sp = _ddk_bases(order, size, config.degree)
            rows.append(("fourier", mode, size, rep, f))
            rows.append(("ddk_pc", mode, size, rep, amse(data, pc) if pc is not None and len(pc.knots) == size - 1 else math.nan))
            ok = sp is not None and len(sp.knots) == size - config.degree - 1
            rows.append(("ddk_splinet", mode, size, rep, amse(data, sp) if ok else math.nan))
    return rows


def run_basis_compare(config: ExperimentConfig) -> ResultTable:
    """AMSE per (basis, mode, size, replicate).

    ``refit`` selects knots on each Monte Carlo sample; ``fixed`` selects
    them once on a reference sample, drawn with ``replicate_seed(root, n,
    2**32)``, and reuses them.  Sizes too small for a splinet give NaN.
    """
    grid = Grid.uniform(config.grid_size)
    gen = RandomFunctionalConfig(**_tuples(config.generator))
    table = ResultTable(metadata=_metadata(config))
    top = max(config.basis_sizes)
    tasks = []
    for n in config.sample_sizes:
        ref = random_functional_dataset(int(n), grid, replicate_seed(config.root_seed, int(n), 2**32), gen)
        ref_order = greedy_knots(ref, top)
        tasks += [(config, int(n), r, ref_order) for r in range(config.mc_replicates)]
    for rows, (_, n, _, _) in zip(_map(_compare_task, tasks, config.workers), tasks):
        for basis, mode, size, rep, value in rows:
            table.add("basis_compare", basis, mode, size, rep, f"amse_n{n}", value)
    table.sort()
    return table


# ---------------------------------------------------------------- ddk_vs_equispaced


def compare_knots(dataset: FunctionalDataset, config: ExperimentConfig, seed: int) -> Dict[str, float]:
    """Split, select knots by DDK, then fit cubic splinets on the DDK knots
    and on as many equispaced knots; AMSE is measured on the whole dataset
    in units of its original domain."""
    train, valid = split_dataset(dataset, SplitSpec(config.train_fraction, seed))
    res = select_knots(train, valid, DdkConfig(config.theta, "absolute_step", config.max_knots))
    count = max(res.stopped_at, config.degree + 1)
    order = res.selection_order if count <= len(res.selection_order) else greedy_knots(train, count)
    knots = KnotSet.from_unsorted(order[:count])
    count = len(knots)
    scale = dataset.domain[1] - dataset.domain[0]
    a_ddk = scale * amse(dataset, build_splinet(knots, config.degree))
    a_eq = scale * amse(dataset, build_splinet(KnotSet.equispaced(count), config.degree))
    ratio = a_ddk / a_eq if a_eq > 0 else (1.0 if a_ddk == 0 else math.inf)
    return {
        "stopped_at": float(res.stopped_at),
        "knots": float(count),
        "amse_ddk": a_ddk,
        "amse_equispaced": a_eq,
        "ratio": ratio,
    }


def sparse_kl_dataset(config: ExperimentConfig, n: int, seed: int) -> FunctionalDataset:
    """Sparse KL curves on an index axis ``0 .. domain_length``."""
    grid = Grid.uniform(config.grid_size)
    model = example_kl_model(math.sqrt(config.sigma0_sq), config.model_knots)
    d = sample_kl(model, n, grid, seed)
    t = np.linspace(0.0, config.domain_length, config.grid_size)
    return FunctionalDataset.from_samples(t, d.values)


def _ddk_task(task):
    config, n, rep = task
    seed = replicate_seed(config.root_seed, n, rep)
    if config.input:
        from .io import read_dataset

        data = read_dataset(config.input)
    else:
        data = sparse_kl_dataset(config, n, seed)
    return n, rep, compare_knots(data, config, seed)


def run_ddk_vs_equispaced(config: ExperimentConfig) -> ResultTable:
    """Per-replicate AMSEs and ratio; aggregates are the fraction of
    replicates where DDK is no worse and the median relative improvement
    ``1 - median(ratio)``.  With an ``input`` CSV every replicate analyses
    the same curves and differs only in the train/validation split."""
    tasks = [(config, int(n), r) for n in config.sample_sizes for r in range(config.mc_replicates)]
    table = ResultTable(metadata=_metadata(config))
    per_n: Dict[int, list] = {}
    for n, rep, out in _map(_ddk_task, tasks, config.workers):
        for k, v in out.items():
            table.add("ddk_vs_equispaced", "splinet", "-", n, rep, k, v)
        per_n.setdefault(n, []).append(out["ratio"])
    for n, ratios in per_n.items():
        ratios = np.array(ratios)
        table.add("ddk_vs_equispaced", "splinet", "-", n, "all", "fraction_ddk_better", np.mean(ratios <= 1.0))
        table.add("ddk_vs_equispaced", "splinet", "-", n, "all", "median_improvement", 1.0 - np.median(ratios))
    table.sort()
    return table


RUNNERS = {
    "eigen_mse": run_eigen_mse,
    "basis_compare": run_basis_compare,
    "ddk_vs_equispaced": run_ddk_vs_equispaced,
}


def run(config: ExperimentConfig) -> ResultTable:
    return RUNNERS[config.experiment](config)


def plan(config: ExperimentConfig) -> str:
    """Human-readable summary of what ``run`` would do."""
    cells = len(config.sample_sizes) * config.mc_replicates
    lines = [
        f"experiment: {config.experiment}",
        f"config sha256: {config.sha256}",
        f"sample sizes: {config.sample_sizes}",
        f"replicates per size: {config.mc_replicates} ({cells} tasks, {config.workers} worker(s))",
        f"grid: {config.grid_size} points",
    ]
    if config.experiment == "eigen_mse":
        lines.append(f"bases: true 9-element splinet, equispaced splinet with {config.splinet_knots} knots")
    elif config.experiment == "basis_compare":
        lines.append(f"basis sizes: {config.basis_sizes}; modes: refit, fixed")
    else:
        lines.append(f"theta: {config.theta}; split: {config.train_fraction}; input: {config.input or 'sparse KL model'}")
    return "\n".join(lines)
