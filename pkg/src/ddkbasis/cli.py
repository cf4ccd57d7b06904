"""Command line entry point: ``ddkbasis <subcommand> ...``.

Exit codes: 0 success, 2 bad input or configuration, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from typing import Optional, Sequence

import numpy as np

from . import bench, io
from .bases import KnotSet, build_fourier, build_piecewise_constant, build_splinet
from .ddk import DdkConfig, SplitSpec, select_knots, split_dataset
from .errors import (
    ConfigError,
    ContractViolation,
    DdkError,
    DimensionError,
    DomainError,
    InsufficientKnotsError,
    ResolutionError,
    UnsupportedGridError,
)
from .fcore import FunctionalDataset, Grid, SampledFunction
from .fpca import fpca
from .simulate import (
    EXAMPLE_A,
    EXAMPLE_KNOTS,
    EXAMPLE_LAMBDA,
    KlModel,
    RandomFunctionalConfig,
    SlepianGaussModel,
    VehicleParams,
    brownian_bridges,
    exponential_kernel,
    filtered_bridges,
    random_functional_dataset,
    sample_kl,
    sample_slepian_gauss,
    vehicle_response,
)

log = logging.getLogger("ddkbasis")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3
_INPUT_ERRORS = (
    ConfigError,
    ContractViolation,
    DimensionError,
    DomainError,
    InsufficientKnotsError,
    ResolutionError,
    UnsupportedGridError,
    OSError,
    json.JSONDecodeError,
)


def _load_json(path) -> dict:
    if path is None:
        return {}
    try:
        with open(path) as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path} must hold a JSON object")
    return data


# ---------------------------------------------------------------- select-knots


def cmd_select_knots(args) -> int:
    data = io.read_dataset(args.input)
    train, valid = split_dataset(data, SplitSpec(args.split, args.seed))
    criterion = {"absolute": "absolute_step", "relative": "relative_step"}[args.criterion]
    res = select_knots(train, valid, DdkConfig(args.theta, criterion, args.max_knots))
    io.write_knots(args.out, np.sort(res.knots_in_domain()))
    if args.trace:
        io.write_trace(args.trace, res)
    log.info("%d knots (%s), elbow at %d", res.stopped_at, res.stop_reason, res.elbow_index)
    return EXIT_OK


# ---------------------------------------------------------------- bases


def _unit_knots(path, domain) -> KnotSet:
    lo, hi = domain
    return KnotSet.from_unsorted((io.read_knots(path) - lo) / (hi - lo))


def _build_basis(kind: str, knots_path, degree: int, size: Optional[int], domain=(0.0, 1.0)):
    if kind == "fourier":
        if not size:
            raise ConfigError("--size is required for a Fourier basis")
        return build_fourier(size)
    if knots_path is None:
        raise ConfigError(f"--knots is required for a {kind} basis")
    knots = _unit_knots(knots_path, domain)
    if kind == "piecewise-constant":
        return build_piecewise_constant(knots)
    return build_splinet(knots, degree)


def cmd_basis(args) -> int:
    basis = _build_basis(args.kind, args.knots, args.degree, args.size, tuple(args.domain))
    grid = Grid.uniform(args.resolution, endpoint=True)
    lo, hi = args.domain
    f = basis.evaluate(grid.points)
    header = ["t"] + [f"f_{i + 1}" for i in range(basis.size)]
    rows = np.column_stack([lo + grid.points * (hi - lo), f / math.sqrt(hi - lo)])
    io.write_matrix(args.out, header, rows)
    return EXIT_OK


# ---------------------------------------------------------------- fpca


def cmd_fpca(args) -> int:
    data = io.read_dataset(args.input)
    basis = _build_basis(args.basis, args.knots, args.degree, args.size, data.domain)
    res = fpca(data, basis, center=args.center)
    k = min(args.components, basis.size)
    scale = math.sqrt(data.domain[1] - data.domain[0])
    funcs = res.eigenfunctions(data.grid, k) / scale
    io.write_matrix(args.out, None, [res.eigenvalues[:k] * scale**2, *funcs.T])
    return EXIT_OK


# ---------------------------------------------------------------- simulate


def _simulate(model: str, cfg: dict, n: int, grid: Grid, seed: int) -> FunctionalDataset:
    if model == "kl":
        knots = cfg.get("knots", list(EXAMPLE_KNOTS))
        basis = build_splinet(KnotSet.from_unsorted(knots), cfg.get("degree", 3))
        kl = KlModel(np.asarray(cfg.get("A", EXAMPLE_A)), np.asarray(cfg.get("lambda", EXAMPLE_LAMBDA)),
                     basis, cfg.get("sigma0", 0.0))
        return sample_kl(kl, n, grid, seed)
    if model == "bridge":
        return brownian_bridges(grid, n, seed)
    if model == "vehicle":
        params = VehicleParams(**cfg.get("params", {}))
        road_cfg = cfg.get("road", {})
        kernel = exponential_kernel(grid, road_cfg.get("tau", 0.01))
        roads = filtered_bridges(kernel, grid, n, seed).values * road_cfg.get("scale", 1.0)
        which = cfg.get("output", "Y")
        if which not in ("X", "U", "Y"):
            raise ConfigError("vehicle output must be X, U or Y")
        out = [getattr(vehicle_response(params, SampledFunction(grid, r), grid), which).values for r in roads]
        return FunctionalDataset(grid, np.array(out))
    if model == "slepian":
        sm = SlepianGaussModel(cfg.get("u", 1.0), cfg.get("covariance", "gauss"), tuple(cfg.get("window", (-5.0, 5.0))))
        data = sample_slepian_gauss(sm, n, grid, seed)
        return FunctionalDataset(grid, data.values, domain=sm.window)
    if model == "random-functional":
        gen = RandomFunctionalConfig(**{k: tuple(v) if isinstance(v, list) else v for k, v in cfg.items()})
        return random_functional_dataset(n, grid, seed, gen)
    raise ConfigError(f"unknown model {model!r}")


def cmd_simulate(args) -> int:
    cfg = _load_json(args.config)
    try:
        data = _simulate(args.model, cfg, args.n, Grid.uniform(args.grid), args.seed)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
    io.write_dataset(args.out, data)
    return EXIT_OK


# ---------------------------------------------------------------- bench


def cmd_bench(args) -> int:
    data = _load_json(args.config)
    data.setdefault("experiment", args.experiment.replace("-", "_"))
    if args.experiment.replace("-", "_") != data["experiment"]:
        raise ConfigError(f"config is for {data['experiment']!r}, not {args.experiment!r}")
    for key in ("workers", "root_seed", "mc_replicates", "output"):
        value = getattr(args, key)
        if value is not None:
            data[key] = value
    config = bench.ExperimentConfig.from_dict(data)
    if args.dry_run:
        print(bench.plan(config))
        return EXIT_OK
    table = bench.run(config)
    if config.output:
        table.to_csv(config.output)
    else:
        sys.stdout.write(table.to_csv_string())
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ddkbasis", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("select-knots", help="data-driven knot selection")
    s.add_argument("--input", required=True)
    s.add_argument("--theta", type=float, required=True)
    s.add_argument("--criterion", choices=("absolute", "relative"), default="absolute")
    s.add_argument("--split", type=float, default=0.6)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--max-knots", type=int, default=200)
    s.add_argument("--out", required=True)
    s.add_argument("--trace")
    s.set_defaults(func=cmd_select_knots)

    def basis_args(q, kind_flag):
        q.add_argument(kind_flag, choices=("splinet", "piecewise-constant", "fourier"), default="splinet")
        q.add_argument("--knots")
        q.add_argument("--degree", type=int, default=3)
        q.add_argument("--size", type=int, help="number of Fourier elements")

    f = sub.add_parser("fpca", help="functional PCA in a basis")
    f.add_argument("--input", required=True)
    basis_args(f, "--basis")
    f.add_argument("--components", type=int, default=4)
    f.add_argument("--center", action="store_true")
    f.add_argument("--out", required=True)
    f.set_defaults(func=cmd_fpca)

    b = sub.add_parser("basis", help="export a basis sampled on a grid")
    basis_args(b, "--kind")
    b.add_argument("--resolution", type=int, default=1000)
    b.add_argument("--domain", type=float, nargs=2, default=(0.0, 1.0))
    b.add_argument("--out", required=True)
    b.set_defaults(func=cmd_basis)

    m = sub.add_parser("simulate", help="draw synthetic functional data")
    m.add_argument("--model", required=True, choices=("kl", "bridge", "vehicle", "slepian", "random-functional"))
    m.add_argument("--config")
    m.add_argument("--n", type=int, default=100)
    m.add_argument("--grid", type=int, default=2000)
    m.add_argument("--seed", type=int, default=0)
    m.add_argument("--out", required=True)
    m.set_defaults(func=cmd_simulate)

    e = sub.add_parser("bench", help="run a Monte Carlo experiment")
    e.add_argument("--experiment", required=True, choices=("eigen-mse", "basis-compare", "ddk-vs-equispaced"))
    e.add_argument("--config")
    e.add_argument("--out", dest="output")
    e.add_argument("--workers", type=int)
    e.add_argument("--seed", dest="root_seed", type=int)
    e.add_argument("--replicates", dest="mc_replicates", type=int)
    e.add_argument("--dry-run", action="store_true")
    e.set_defaults(func=cmd_bench)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except _INPUT_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DdkError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
