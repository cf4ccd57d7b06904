"""Run one of the Monte Carlo experiments and print a short summary.

    python scripts/run_experiment.py scripts/configs/eigen_mse.json --workers 4
"""
import argparse
import logging
import os
import sys
from collections import defaultdict

import numpy as np

from ddkbasis.bench import ExperimentConfig, run

log = logging.getLogger("run_experiment")


def summarize(table) -> str:
    agg = [r for r in table.rows if r[4] == "all"]
    if agg:
        return "\n".join(f"{b:>12} n={n:<4} {metric:<22} {v:.6g}" for _, b, _, n, _, metric, v in agg)
    # basis_compare has no aggregates: report medians per cell
    cells = defaultdict(list)
    for _, b, mode, size, _, metric, v in table.rows:
        cells[(metric, mode, b, size)].append(v)
    return "\n".join(
        f"{metric:<10} {mode:<6} {b:<12} size={size:<3} median={np.median(v):.5g}"
        for (metric, mode, b, size), v in sorted(cells.items())
    )


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("config")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--replicates", type=int)
    p.add_argument("--out", help="CSV path (default results/<experiment>.csv)")
    a = p.parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(message)s")

    config = ExperimentConfig.from_json(a.config)
    config.workers = a.workers
    if a.replicates:
        config.mc_replicates = a.replicates
    out = a.out or f"results/{config.experiment}.csv"
    os.makedirs(os.path.dirname(out) or ".", exist_ok=True)
    log.info("running %s (%d replicates per size)", config.experiment, config.mc_replicates)
    table = run(config)
    table.to_csv(out)
    print(summarize(table))
    log.info("wrote %s", out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
