import math

import numpy as np
import pytest

from ddkbasis.bench import ExperimentConfig, ResultTable, plan, replicate_seed, run
from ddkbasis.errors import ConfigError
from ddkbasis.rng import derive_seed


def _strip_created(text):
    return "\n".join(l for l in text.splitlines() if not l.startswith("# created"))


def small(experiment, **kw):
    base = dict(experiment=experiment, sample_sizes=[10, 20], mc_replicates=3, grid_size=300, root_seed=7)
    if experiment == "eigen_mse":
        base["splinet_knots"] = 16
    if experiment == "basis_compare":
        base["basis_sizes"] = [4, 8, 12]
    if experiment == "ddk_vs_equispaced":
        base.update(sigma0_sq=0.0, sample_sizes=[5], domain_length=299.0, max_knots=30)
    base.update(kw)
    return ExperimentConfig(**base)


@pytest.mark.parametrize("experiment", ["eigen_mse", "basis_compare", "ddk_vs_equispaced"])
def test_deterministic_output(experiment):
    cfg = small(experiment)
    a, b = run(cfg).to_csv_string(), run(cfg).to_csv_string()
    assert _strip_created(a) == _strip_created(b)
    assert sum(l.startswith("# created") for l in a.splitlines()) == 1


def test_workers_do_not_change_results():
    a = run(small("eigen_mse", workers=1))
    b = run(small("eigen_mse", workers=2))
    assert a.rows == b.rows
    assert a.metadata["config_sha256"] == b.metadata["config_sha256"]


def test_replicate_seed_derivation():
    assert replicate_seed(3, 25, 4) == derive_seed(derive_seed(3, 25), 4)


def test_eigen_rows_and_aggregates():
    cfg = small("eigen_mse", components=2)
    t = run(cfg)
    per_rep = [r for r in t.rows if r[4] != "all"]
    assert len(per_rep) == 2 * len(cfg.sample_sizes) * cfg.mc_replicates * cfg.components
    lam = t.values(basis="true", size=10, metric="lambda_1")
    mse = t.values(basis="true", size=10, replicate="all", metric="mse_lambda_1")[0]
    assert mse == pytest.approx(np.mean((lam - 1.0) ** 2))


def test_basis_compare_shape_and_behaviour():
    cfg = small("basis_compare", sample_sizes=[15], mc_replicates=2)
    t = run(cfg)
    assert len(t.rows) == 3 * 2 * len(cfg.basis_sizes) * cfg.mc_replicates
    # the smallest size cannot host a cubic splinet with the required knots
    assert all(math.isnan(v) for v in t.values(basis="ddk_splinet", size=4))
    for rep in range(cfg.mc_replicates):
        f = [t.values(basis="fourier", mode="refit", size=s, replicate=rep)[0] for s in cfg.basis_sizes]
        assert np.all(np.diff(f) <= 1e-12)
    refit = t.values(basis="ddk_pc", mode="refit")
    fixed = t.values(basis="ddk_pc", mode="fixed")
    assert np.median(refit) <= np.median(fixed) + 1e-12


def test_single_replicate():
    cfg = small("ddk_vs_equispaced", mc_replicates=1)
    t = run(cfg)
    assert len(t.select(replicate=0, metric="ratio")) == 1
    assert _strip_created(t.to_csv_string()) == _strip_created(run(cfg).to_csv_string())
    frac = t.values(replicate="all", metric="fraction_ddk_better")[0]
    assert frac == float(t.values(replicate=0, metric="ratio")[0] <= 1.0)


def test_step_data_stop_early(tmp_path):
    # piecewise constant curves with three jumps: validation AMSE drops to
    # zero once the jumps are found, so selection stops right there
    from ddkbasis.fcore import FunctionalDataset, Grid
    from ddkbasis.io import write_dataset

    g = Grid.uniform(300)
    rng = np.random.default_rng(1)
    levels = rng.normal(size=(12, 4))
    cell = np.searchsorted([0.25, 0.5, 0.75], g.points, side="right")
    data = FunctionalDataset(g, levels[:, cell])
    path = tmp_path / "steps.csv"
    write_dataset(path, data)
    t = run(small("ddk_vs_equispaced", input=str(path), mc_replicates=2, theta=1e-6))
    assert np.all(t.values(metric="stopped_at") <= 4)
    assert np.all(t.values(metric="knots") == 4)
    assert np.all(np.isfinite(t.values(metric="ratio")))


@pytest.mark.parametrize(
    "bad",
    [
        {"experiment": "nope"},
        {"experiment": "eigen_mse", "mc_replicates": 0},
        {"experiment": "eigen_mse", "sample_sizes": []},
        {"experiment": "eigen_mse", "sample_sizes": [1]},
        {"experiment": "eigen_mse", "colour": "red"},
        {"experiment": "ddk_vs_equispaced", "train_fraction": 1.0},
        {"experiment": "basis_compare", "generator": {"width": [0, 1]}},
        {"sample_sizes": [5]},
    ],
)
def test_config_errors(bad):
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict(bad)


def test_config_json_and_hash(tmp_path):
    p = tmp_path / "c.json"
    p.write_text('{"experiment": "eigen_mse", "workers": 3}')
    c = ExperimentConfig.from_json(p)
    assert c.workers == 3
    assert c.sha256 == ExperimentConfig("eigen_mse").sha256
    assert c.sha256 != ExperimentConfig("eigen_mse", root_seed=1).sha256
    (tmp_path / "bad.json").write_text("[1, 2]")
    with pytest.raises(ConfigError):
        ExperimentConfig.from_json(tmp_path / "bad.json")
    assert "eigen_mse" in plan(c)


def test_result_table_csv(tmp_path):
    t = ResultTable(metadata={"version": "x", "created": "now"})
    t.add("e", "b", "-", 3, 0, "m", 0.1)
    t.add("e", "b", "-", 3, "all", "m", 0.2)
    t.to_csv(tmp_path / "r.csv")
    lines = (tmp_path / "r.csv").read_text().splitlines()
    assert lines[:3] == ["# version: x", "# created: now", "experiment,basis,mode,size,replicate,metric,value"]
    assert lines[3] == "e,b,-,3,0,m,0.1"
