import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ddkbasis.bases import KnotSet, amse, build_fourier, build_splinet, project
from ddkbasis.errors import ContractViolation, RangeError, TooFewCurvesError
from ddkbasis.fcore import FunctionalDataset, Grid
from ddkbasis.rng import Stream
from ddkbasis.fpca import estimate_covariance, fpca, reconstruct, truncation_error
from ddkbasis.simulate import EXAMPLE_A, EXAMPLE_LAMBDA, example_kl_model, sample_kl


def test_covariance_basics():
    c = estimate_covariance([[1.0, 2.0], [1.0, 2.0]], center=True)
    assert np.all(c.matrix == 0)
    assert np.allclose(c.mean_coefs, [1, 2])
    with pytest.raises(TooFewCurvesError):
        estimate_covariance([[1.0, 2.0]])
    x = np.random.default_rng(0).normal(size=(30, 4))
    assert np.allclose(estimate_covariance(x, center=True).matrix, np.cov(x.T))
    assert np.allclose(estimate_covariance(x).matrix, x.T @ x / 29)


def test_covariance_law_of_large_numbers():
    z = Stream(9).normal((10**5, 4))
    coefs = (z * np.sqrt(EXAMPLE_LAMBDA)) @ EXAMPLE_A
    c = estimate_covariance(coefs).matrix
    target = EXAMPLE_A.T @ np.diag(EXAMPLE_LAMBDA) @ EXAMPLE_A
    assert np.max(np.abs(c - target)) < 0.02


def test_model_recovery():
    model = example_kl_model()
    g = Grid.midpoints(1000)
    d = sample_kl(model, 10**4, g, 17)
    r = fpca(d, model.basis)
    assert np.allclose(r.eigenvalues[:4], EXAMPLE_LAMBDA, rtol=0.1)
    assert np.all(r.eigenvalues[4:] < 1e-3)
    assert np.max(np.abs(r.eigenvectors.T @ r.eigenvectors - np.eye(9))) < 1e-9
    # leading eigenvector recovers e_1 up to quadrature
    assert abs(r.eigenvectors[:, 0] @ EXAMPLE_A[0]) > 0.99


def test_sign_convention_and_determinism():
    model = example_kl_model(0.2)
    d = sample_kl(model, 50, Grid.uniform(300), 1)
    a, b = fpca(d, model.basis, center=True), fpca(d, model.basis, center=True)
    assert np.array_equal(a.eigenvalues, b.eigenvalues)
    assert np.array_equal(a.eigenvectors, b.eigenvectors)
    for k in range(9):
        nz = np.nonzero(np.abs(a.eigenvectors[:, k]) > 1e-9)[0]
        assert a.eigenvectors[nz[0], k] > 0


def test_single_repeated_curve():
    g = Grid.uniform(200)
    x = np.sin(3 * g.points)
    r = fpca(FunctionalDataset(g, np.tile(x, (5, 1))), build_fourier(7))
    assert r.eigenvalues[0] > 0
    assert np.all(r.eigenvalues[1:] < 1e-12)


def test_reconstruct_full_equals_projection():
    b = build_splinet(KnotSet.equispaced(5), 3)
    g = Grid.uniform(300)
    rng = np.random.default_rng(2)
    d = FunctionalDataset(g, rng.normal(size=(6, 300)).cumsum(axis=1))
    r = fpca(d, b, center=True)
    full = reconstruct(d, r, b.size)
    direct = project(d, b) @ b.evaluate(g.points).T
    assert np.max(np.abs(full.values - direct)) < 1e-9
    with pytest.raises(RangeError):
        reconstruct(d, r, 0)
    with pytest.raises(RangeError):
        reconstruct(d, r, b.size + 1)


def test_rank_one_reconstruction():
    g = Grid.uniform(200)
    b = build_fourier(9)
    x = b.evaluate(g.points)[:, 3]
    d = FunctionalDataset(g, np.outer([1.0, -2.0, 0.5], x))
    r = fpca(d, b)
    assert np.max(np.abs(d.values - reconstruct(d, r, 1).values)) < 1e-9


def test_four_components_capture_model():
    model = example_kl_model()
    g = Grid.midpoints(1000)
    d = sample_kl(model, 400, g, 3)
    r = fpca(d, model.basis)
    x4 = reconstruct(d, r, 4)
    full = reconstruct(d, r, 9)
    err4 = np.mean(np.sum((d.values - x4.values) ** 2 * g.weights, axis=1))
    err_proj = np.mean(np.sum((d.values - full.values) ** 2 * g.weights, axis=1))
    total = np.mean(np.sum(d.values**2 * g.weights, axis=1))
    # the model has rank four, so truncation adds (almost) nothing beyond projection
    assert err4 - err_proj <= 0.05 * max(err_proj, 1e-3 * total)


def test_truncation_error_examples():
    assert truncation_error(EXAMPLE_A, EXAMPLE_LAMBDA, range(9)) == 0.0
    assert truncation_error(EXAMPLE_A, EXAMPLE_LAMBDA, range(2, 9)) == pytest.approx(0.75)
    assert truncation_error(EXAMPLE_A, EXAMPLE_LAMBDA, range(7)) == pytest.approx(0.02 / 3)
    assert truncation_error(EXAMPLE_A, EXAMPLE_LAMBDA, []) == pytest.approx(EXAMPLE_LAMBDA.sum())
    with pytest.raises(ContractViolation):
        truncation_error(2 * EXAMPLE_A, EXAMPLE_LAMBDA, range(3))


@given(st.sets(st.integers(0, 8)), st.sets(st.integers(0, 8)))
def test_truncation_monotone_and_additive(a, b):
    small, big = sorted(a), sorted(a | b)
    assert truncation_error(EXAMPLE_A, EXAMPLE_LAMBDA, big) <= truncation_error(EXAMPLE_A, EXAMPLE_LAMBDA, small) + 1e-15
    dropped = [i for i in range(9) if i not in a]
    parts = sum(
        truncation_error(EXAMPLE_A, EXAMPLE_LAMBDA, [j for j in range(9) if j != i]) for i in dropped
    )
    assert truncation_error(EXAMPLE_A, EXAMPLE_LAMBDA, small) == pytest.approx(parts, abs=1e-12)


def test_eigenvalue_mse_decreases_with_n():
    model = example_kl_model(math.sqrt(0.1))
    g = Grid.uniform(400)
    mse = []
    for n in (25, 100, 400):
        est = [fpca(sample_kl(model, n, g, 1000 * n + r), model.basis).eigenvalues[0] for r in range(40)]
        mse.append(np.mean((np.array(est) - 1.0) ** 2))
    assert mse[0] > mse[1] > mse[2]
