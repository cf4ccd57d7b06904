import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ddkbasis.bases import (
    KnotSet,
    amse,
    build_fourier,
    build_piecewise_constant,
    build_splinet,
    bspline_family_matrix,
    project,
    projection_residuals,
    synthesize,
)
from ddkbasis.bspline import bspline_gram
from ddkbasis.errors import DomainError, InsufficientKnotsError
from ddkbasis.fcore import FunctionalDataset, Grid


def knot_sets(min_size, max_size):
    return st.lists(st.integers(1, 999), min_size=min_size, max_size=max_size, unique=True).map(
        lambda v: KnotSet(np.sort(np.array(v)) / 1000.0)
    )


def test_knotset_validation():
    with pytest.raises(DomainError):
        KnotSet([0.0, 0.5])
    with pytest.raises(DomainError):
        KnotSet([0.5, 0.5])
    with pytest.raises(DomainError):
        KnotSet([0.6, 0.5])
    assert len(KnotSet.equispaced(3)) == 3
    assert np.allclose(KnotSet.equispaced(3).internal, [0.25, 0.5, 0.75])
    assert KnotSet.from_unsorted([0.7, 0.2]) == KnotSet([0.2, 0.7])


def test_piecewise_constant_examples():
    b = build_piecewise_constant(KnotSet(np.empty(0)))
    assert b.size == 1 and b.evaluate([0.3])[0, 0] == 1.0
    b = build_piecewise_constant(KnotSet([0.5]))
    assert np.allclose(b.evaluate([0.25, 0.75]), [[math.sqrt(2), 0], [0, math.sqrt(2)]])
    b = build_piecewise_constant(KnotSet([0.25, 0.5]))
    assert np.array_equal(b.gram(), np.eye(3)) or np.allclose(b.gram(), np.eye(3), atol=1e-15)


def test_fourier_examples():
    assert build_fourier(1).evaluate([0.3])[0, 0] == 1.0
    b = build_fourier(3)
    t = np.array([0.125])
    assert np.allclose(b.evaluate(t), [[1, math.sqrt(2) * math.sin(np.pi / 4), math.sqrt(2) * math.cos(np.pi / 4)]])
    g = Grid.uniform(4000)
    f = b.evaluate(g.points)
    assert np.max(np.abs((f * g.weights[:, None]).T @ f - np.eye(3))) < 1e-3
    assert np.max(np.abs(build_fourier(30).gram() - np.eye(30))) < 1e-12


def test_splinet_needs_knots():
    with pytest.raises(InsufficientKnotsError):
        build_splinet(KnotSet([0.2, 0.4, 0.6]), 3)


def test_splinet_degree0_is_piecewise_constant_up_to_sign():
    s = build_splinet(KnotSet([0.5]), 0)
    pc = build_piecewise_constant(KnotSet([0.5]))
    t = np.array([0.1, 0.7])
    assert np.allclose(np.abs(s.evaluate(t)), pc.evaluate(t))


@settings(max_examples=25, deadline=None)
@given(knot_sets(4, 40), st.integers(1, 4))
def test_splinet_orthonormal_and_same_span(knots, degree):
    if len(knots) < degree + 1:
        return
    b = build_splinet(knots, degree)
    assert b.size == len(knots) + degree + 1
    assert np.max(np.abs(b.gram() - np.eye(b.size))) < 1e-8
    g = bspline_gram(b.ext, degree)
    # B-splines -> splinet span and splinet -> B-spline span (trivial, square C)
    resid = np.eye(b.size) - b.coef @ (b.coef.T @ g)
    assert np.sqrt(np.max(np.diag(resid.T @ g @ resid))) < 1e-8
    assert np.linalg.matrix_rank(b.coef) == b.size
    for j in range(b.size):
        assert b.support_intervals(j) <= (degree + 1) * 2 ** b.levels[j]


def test_splinet_locality_tracks_knots():
    # leaves are single normalized B-splines, so narrow knots give narrow leaves
    knots = KnotSet(np.array([0.01, 0.02, 0.03, 0.04, 0.3, 0.5, 0.7, 0.9]))
    b = build_splinet(knots, 3)
    leaves = np.nonzero(b.levels == 0)[0]
    assert leaves.size >= 2
    for j in leaves:
        assert np.count_nonzero(b.coef[:, j]) == 1


def test_project_examples():
    b = build_splinet(KnotSet([0.1, 0.3, 0.5, 0.7, 0.9]), 3)
    g = Grid.midpoints(4000)
    f3 = b.evaluate(g.points)[:, 2]
    c = project(FunctionalDataset(g, f3[None, :]), b)[0]
    assert np.max(np.abs(c - np.eye(b.size)[2])) < 1e-3
    zero = FunctionalDataset(g, np.zeros((1, g.size)))
    assert np.all(project(zero, b) == 0)


def test_amse_examples():
    b = build_splinet(KnotSet([0.2, 0.4, 0.6, 0.8]), 3)
    g = Grid.uniform(500)
    d = FunctionalDataset(g, b.evaluate(g.points).T)
    assert amse(d, b) < 1e-6
    x = np.sin(7 * g.points) + g.points**2
    one = FunctionalDataset(g, x[None, :])
    w = g.weights
    mean = np.sum(w * x)
    assert amse(one, build_piecewise_constant(KnotSet(np.empty(0)))) == pytest.approx(np.sum(w * (x - mean) ** 2), rel=1e-10)


@settings(max_examples=20, deadline=None)
@given(knot_sets(0, 10), st.integers(1, 999), st.integers(0, 2**32 - 1))
def test_amse_monotone_under_refinement(knots, extra, seed):
    xi = extra / 1000.0
    if np.any(np.isclose(knots.internal, xi)):
        return
    g = Grid.uniform(200)
    rng = np.random.default_rng(seed)
    d = FunctionalDataset(g, rng.normal(size=(3, 200)).cumsum(axis=1))
    coarse = amse(d, build_piecewise_constant(knots))
    fine = amse(d, build_piecewise_constant(KnotSet.from_unsorted(np.append(knots.internal, xi))))
    assert fine <= coarse * (1 + 1e-12) + 1e-15


def test_projection_idempotent():
    b = build_fourier(7)
    g = Grid.uniform(300)
    rng = np.random.default_rng(3)
    d = FunctionalDataset(g, rng.normal(size=(4, 300)))
    c = project(d, b)
    again = project(FunctionalDataset(g, synthesize(c, b, g)), b)
    assert np.max(np.abs(again - c)) < 1e-9


def test_residuals_vs_lstsq():
    b = build_splinet(KnotSet.equispaced(6), 3)
    g = Grid.uniform(150)
    rng = np.random.default_rng(4)
    d = FunctionalDataset(g, rng.normal(size=(2, 150)))
    sw = np.sqrt(g.weights)
    design = b.evaluate(g.points) * sw[:, None]
    coef, *_ = np.linalg.lstsq(design, (d.values * sw).T, rcond=None)
    r = (d.values * sw).T - design @ coef
    assert np.allclose(projection_residuals(d, b), np.sum(r * r, axis=0), rtol=1e-9)


def test_family_matrix_shape():
    m = bspline_family_matrix(KnotSet([0.3, 0.6]), 2, [0.0, 0.5, 1.0])
    assert m.shape == (3, 5)
