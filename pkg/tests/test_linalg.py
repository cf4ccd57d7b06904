import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from ddkbasis.errors import ContractViolation
from ddkbasis.linalg import eig_sym, inverse_sqrt, lowdin


def test_identity_and_diagonal():
    w, v = eig_sym(np.eye(4))
    assert np.allclose(w, 1.0)
    w, _ = eig_sym(np.diag([0.01, 1, 0.3, 0.5]))
    assert np.allclose(w, [1, 0.5, 0.3, 0.01])


def test_two_by_two():
    w, v = eig_sym([[2.0, 1.0], [1.0, 2.0]])
    assert np.allclose(w, [3, 1], atol=1e-12)
    r = 1 / math.sqrt(2)
    assert np.allclose(np.abs(v), r, atol=1e-12)
    assert v[0, 0] * v[1, 0] > 0 and v[0, 1] * v[1, 1] < 0


def test_contract_violations():
    with pytest.raises(ContractViolation):
        eig_sym([[1.0, 2.0], [0.0, 1.0]])
    with pytest.raises(ContractViolation):
        eig_sym(np.ones((2, 3)))


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 30).flatmap(lambda n: arrays(float, (n, n), elements=st.floats(-100, 100))))
def test_reconstruction_and_orthonormality(a):
    m = a + a.T
    w, v = eig_sym(m)
    scale = max(np.linalg.norm(m), 1e-300)
    assert np.all(np.diff(w) <= 0)
    assert np.max(np.abs(v.T @ v - np.eye(len(w)))) < 1e-9
    assert np.max(np.abs(m - (v * w) @ v.T)) <= 1e-9 * scale + 1e-300


def test_shift_structure():
    rng = np.random.default_rng(5)
    a = rng.normal(size=(9, 9))
    s = a @ a.T
    w0, _ = eig_sym(s)
    w1, _ = eig_sym(s + 0.1 * np.eye(9))
    assert np.allclose(w1, w0 + 0.1, atol=1e-12)


def test_lowdin_orthonormalizes():
    rng = np.random.default_rng(6)
    g = rng.normal(size=(6, 6))
    metric = g @ g.T + 6 * np.eye(6)
    x = rng.normal(size=(6, 3))
    q = lowdin(x, metric)
    assert np.allclose(q.T @ metric @ q, np.eye(3), atol=1e-12)
    s = inverse_sqrt(metric)
    assert np.allclose(s @ metric @ s, np.eye(6), atol=1e-10)
