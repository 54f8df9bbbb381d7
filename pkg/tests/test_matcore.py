import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from nmukit.matcore import (
    ShapeError,
    dominant_singular_pair,
    frobenius_norm,
    inner_product,
    matmul,
)

finite = st.floats(-1e3, 1e3, allow_nan=False)
shapes = st.tuples(st.integers(1, 6), st.integers(1, 6))


def naive_matmul(A, B):
    m, p = A.shape
    n = B.shape[1]
    C = np.zeros((m, n))
    for i in range(m):
        for j in range(n):
            for k in range(p):
                C[i, j] += A[i, k] * B[k, j]
    return C


def test_frobenius_small_cases(rng):
    assert frobenius_norm(np.zeros((2, 2))) == 0.0
    assert frobenius_norm([[3.0, 4.0]]) == 5.0
    A = rng.standard_normal((5, 4))
    total = sum(x * x for x in A.ravel())
    assert frobenius_norm(A) == pytest.approx(np.sqrt(total), abs=1e-12)


@given(shapes.flatmap(lambda s: arrays(np.float64, s, elements=finite)))
def test_norm_squared_is_self_inner_product(A):
    n2 = frobenius_norm(A) ** 2
    assert inner_product(A, A) == pytest.approx(n2, rel=1e-12, abs=1e-300)


def test_inner_product_examples():
    A = np.array([[1.0, 2.0], [3.0, 4.0]])
    assert inner_product(A, np.eye(2)) == 5.0
    assert inner_product(A, np.zeros((2, 2))) == 0.0
    with pytest.raises(ShapeError):
        inner_product(A, np.ones((2, 3)))


def test_matmul(rng):
    A = rng.standard_normal((3, 4))
    assert np.array_equal(matmul(A, np.eye(4)), A)
    v = rng.random((5, 1))
    w = rng.random((1, 3))
    P = matmul(v, w)
    assert P[2, 1] == v[2, 0] * w[0, 1]
    B = rng.standard_normal((4, 2))
    np.testing.assert_allclose(matmul(A, B), naive_matmul(A, B), atol=1e-12)
    with pytest.raises(ShapeError):
        matmul(A, A)


def test_dominant_pair_diagonal():
    t = dominant_singular_pair(np.diag([2.0, 1.0]))
    assert t.sigma == pytest.approx(2.0, abs=1e-9)
    np.testing.assert_allclose(t.left, [1, 0], atol=1e-6)
    np.testing.assert_allclose(t.right, [1, 0], atol=1e-6)
    assert t.converged


def test_dominant_pair_rank_one(rng):
    u = rng.random(6)
    v = rng.random(4)
    u /= np.linalg.norm(u)
    v /= np.linalg.norm(v)
    A = 3.5 * np.outer(u, v)
    t = dominant_singular_pair(A)
    assert t.sigma == pytest.approx(frobenius_norm(A), abs=1e-8)
    np.testing.assert_allclose(t.left, u, atol=1e-8)
    np.testing.assert_allclose(t.right, v, atol=1e-8)


@given(arrays(np.float64, (2, 2), elements=st.floats(0.01, 10)))
def test_two_by_two_sigma_matches_characteristic_root(A):
    G = A.T @ A
    tr, det = np.trace(G), np.linalg.det(G)
    top = (tr + np.sqrt(max(tr * tr - 4 * det, 0.0))) / 2
    t = dominant_singular_pair(A, tol=1e-14, max_sweeps=100000)
    assert t.sigma ** 2 == pytest.approx(top, rel=1e-10)


@settings(max_examples=50)
@given(st.integers(0, 2**32 - 1))
def test_perron_vectors_nonnegative_and_unit(seed):
    rng = np.random.default_rng(seed)
    A = rng.random((7, 5))
    t = dominant_singular_pair(A)
    assert t.sigma >= 0
    assert t.left.min() >= -1e-12 and t.right.min() >= -1e-12
    assert np.linalg.norm(t.left) == pytest.approx(1, abs=1e-12)
    assert np.linalg.norm(t.right) == pytest.approx(1, abs=1e-12)


def test_eckart_young_against_random_rank_one(rng):
    A = rng.random((8, 6))
    t = dominant_singular_pair(A)
    best = frobenius_norm(A - t.sigma * np.outer(t.left, t.right))
    for _ in range(100):
        x, y = rng.random(8), rng.random(6)
        P = np.outer(x, y)
        P *= t.sigma / frobenius_norm(P)
        assert best <= frobenius_norm(A - P) + 1e-8


def test_zero_matrix_rejected():
    with pytest.raises(ValueError):
        dominant_singular_pair(np.zeros((3, 3)))


def test_sweep_cap_reports_nonconvergence(rng):
    t = dominant_singular_pair(rng.random((10, 10)), tol=0.0, max_sweeps=3)
    assert not t.converged
    assert t.sweeps == 3
