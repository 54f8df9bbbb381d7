import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from nmukit.oracle import Biclique, max_edge_biclique, optimal_rank1_nmu_binary

binary = arrays(np.float64, st.tuples(st.integers(1, 7), st.integers(1, 7)),
                elements=st.sampled_from([0.0, 1.0]))


def brute_force(M):
    """Best biclique by checking every row subset and every column subset."""
    m, n = M.shape
    best = 0
    for rows in itertools.product((0, 1), repeat=m):
        for cols in itertools.product((0, 1), repeat=n):
            if np.all(np.outer(rows, cols) <= M):
                best = max(best, sum(rows) * sum(cols))
    return best


def test_examples():
    b = max_edge_biclique(np.ones((2, 2)))
    assert b == Biclique((0, 1), (0, 1)) and b.edges == 4
    assert max_edge_biclique(np.array([[1, 1], [1, 0]])).edges == 2
    assert max_edge_biclique(np.eye(3)).edges == 1


def test_tie_break_prefers_more_rows_then_lexicographic():
    M = np.array([[1, 1], [1, 0]])
    assert max_edge_biclique(M) == Biclique((0, 1), (0,))
    assert max_edge_biclique(np.eye(3)) == Biclique((0,), (0,))


def test_rank_one_examples():
    v, w, err = optimal_rank1_nmu_binary(np.ones((3, 4)))
    assert err == 0 and v.sum() == 3 and w.sum() == 4
    assert optimal_rank1_nmu_binary(np.array([[1, 1], [1, 0]]))[2] == 1
    v, w, err = optimal_rank1_nmu_binary(np.zeros((3, 2)))
    assert err == 0 and not v.any() and not w.any()


@settings(max_examples=60)
@given(binary)
def test_matches_brute_force_and_is_feasible(M):
    b = max_edge_biclique(M)
    assert b.edges == brute_force(M)
    if b.edges:
        assert np.all(M[np.ix_(b.I, b.J)] == 1)
    v, w, err = optimal_rank1_nmu_binary(M)
    assert np.all(np.outer(v, w) <= M)
    assert err == ((M - np.outer(v, w)) ** 2).sum()


@given(binary)
def test_transpose_symmetry(M):
    assert max_edge_biclique(M).edges == max_edge_biclique(M.T).edges


def test_wide_and_tall_inputs(rng):
    M = (rng.random((3, 40)) < 0.6).astype(float)
    b = max_edge_biclique(M)
    assert b.edges == max_edge_biclique(M.T).edges
    big = (rng.random((18, 30)) < 0.5).astype(float)
    assert max_edge_biclique(big).edges >= 1


def test_errors():
    with pytest.raises(ValueError):
        max_edge_biclique(np.array([[0.5, 1.0]]))
    with pytest.raises(ValueError):
        max_edge_biclique(np.ones((23, 23)))
