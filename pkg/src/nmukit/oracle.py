"""Exact solvers for small binary instances.

For a binary matrix, the best rank-one underapproximation is the indicator
pair of a maximum edge biclique of the bipartite graph whose adjacency
matrix is M, so both problems are solved here by enumerating the subsets of
the smaller side.
"""

from dataclasses import dataclass

import numpy as np

from .matcore import as_matrix

__all__ = ["MAX_SIDE", "Biclique", "max_edge_biclique", "optimal_rank1_nmu_binary"]

MAX_SIDE = 22
_LOW_BITS = 16


@dataclass(frozen=True)
class Biclique:
    """Row set I and column set J (0-based) of an all-ones submatrix."""

    I: tuple
    J: tuple

    @property
    def edges(self):
        return len(self.I) * len(self.J)


def _binary(M):
    M = as_matrix(M, "M")
    if not np.all((M == 0) | (M == 1)):
        raise ValueError("matrix must be binary")
    return M.astype(bool)


def _popcount(x):
    return np.bitwise_count(x).sum(axis=-1, dtype=np.int64)


def _best_subsets(B):
    """All nonempty row subsets of B reaching the maximum edge count.

    Returns the maximum and a list of row-index tuples. Subsets are handled
    as bitmasks; the low 16 rows are tabulated once and combined with every
    pattern of the remaining rows.
    """
    p, q = B.shape
    packed = np.packbits(B, axis=1)          # p x nbytes, column bitsets
    full = np.packbits(np.ones(q, dtype=bool))
    low = min(p, _LOW_BITS)
    high = p - low

    table = np.empty((1 << low, full.size), dtype=np.uint8)
    table[0] = full
    for b in range(low):
        table[1 << b:1 << (b + 1)] = table[:1 << b] & packed[b]
    low_sizes = np.bitwise_count(np.arange(1 << low, dtype=np.uint32)).astype(np.int64)

    best, hits = -1, []
    for h in range(1 << high):
        common = full.copy()
        for b in range(high):
            if h >> b & 1:
                common &= packed[low + b]
        sizes = low_sizes + bin(h).count("1")
        edges = _popcount(table & common) * sizes
        if h == 0:
            edges[0] = -1                    # empty subset
        top = int(edges.max())
        if top < best:
            continue
        idx = np.flatnonzero(edges == top)
        if top > best:
            best, hits = top, []
        hits.extend((h << low) | int(i) for i in idx)
    subsets = [tuple(b for b in range(p) if s >> b & 1) for s in hits]
    return best, subsets


def max_edge_biclique(M):
    """Maximum edge biclique of the bipartite graph with adjacency matrix M.

    Enumerates subsets of the smaller side (at most 22 vertices). Among
    optimal bicliques the one with more rows wins, then the lexicographically
    smallest row set. A matrix without ones gives the empty biclique.
    """
    B = _binary(M)
    m, n = B.shape
    transposed = n < m
    frame = B.T if transposed else B
    if frame.shape[0] > MAX_SIDE:
        raise ValueError(f"both sides exceed {MAX_SIDE} vertices; enumeration is infeasible")
    if not B.any():
        return Biclique((), ())

    _, subsets = _best_subsets(frame)
    candidates = set()
    for S in subsets:
        # close both sides so ties are compared on maximal bicliques
        if transposed:
            I = np.flatnonzero(B[:, list(S)].all(axis=1))
        else:
            I = np.flatnonzero(B[:, np.flatnonzero(B[list(S)].all(axis=0))].all(axis=1))
        J = np.flatnonzero(B[I].all(axis=0))
        candidates.add((tuple(int(i) for i in I), tuple(int(j) for j in J)))
    I, J = min(candidates, key=lambda c: (-len(c[0]) * len(c[1]), -len(c[0]), c[0]))
    return Biclique(I, J)


def optimal_rank1_nmu_binary(M):
    """Globally optimal rank-one underapproximation of a binary matrix.

    Returns
    -------
    v, w : ndarray
        Binary indicator vectors of a maximum edge biclique.
    sq_error : int
        ``|M - v w^T|_F^2``, i.e. the number of ones left uncovered.
    """
    B = _binary(M)
    bic = max_edge_biclique(B)
    v = np.zeros(B.shape[0])
    w = np.zeros(B.shape[1])
    v[list(bic.I)] = 1.0
    w[list(bic.J)] = 1.0
    return v, w, int(B.sum()) - bic.edges
