"""Hierarchical alternating least squares (HALS).

Each sweep updates the columns of ``V`` one at a time, then the rows of ``W``,
with the closed-form nonnegative least-squares solution of every block. The
target ``N`` may be signed, which is what the Lagrangian NMU subproblem
``N = M - Lambda`` needs.

The penalized variant minimizes::

    0.5 * |M - VW|_F^2 + muV * sum(V) + muW * sum(W)

by shifting the numerators of the closed-form updates by ``mu``.
"""

from dataclasses import dataclass

import numpy as np

from .matcore import ShapeError, as_matrix, frobenius_norm, inner_product
from .metrics import DEFAULT_THRESHOLD, zero_mask

__all__ = [
    "DEGENERATE_TOL",
    "FactorPair",
    "HalsWorkspace",
    "make_rng",
    "random_pair",
    "scale_initial",
    "hals_objective",
    "hals_sweep",
    "hals_penalized_sweep",
    "nmf",
    "round_pair",
    "refit_on_pattern",
]

# a block whose squared norm falls below this is treated as zero
DEGENERATE_TOL = 1e-15


@dataclass
class FactorPair:
    """Nonnegative rank-r factors ``V`` (m x r) and ``W`` (r x n).

    ``rescues`` counts degenerate rank-one factors that were resampled while
    producing this pair.
    """

    V: np.ndarray
    W: np.ndarray
    rescues: int = 0

    def __post_init__(self):
        self.V = as_matrix(self.V, "V")
        self.W = as_matrix(self.W, "W")
        if self.V.shape[1] != self.W.shape[0]:
            raise ShapeError(f"V {self.V.shape} and W {self.W.shape} disagree on rank")

    @property
    def rank(self):
        return self.V.shape[1]

    @property
    def shape(self):
        return self.V.shape[0], self.W.shape[1]

    def product(self):
        return self.V @ self.W

    def copy(self):
        return FactorPair(self.V.copy(), self.W.copy(), self.rescues)


@dataclass(frozen=True)
class HalsWorkspace:
    """Gram products used by the closed-form updates, all from one pair."""

    A: np.ndarray  # N W^T
    B: np.ndarray  # W W^T
    C: np.ndarray  # V^T N
    D: np.ndarray  # V^T V

    @classmethod
    def from_pair(cls, N, pair):
        N = _check_target(N, pair)
        V, W = pair.V, pair.W
        return cls(N @ W.T, W @ W.T, V.T @ N, V.T @ V)


def make_rng(seed):
    """A numpy Generator from an int seed, or `seed` itself if already one."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def _uniform(rng, size):
    # uniform on (0, 1]; zero excluded to avoid degenerate starts
    return 1.0 - rng.random(size)


def random_pair(m, n, r, rng):
    rng = make_rng(rng)
    return FactorPair(_uniform(rng, (m, r)), _uniform(rng, (r, n)))


def _check_target(N, pair):
    N = as_matrix(N, "N")
    if N.shape != pair.shape:
        raise ShapeError(f"target {N.shape} does not match factors {pair.shape}")
    return N


def scale_initial(M, pair, rng=None, max_attempts=10):
    """Rescale ``W`` by ``alpha = <M, VW> / <VW, VW>``.

    After scaling, ``alpha = 1`` is the best multiple of ``VW``. If ``VW`` is
    zero or ``alpha <= 0`` the pair is resampled from `rng`, up to
    `max_attempts` times.
    """
    M = _check_target(M, pair)
    rng = make_rng(0 if rng is None else rng)
    m, n = pair.shape
    current = pair
    for _ in range(max_attempts):
        VW = current.product()
        denom = inner_product(VW, VW)
        if denom > 0:
            alpha = inner_product(M, VW) / denom
            if alpha > 0:
                return FactorPair(current.V.copy(), alpha * current.W, current.rescues)
        current = random_pair(m, n, current.rank, rng)
    raise ValueError("could not find a scalable initial pair; is M zero?")


def hals_objective(N, pair, muV=0.0, muW=0.0):
    """``0.5 * |N - VW|_F^2 + muV * sum(V) + muW * sum(W)``."""
    N = _check_target(N, pair)
    value = 0.5 * frobenius_norm(N - pair.product()) ** 2
    if muV:
        value += muV * float(pair.V.sum())
    if muW:
        value += muW * float(pair.W.sum())
    return value


def _rescue(N, V, W, k, rng):
    """Resample rank-one factor k and fit its scale to the current residual."""
    m, n = N.shape
    residual = N - V @ W + np.outer(V[:, k], W[k, :])
    v = _uniform(rng, m)
    w = _uniform(rng, n)
    P = np.outer(v, w)
    pp = inner_product(P, P)
    alpha = inner_product(residual, P) / pp
    if alpha <= 0:
        # residual has no positive component along P; keep the factor tiny
        alpha = 1e-8 * max(frobenius_norm(residual), 1.0) / np.sqrt(pp)
    root = np.sqrt(alpha)
    V[:, k] = root * v
    W[k, :] = root * w


def _sweep(N, V, W, muV=0.0, muW=0.0, maskV=None, maskW=None, rng=None):
    """One in-place HALS sweep. Returns the number of rescued factors.

    With masks, masked entries are forced to zero after each update and
    degenerate factors are left alone instead of being resampled.
    """
    r = V.shape[1]
    rescue = maskV is None and maskW is None
    rescued = 0

    B = W @ W.T
    if rescue:
        bad = np.flatnonzero(np.diag(B) < DEGENERATE_TOL)
        for k in bad:
            _rescue(N, V, W, k, rng)
        rescued += bad.size
        if bad.size:
            B = W @ W.T
    A = N @ W.T
    for k in range(r):
        bkk = B[k, k]
        if bkk < DEGENERATE_TOL:
            continue
        num = A[:, k] - V @ B[:, k] + V[:, k] * bkk
        if muV:
            num = num - muV
        V[:, k] = np.maximum(0.0, num / bkk)
        if maskV is not None:
            V[:, k] *= maskV[:, k]

    D = V.T @ V
    if rescue:
        bad = np.flatnonzero(np.diag(D) < DEGENERATE_TOL)
        for k in bad:
            _rescue(N, V, W, k, rng)
        rescued += bad.size
        if bad.size:
            D = V.T @ V
    C = V.T @ N
    for k in range(r):
        dkk = D[k, k]
        if dkk < DEGENERATE_TOL:
            continue
        num = C[k, :] - D[k, :] @ W + dkk * W[k, :]
        if muW:
            num = num - muW
        W[k, :] = np.maximum(0.0, num / dkk)
        if maskW is not None:
            W[k, :] *= maskW[k, :]
    return rescued


def hals_sweep(N, pair, rng=None):
    """One HALS sweep on target `N` (possibly signed). Returns a new pair.

    ``|N - VW|_F`` never increases, except when a zero rank-one factor has to
    be resampled from `rng`.
    """
    N = _check_target(N, pair)
    out = pair.copy()
    out.rescues += _sweep(N, out.V, out.W, rng=make_rng(0 if rng is None else rng))
    return out


def hals_penalized_sweep(M, pair, muV, muW, rng=None):
    """One HALS sweep on the l1-penalized objective. Returns a new pair."""
    if muV < 0 or muW < 0:
        raise ValueError("penalties must be nonnegative")
    M = _check_target(M, pair)
    out = pair.copy()
    out.rescues += _sweep(M, out.V, out.W, muV, muW, rng=make_rng(0 if rng is None else rng))
    return out


def nmf(M, r, sweeps=600, seed=0, callback=None):
    """NMF by HALS from a scaled uniform random start.

    Parameters
    ----------
    M : (m, n) array_like
        Nonnegative data.
    r : int
        Factorization rank, ``1 <= r < min(m, n)``.
    sweeps : int
        Number of HALS sweeps.
    seed : int or numpy.random.Generator
    callback : callable, optional
        Called as ``callback(i, pair)`` after sweep i (1-based); the pair is
        live and must not be modified.
    """
    M = as_matrix(M, "M")
    if np.any(M < 0):
        raise ValueError("nmf needs a nonnegative matrix")
    m, n = M.shape
    if not 1 <= r < min(m, n):
        raise ValueError(f"rank must satisfy 1 <= r < min(m, n) = {min(m, n)}, got {r}")
    rng = make_rng(seed)
    pair = scale_initial(M, random_pair(m, n, r, rng), rng)
    for i in range(1, sweeps + 1):
        pair.rescues += _sweep(M, pair.V, pair.W, rng=rng)
        if callback is not None:
            callback(i, pair)
    return pair


def round_pair(pair, threshold_ratio=DEFAULT_THRESHOLD):
    """Copy of `pair` with small entries set to exactly zero.

    V is thresholded per column, W per row.
    """
    V = np.where(zero_mask(pair.V, threshold_ratio, axis=0), 0.0, pair.V)
    W = np.where(zero_mask(pair.W, threshold_ratio, axis=1), 0.0, pair.W)
    return FactorPair(V, W, pair.rescues)


def refit_on_pattern(M, pair, sweeps=100, threshold_ratio=DEFAULT_THRESHOLD):
    """Re-optimize the nonzero entries of `pair` with its zero pattern frozen.

    The pair is first rounded with `threshold_ratio`; the surviving nonzero
    entries are then refined by `sweeps` masked HALS sweeps. Zeros stay
    zeros and the error never exceeds that of the rounded pair.
    """
    M = _check_target(M, pair)
    out = round_pair(pair, threshold_ratio)
    maskV = (out.V != 0).astype(np.float64)
    maskW = (out.W != 0).astype(np.float64)
    for _ in range(sweeps):
        _sweep(M, out.V, out.W, maskV=maskV, maskW=maskW)
    return out
