"""Nonnegative matrix underapproximation by Lagrangian relaxation.

The underapproximation constraint ``VW <= M`` is moved into the objective
with multipliers ``Lambda >= 0``. For fixed multipliers the Lagrangian is,
up to a constant, the nonnegative factorization of ``M - Lambda``, which is
attacked with a few HALS sweeps; the multipliers then take a projected
subgradient step of length ``1/k``.
"""

from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .hals import FactorPair, _sweep, make_rng, random_pair, refit_on_pattern, scale_initial
from .matcore import ShapeError, as_matrix, frobenius_norm

__all__ = [
    "GNMU_MAXITER",
    "RNMU_MAXITER",
    "LnmuConfig",
    "LnmuResult",
    "ResidualStack",
    "lagrangian_value",
    "lagrangian_value_shifted",
    "update_multipliers",
    "max_violation",
    "lnmu",
    "repair_underapprox",
    "gnmu",
    "rnmu",
]

# 600 HALS-equivalent budgets: 600 * 4/10 for G-NMU, 600 * 4/13 for R-NMU
GNMU_MAXITER = 240
RNMU_MAXITER = 180


@dataclass
class LnmuConfig:
    """Knobs of the L-NMU iteration and its drivers.

    ``maxiter=None`` picks the driver default (240 for G-NMU, 180 per
    rank-one stage for R-NMU). `seed` may also be a ``numpy.random.Generator``.
    """

    rank: int = 1
    maxiter: Optional[int] = None
    T: int = 2
    seed: object = 0
    repair: bool = True
    repair_both: bool = False
    refit_sweeps: int = 0

    def validate(self):
        if self.rank < 1:
            raise ValueError(f"rank must be >= 1, got {self.rank}")
        if self.maxiter is not None and self.maxiter < 1:
            raise ValueError(f"maxiter must be >= 1, got {self.maxiter}")
        if self.T < 1:
            raise ValueError(f"T must be >= 1, got {self.T}")
        if self.refit_sweeps < 0:
            raise ValueError("refit_sweeps must be >= 0")


@dataclass
class LnmuResult:
    pair: FactorPair
    lam: np.ndarray
    max_violation: float
    lagrangian_trace: list = field(default_factory=list)
    unrepaired: Optional[FactorPair] = None
    refit: Optional[FactorPair] = None


@dataclass
class ResidualStack:
    """Residuals ``R_1 = M, ..., R_{r+1}`` of the recursive scheme.

    ``exhausted_at`` is the 0-based stage at which the residual vanished
    (remaining factors are zero), or None.
    """

    residuals: list
    factors: list
    exhausted_at: Optional[int] = None


def _check(M, V, W, lam=None):
    M, V, W = as_matrix(M, "M"), as_matrix(V, "V"), as_matrix(W, "W")
    if V.shape[1] != W.shape[0] or (V.shape[0], W.shape[1]) != M.shape:
        raise ShapeError(f"factors {V.shape} x {W.shape} do not match M {M.shape}")
    if lam is not None:
        lam = as_matrix(lam, "lambda")
        if lam.shape != M.shape:
            raise ShapeError(f"multipliers {lam.shape} do not match M {M.shape}")
    return M, V, W, lam


def lagrangian_value(M, V, W, lam):
    """``0.5 * |M - VW|_F^2 + <Lambda, VW - M>``."""
    M, V, W, lam = _check(M, V, W, lam)
    E = V @ W - M
    return 0.5 * float(np.sum(E * E)) + float(np.sum(lam * E))


def lagrangian_value_shifted(M, V, W, lam):
    """Same value written as ``0.5 * |(M - Lambda) - VW|_F^2 - 0.5 * |Lambda|_F^2``."""
    M, V, W, lam = _check(M, V, W, lam)
    return 0.5 * frobenius_norm(M - lam - V @ W) ** 2 - 0.5 * frobenius_norm(lam) ** 2


def update_multipliers(lam, M, V, W, k):
    """Projected subgradient step ``max(0, Lambda - (M - VW) / k)``."""
    if k < 1:
        raise ValueError("step index k must be >= 1")
    M, V, W, lam = _check(M, V, W, lam)
    return np.maximum(0.0, lam - (M - V @ W) / k)


def max_violation(M, pair):
    """Largest entry of ``VW - M``, floored at 0."""
    return max(0.0, float(np.max(pair.product() - M)))


def _nonnegative(M):
    M = as_matrix(M, "M")
    if np.any(M < 0):
        raise ValueError("M must be nonnegative")
    return M


def lnmu(M, cfg, init=None, callback=None):
    """Lagrangian NMU.

    Starting from ``Lambda = 0``, each outer iteration k runs ``cfg.T`` HALS
    sweeps on ``M - Lambda`` and then updates the multipliers with step
    ``1/k``. The result is only approximately feasible; see
    :func:`repair_underapprox`.

    Parameters
    ----------
    M : (m, n) array_like
        Nonnegative data.
    cfg : LnmuConfig
    init : FactorPair, optional
        Starting factors. Defaults to a scaled uniform random pair.
    callback : callable, optional
        ``callback(k, pair, lam)`` after the k-th multiplier update. The
        arguments are live state and must not be modified.
    """
    cfg.validate()
    M = _nonnegative(M)
    m, n = M.shape
    maxiter = cfg.maxiter if cfg.maxiter is not None else GNMU_MAXITER
    rng = make_rng(cfg.seed)
    if init is None:
        pair = scale_initial(M, random_pair(m, n, cfg.rank, rng), rng)
    else:
        pair = init.copy()
        if pair.shape != M.shape or pair.rank != cfg.rank:
            raise ShapeError("initial pair does not match M and cfg.rank")
    V, W = pair.V, pair.W

    lam = np.zeros_like(M)
    trace = []
    for k in range(1, maxiter + 1):
        N = M - lam
        for _ in range(cfg.T):
            pair.rescues += _sweep(N, V, W, rng=rng)
        E = V @ W - M
        trace.append(0.5 * float(np.sum(E * E)) + float(np.sum(lam * E)))
        lam = np.maximum(0.0, lam + E / k)
        if callback is not None:
            callback(k, pair, lam)
    return LnmuResult(pair, lam, max_violation(M, pair), trace)


def _repair_factor(M, V, W, tol, max_sweeps):
    """Solve ``min |M - VW|`` over ``0 <= V``, ``VW <= M`` with W fixed.

    Rows of V decouple, so every coordinate update is done for all rows at
    once. Each entry moves to its unconstrained minimizer clipped into
    ``[0, u]``, where u is the largest value keeping the row feasible.
    """
    V = V.copy()
    r = V.shape[1]
    norms = np.einsum("ij,ij->i", W, W)

    def partial_residual(k):
        rest = np.arange(r) != k
        return M - V[:, rest] @ W[rest, :]

    def upper(Rk, k):
        pos = W[k] > 0
        if not np.any(pos):
            return np.full(V.shape[0], np.inf)
        return np.min(Rk[:, pos] / W[k, pos], axis=1)

    # one clipping pass makes the start feasible
    for k in range(r):
        Rk = partial_residual(k)
        V[:, k] = np.maximum(0.0, np.minimum(V[:, k], upper(Rk, k)))

    for _ in range(max_sweeps):
        change = 0.0
        for k in range(r):
            if norms[k] == 0:
                continue
            Rk = partial_residual(k)
            ls = Rk @ W[k] / norms[k]
            new = np.maximum(0.0, np.minimum(ls, upper(Rk, k)))
            change = max(change, float(np.max(np.abs(new - V[:, k]))))
            V[:, k] = new
        if change < tol:
            break
    return V


def repair_underapprox(M, pair, both=False, tol=1e-10, max_sweeps=200):
    """Make `pair` an exact underapproximation of `M`.

    ``V`` is replaced by the solution of the convex problem
    ``min |M - VW|_F`` subject to ``V >= 0`` and ``VW <= M`` with ``W``
    fixed, computed by cyclic coordinate descent (stops when no entry moves
    by more than `tol`, or after `max_sweeps`). With ``both=True`` the same
    problem is then solved for ``W`` with the new ``V`` fixed; for a rank-one
    pair this leaves a zero in every row and column of the residual on the
    support of the factors.
    """
    M = _nonnegative(M)
    if pair.shape != M.shape:
        raise ShapeError(f"factors {pair.shape} do not match M {M.shape}")
    V = _repair_factor(M, pair.V, pair.W, tol, max_sweeps)
    W = pair.W.copy()
    if both:
        W = _repair_factor(M.T, W.T, V.T, tol, max_sweeps).T
    return FactorPair(V, W, pair.rescues)


def _finish(M, res, cfg):
    if cfg.repair:
        res.unrepaired = res.pair
        res.pair = repair_underapprox(M, res.pair, both=cfg.repair_both)
        res.max_violation = max_violation(M, res.pair)
    if cfg.refit_sweeps:
        res.refit = refit_on_pattern(M, res.pair, cfg.refit_sweeps)
    return res


def gnmu(M, cfg, callback=None):
    """Global NMU: L-NMU on the full rank-r problem, then repair and refit."""
    if cfg.maxiter is None:
        cfg = replace(cfg, maxiter=GNMU_MAXITER)
    M = _nonnegative(M)
    return _finish(M, lnmu(M, cfg, callback=callback), cfg)


def rnmu(M, cfg):
    """Recursive NMU: r successive rank-one underapproximations.

    Stage k runs rank-one L-NMU on the residual ``R_k``, repairs it, and
    sets ``R_{k+1} = max(0, R_k - v_k w_k)``.

    Returns
    -------
    pair : FactorPair
    stack : ResidualStack
    """
    cfg.validate()
    M = _nonnegative(M)
    m, n = M.shape
    rng = make_rng(cfg.seed)
    stage = replace(cfg, rank=1, seed=rng,
                    maxiter=cfg.maxiter if cfg.maxiter is not None else RNMU_MAXITER)
    floor = 1e-12 * frobenius_norm(M)

    V = np.zeros((m, cfg.rank))
    W = np.zeros((cfg.rank, n))
    R = M.copy()
    stack = ResidualStack([R], [])
    rescues = 0
    for k in range(cfg.rank):
        if frobenius_norm(R) <= floor:
            if stack.exhausted_at is None:
                stack.exhausted_at = k
            stack.factors.append((np.zeros(m), np.zeros(n)))
            stack.residuals.append(R)
            continue
        res = lnmu(R, stage)
        pair = res.pair
        if cfg.repair:
            pair = repair_underapprox(R, pair, both=cfg.repair_both)
        rescues += pair.rescues
        v, w = pair.V[:, 0], pair.W[0, :]
        V[:, k], W[k, :] = v, w
        R = np.maximum(0.0, R - np.outer(v, w))
        stack.factors.append((v.copy(), w.copy()))
        stack.residuals.append(R)
    return FactorPair(V, W, rescues), stack
