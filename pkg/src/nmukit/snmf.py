"""Sparse NMF with l1 penalties tuned toward target sparsity levels."""

from dataclasses import dataclass

import numpy as np

from .hals import FactorPair, _sweep, make_rng, random_pair, scale_initial
from .matcore import as_matrix
from .metrics import DEFAULT_THRESHOLD, plain_sparsity

__all__ = ["SnmfConfig", "SnmfResult", "adaptive_snmf"]


@dataclass
class SnmfConfig:
    rank: int
    target_sV: float = 0.0
    target_sW: float = 0.0
    sweeps: int = 600
    mu_init: float = 0.1
    step_pct: float = 5.0
    seed: object = 0
    threshold_ratio: float = DEFAULT_THRESHOLD
    mu_cap: float = 1e6
    normalize: bool = True

    def validate(self):
        for name in ("target_sV", "target_sW"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {value}")
        if self.mu_init <= 0:
            raise ValueError("mu_init must be > 0")
        if not 0 < self.step_pct < 100:
            raise ValueError("step_pct must lie in (0, 100)")
        if self.rank < 1 or self.sweeps < 0:
            raise ValueError("rank must be >= 1 and sweeps >= 0")


@dataclass
class SnmfResult:
    pair: FactorPair
    muV: float
    muW: float
    rescues: int = 0
    cap_hit: bool = False


def _normalize_columns(pair):
    # unit l2 columns of V pin the scale split, so muW cannot be dodged by
    # growing V while shrinking W
    norms = np.linalg.norm(pair.V, axis=0)
    nz = norms > 0
    pair.V[:, nz] /= norms[nz]
    pair.W[nz, :] *= norms[nz, None]


def adaptive_snmf(M, cfg, callback=None):
    """l1-penalized HALS whose penalties chase target sparsities.

    After every sweep each penalty is multiplied by ``1 + step_pct/100`` when
    the thresholded sparsity of its factor is below target, and by
    ``1 - step_pct/100`` otherwise. Penalties are capped at ``cfg.mu_cap``;
    hitting the cap is reported in the result.

    With ``cfg.normalize`` the columns of V are rescaled to unit norm after
    each sweep (W absorbs the scale), so the two penalties act on a fixed
    split of the product.

    `callback`, if given, is called as ``callback(i, pair, muV, muW)`` after
    sweep i, with the penalties that were used for that sweep.
    """
    cfg.validate()
    M = as_matrix(M, "M")
    if (M < 0).any():
        raise ValueError("M must be nonnegative")
    m, n = M.shape
    rng = make_rng(cfg.seed)
    pair = scale_initial(M, random_pair(m, n, cfg.rank, rng), rng)
    up = 1.0 + cfg.step_pct / 100.0
    down = 1.0 - cfg.step_pct / 100.0
    muV = muW = cfg.mu_init
    cap_hit = False
    for i in range(1, cfg.sweeps + 1):
        pair.rescues += _sweep(M, pair.V, pair.W, muV, muW, rng=rng)
        if cfg.normalize:
            _normalize_columns(pair)
        if callback is not None:
            callback(i, pair, muV, muW)
        sV = plain_sparsity(pair.V, cfg.threshold_ratio, axis=0)
        sW = plain_sparsity(pair.W, cfg.threshold_ratio, axis=1)
        muV *= up if sV < cfg.target_sV else down
        muW *= up if sW < cfg.target_sW else down
        if muV > cfg.mu_cap or muW > cfg.mu_cap:
            cap_hit = True
            muV, muW = min(muV, cfg.mu_cap), min(muW, cfg.mu_cap)
    return SnmfResult(pair, muV, muW, pair.rescues, cap_hit)
