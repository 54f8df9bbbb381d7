"""Sparsity measures and relative errors for factorization reports."""

from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from .matcore import ShapeError, as_matrix, frobenius_norm, inner_product

__all__ = [
    "DEFAULT_THRESHOLD",
    "SparsityReport",
    "zero_mask",
    "plain_sparsity",
    "hoyer_sparsity",
    "mean_hoyer_sparsity",
    "relative_error",
    "scaled_relative_error",
    "report",
]

# entries below 0.1% of their column maximum count as zero
DEFAULT_THRESHOLD = 1e-3


@dataclass
class SparsityReport:
    """One row of a comparison table. Every field is a percentage."""

    error_plain: float
    error_scaled: float
    sV: float
    sW: float
    shV: float
    shW: float
    error_improved: Optional[float] = None

    def as_dict(self):
        return asdict(self)


def zero_mask(A, threshold_ratio=DEFAULT_THRESHOLD, axis=0):
    """Boolean mask of entries treated as zero.

    An entry is zero when it is exactly zero or when its magnitude is below
    ``threshold_ratio`` times the largest magnitude along `axis` (``axis=0``
    compares within columns, ``axis=1`` within rows). A ratio of 0 therefore
    counts exact zeros only.
    """
    if threshold_ratio < 0:
        raise ValueError("threshold_ratio must be >= 0")
    A = np.abs(np.asarray(A, dtype=np.float64))
    if A.ndim == 1:
        ref = A.max(initial=0.0)
    else:
        ref = A.max(axis=axis, keepdims=True, initial=0.0)
    return (A == 0) | (A < threshold_ratio * ref)


def plain_sparsity(A, threshold_ratio=DEFAULT_THRESHOLD, axis=0):
    """Fraction of (thresholded) zero entries of `A`, in [0, 1]."""
    A = np.asarray(A, dtype=np.float64)
    if A.size == 0:
        raise ShapeError("plain_sparsity of an empty array")
    return float(np.mean(zero_mask(A, threshold_ratio, axis)))


def hoyer_sparsity(x):
    """Hoyer's sparsity ``(sqrt(n) - |x|_1/|x|_2) / (sqrt(n) - 1)``.

    Equal to 1 for a single spike and 0 for a constant vector.
    """
    x = np.ravel(np.asarray(x, dtype=np.float64))
    n = x.size
    if n < 2:
        raise ValueError("hoyer_sparsity needs a vector of length >= 2")
    top = np.max(np.abs(x))
    if top == 0:
        raise ValueError("hoyer_sparsity of a zero vector is undefined")
    x = x / top                              # avoids underflow in the 2-norm
    l2 = np.linalg.norm(x)
    root = np.sqrt(n)
    return float((root - np.abs(x).sum() / l2) / (root - 1.0))


def mean_hoyer_sparsity(A, axis=0):
    """Mean Hoyer sparsity over the columns (axis=0) or rows (axis=1) of `A`.

    Zero vectors are skipped; returns 0.0 when every vector is zero.
    """
    A = as_matrix(A)
    vectors = A.T if axis == 0 else A
    values = [hoyer_sparsity(v) for v in vectors if np.any(v)]
    return float(np.mean(values)) if values else 0.0


def _check_factors(M, V, W):
    M, V, W = as_matrix(M, "M"), as_matrix(V, "V"), as_matrix(W, "W")
    if V.shape[1] != W.shape[0] or (V.shape[0], W.shape[1]) != M.shape:
        raise ShapeError(f"factors {V.shape} x {W.shape} do not match M {M.shape}")
    return M, V, W


def relative_error(M, V, W):
    """``100 * |M - VW|_F / |M|_F``."""
    M, V, W = _check_factors(M, V, W)
    norm_m = frobenius_norm(M)
    if norm_m == 0:
        raise ValueError("relative_error undefined for a zero matrix M")
    return 100.0 * frobenius_norm(M - V @ W) / norm_m


def scaled_relative_error(M, V, W):
    """Relative error of ``alpha * VW`` with the least-squares ``alpha >= 0``."""
    M, V, W = _check_factors(M, V, W)
    norm_m = frobenius_norm(M)
    if norm_m == 0:
        raise ValueError("scaled_relative_error undefined for a zero matrix M")
    VW = V @ W
    denom = inner_product(VW, VW)
    if denom == 0:
        return 100.0
    alpha = max(0.0, inner_product(M, VW) / denom)
    return 100.0 * frobenius_norm(M - alpha * VW) / norm_m


def report(M, V, W, threshold_ratio=DEFAULT_THRESHOLD):
    """Errors and sparsity of ``(V, W)`` as percentages.

    V is thresholded per column and W per row. ``error_improved`` is left
    unset; it is filled in after a pattern refit.
    """
    M, V, W = _check_factors(M, V, W)
    return SparsityReport(
        error_plain=relative_error(M, V, W),
        error_scaled=scaled_relative_error(M, V, W),
        sV=100.0 * plain_sparsity(V, threshold_ratio, axis=0),
        sW=100.0 * plain_sparsity(W, threshold_ratio, axis=1),
        shV=100.0 * mean_hoyer_sparsity(V, axis=0),
        shW=100.0 * mean_hoyer_sparsity(W, axis=1),
    )
