"""Dense matrix helpers and the dominant singular pair.

Matrices are plain 2-D ``numpy.ndarray`` objects of dtype float64. Shapes are
checked when an operation is called, never at construction.
"""

from dataclasses import dataclass

import numpy as np

__all__ = [
    "ShapeError",
    "SingularTriple",
    "as_matrix",
    "frobenius_norm",
    "inner_product",
    "matmul",
    "dominant_singular_pair",
]


class ShapeError(ValueError):
    """Raised when operand shapes do not conform."""


@dataclass(frozen=True)
class SingularTriple:
    sigma: float
    left: np.ndarray
    right: np.ndarray
    converged: bool = True
    sweeps: int = 0


def as_matrix(A, name="A"):
    """Return `A` as a 2-D float64 array, rejecting other ranks."""
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2:
        raise ShapeError(f"{name} must be 2-D, got ndim={A.ndim}")
    return A


def frobenius_norm(A):
    A = np.asarray(A, dtype=np.float64)
    return float(np.sqrt(np.sum(A * A)))


def inner_product(A, B):
    """Entrywise inner product ``sum(A * B)``, i.e. ``trace(A @ B.T)``."""
    A = np.asarray(A, dtype=np.float64)
    B = np.asarray(B, dtype=np.float64)
    if A.shape != B.shape:
        raise ShapeError(f"inner_product shape mismatch: {A.shape} vs {B.shape}")
    return float(np.sum(A * B))


def matmul(A, B):
    A = as_matrix(A, "A")
    B = as_matrix(B, "B")
    if A.shape[1] != B.shape[0]:
        raise ShapeError(f"matmul shape mismatch: {A.shape} @ {B.shape}")
    return A @ B


def dominant_singular_pair(A, tol=1e-10, max_sweeps=10000):
    """Largest singular value and its singular vectors by power iteration.

    Iterates on ``A.T @ A`` starting from the all-ones vector, which is never
    orthogonal to the Perron vector of a nonnegative matrix. Stops once two
    successive estimates of sigma agree to within ``tol * sigma``.

    Parameters
    ----------
    A : (m, n) array_like
        Nonzero matrix.
    tol : float
        Relative stopping tolerance on sigma.
    max_sweeps : int
        Iteration cap. If reached, the best estimate is returned with
        ``converged=False``.

    Returns
    -------
    SingularTriple
        ``left`` and ``right`` have unit norm; the sign is fixed so that the
        largest-magnitude entry of ``left`` is positive.
    """
    A = as_matrix(A)
    if not np.any(A):
        raise ValueError("dominant_singular_pair of a zero matrix is undefined")

    x = np.ones(A.shape[1])
    x /= np.linalg.norm(x)
    sigma = 0.0
    converged = False
    sweeps = 0
    for sweeps in range(1, max_sweeps + 1):
        y = A @ x
        new_sigma = float(np.linalg.norm(y))
        if new_sigma == 0.0:
            # all-ones start annihilated by a signed A; restart off-axis
            x = np.linspace(1.0, 2.0, A.shape[1])
            x /= np.linalg.norm(x)
            continue
        u = y / new_sigma
        z = A.T @ u
        x = z / np.linalg.norm(z)
        if abs(new_sigma - sigma) <= tol * new_sigma:
            sigma = new_sigma
            converged = True
            break
        sigma = new_sigma

    u = A @ x
    sigma = float(np.linalg.norm(u))
    u = u / sigma
    i = int(np.argmax(np.abs(u)))
    if u[i] < 0:
        u, x = -u, -x
    return SingularTriple(sigma, u, x, converged, sweeps)
