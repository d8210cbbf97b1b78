"""Gaussian kernel evaluation and Gram matrix construction."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import pdist

_FAMILIES = ("rbf",)


@dataclass(frozen=True)
class KernelSpec:
    """Kernel family plus its bandwidth sigma and diagonal regularizer delta."""

    family: str = "rbf"
    sigma: float = 1.0
    delta: float = 0.0

    def __post_init__(self) -> None:
        if self.family not in _FAMILIES:
            raise ValueError(f"unknown kernel family {self.family!r}")
        if not (np.isfinite(self.sigma) and self.sigma > 0):
            raise ValueError("sigma must be a positive real")
        if not (np.isfinite(self.delta) and self.delta >= 0):
            raise ValueError("delta must be nonnegative")


@dataclass(frozen=True)
class GramMatrix:
    """Regularized kernel matrix K with K[i, j] = k(x_i, x_j) + delta * [i == j]."""

    K: np.ndarray
    spec: KernelSpec


def _as_matrix(X) -> np.ndarray:
    X = np.ascontiguousarray(np.asarray(X, dtype=np.float64))
    if X.ndim != 2 or X.shape[0] < 1:
        raise ValueError("expected a nonempty 2-d array of rows")
    return X


def kernel_eval(x, y, spec: KernelSpec) -> float:
    """Evaluate k(x, y) = exp(-||x - y||^2 / (2 sigma^2))."""
    x = np.asarray(x, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    if x.shape != y.shape:
        raise ValueError(f"dimension mismatch: {x.shape[0]} vs {y.shape[0]}")
    diff = x - y
    r2 = float(diff @ diff)
    return float(np.exp(-r2 / (2.0 * spec.sigma**2)))


def _sq_dists(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    # ||a||^2 + ||b||^2 - 2 a.b, clamped: rounding can push tiny values below 0
    sa = np.einsum("ij,ij->i", A, A)
    sb = np.einsum("ij,ij->i", B, B)
    d2 = sa[:, None] + sb[None, :] - 2.0 * (A @ B.T)
    np.maximum(d2, 0.0, out=d2)
    return d2


def gram(X, spec: KernelSpec) -> GramMatrix:
    """Build the regularized Gram matrix of the rows of X.

    The result is exactly symmetric (the upper triangle is mirrored) and
    its diagonal is exactly 1 + delta.
    """
    X = _as_matrix(X)
    K = np.exp(_sq_dists(X, X) / (-2.0 * spec.sigma**2))
    upper = np.triu(K, 1)
    K = upper + upper.T
    np.fill_diagonal(K, 1.0 + spec.delta)
    return GramMatrix(K, spec)


def kernel_cross(X, Z, spec: KernelSpec) -> np.ndarray:
    """Kernel values between probe rows Z and training rows X, shape (len(Z), len(X)).

    No delta term: regularization is a property of the training system only.
    """
    X = _as_matrix(X)
    Z = _as_matrix(Z)
    if Z.shape[1] != X.shape[1]:
        raise ValueError(f"dimension mismatch: {Z.shape[1]} vs {X.shape[1]}")
    return np.exp(_sq_dists(Z, X) / (-2.0 * spec.sigma**2))


def kernel_vector(X, z, spec: KernelSpec) -> np.ndarray:
    """Kernel values between one probe z and each training row, no delta term."""
    z = np.asarray(z, dtype=np.float64).ravel()
    return kernel_cross(X, z[None, :], spec)[0]


def median_pairwise_distance(X) -> float:
    """Median Euclidean distance over all row pairs; 1.0 when degenerate.

    Deterministic bandwidth heuristic.  Falls back to 1.0 when there are
    no pairs (a single row) or all rows coincide.
    """
    X = _as_matrix(X)
    if X.shape[0] < 2:
        return 1.0
    med = float(np.median(pdist(X)))
    return med if med > 0.0 else 1.0
