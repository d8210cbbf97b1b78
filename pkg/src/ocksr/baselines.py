"""Reference novelty scorers: k-means distance, k-NN distance ratio, kernel PCA.

Each scorer maps a probe to a nonnegative novelty score where larger
means more anomalous, so all of them plug into the same AUC evaluation
as the kernel regression model.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .kernel import KernelSpec, gram, kernel_cross, kernel_eval, kernel_vector

_KMEANS_TOL = 1e-8
_KMEANS_MAX_ITER = 100
_EIG_MAX_ITER = 1000
_EIG_TOL = 1e-10


class EigenSolverDidNotConverge(RuntimeError):
    """Subspace iteration failed to stabilize within the iteration budget."""


# ---------------------------------------------------------------------------
# k-means


@dataclass(frozen=True)
class KMeansModel:
    method = "kmeans"
    centers: np.ndarray


def kmeans_fit(X_pos, k: int, seed: int) -> KMeansModel:
    """Lloyd's iterations from a seeded random-row initialization.

    Rows are put in canonical (lexicographic) order before the seeded
    draw, so the fit depends on the row set and the seed, not on the
    order rows arrive in.  Stops when the largest center movement drops
    below 1e-8 or after 100 iterations.  A cluster that loses all points
    keeps its previous center.

    Args:
        X_pos: training rows.
        k: number of centers, 1 <= k <= n.
        seed: RNG seed for choosing the initial rows.
    """
    X = np.asarray(X_pos, dtype=np.float64)
    n = X.shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"k must lie in [1, {n}], got {k}")
    X = X[np.lexsort(X.T[::-1])]
    rng = np.random.default_rng(seed)
    centers = X[rng.choice(n, size=k, replace=False)].copy()
    for _ in range(_KMEANS_MAX_ITER):
        d2 = _pair_sq_dists(X, centers)
        assign = np.argmin(d2, axis=1)
        new_centers = centers.copy()
        for j in range(k):
            members = X[assign == j]
            if members.shape[0]:
                new_centers[j] = members.mean(axis=0)
        movement = float(np.sqrt(((new_centers - centers) ** 2).sum(axis=1)).max())
        centers = new_centers
        if movement < _KMEANS_TOL:
            break
    return KMeansModel(centers=centers)


def kmeans_score(model: KMeansModel, z) -> float:
    """Distance from z to the nearest center."""
    z = np.asarray(z, dtype=np.float64).ravel()
    if z.shape[0] != model.centers.shape[1]:
        raise ValueError(f"dimension mismatch: {z.shape[0]} vs {model.centers.shape[1]}")
    return float(np.sqrt(((model.centers - z) ** 2).sum(axis=1)).min())


def _pair_sq_dists(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    sa = np.einsum("ij,ij->i", A, A)
    sb = np.einsum("ij,ij->i", B, B)
    d2 = sa[:, None] + sb[None, :] - 2.0 * (A @ B.T)
    np.maximum(d2, 0.0, out=d2)
    return d2


# ---------------------------------------------------------------------------
# k-nearest-neighbor distance ratio


@dataclass(frozen=True)
class KnnddModel:
    method = "knndd"
    X: np.ndarray
    k: int
    self_kth: np.ndarray  # per-row distance to its own k-th nearest other row


def _kth_nn_within(X: np.ndarray, k: int) -> np.ndarray:
    d = np.sqrt(_pair_sq_dists(X, X))
    np.fill_diagonal(d, np.inf)
    return np.sort(d, axis=1)[:, k - 1]


def knndd_fit(X_pos, k: int) -> KnnddModel:
    """Retain the training rows and each row's own k-th neighbor distance."""
    X = np.asarray(X_pos, dtype=np.float64)
    n = X.shape[0]
    if not 1 <= k <= n - 1:
        raise ValueError(f"k must lie in [1, {n - 1}], got {k}")
    return KnnddModel(X=X, k=k, self_kth=_kth_nn_within(X, k))


def knndd_score(X_pos, z, k: int) -> float:
    """Ratio of the probe's k-th neighbor distance to that neighbor's own.

    The numerator is the distance from z to its k-th nearest training
    row; the denominator is the distance from that row to its own k-th
    nearest training row (itself excluded).  A probe inside the training
    cloud scores near 1, a probe on a training row scores 0.
    """
    return _knndd_score_fitted(knndd_fit(X_pos, k), z)


def _knndd_score_fitted(model: KnnddModel, z) -> float:
    z = np.asarray(z, dtype=np.float64).ravel()
    if z.shape[0] != model.X.shape[1]:
        raise ValueError(f"dimension mismatch: {z.shape[0]} vs {model.X.shape[1]}")
    dists = np.sqrt(((model.X - z) ** 2).sum(axis=1))
    order = np.argsort(dists, kind="stable")
    j = order[model.k - 1]
    num = float(dists[j])
    den = float(model.self_kth[j])
    if den == 0.0:
        return 0.0 if num == 0.0 else float("inf")
    return num / den


# ---------------------------------------------------------------------------
# kernel PCA reconstruction residual


@dataclass(frozen=True)
class KpcaModel:
    method = "kpca"
    X: np.ndarray
    spec: KernelSpec
    coeffs: np.ndarray       # (n, q), eigenvector l scaled by 1/sqrt(lambda_l)
    eigenvalues: np.ndarray  # (q,), descending
    row_mean: np.ndarray     # per-row mean of the uncentered Gram matrix
    total_mean: float


def _top_eigenpairs(S: np.ndarray, q: int) -> tuple[np.ndarray, np.ndarray]:
    """Top-q eigenpairs of a symmetric PSD matrix by subspace iteration.

    Deterministic (fixed internal seed).  Convergence is declared when
    the Ritz values stabilize to relative tolerance 1e-10; after 1000
    iterations without convergence an error is raised.
    """
    n = S.shape[0]
    rng = np.random.default_rng(0)
    V, _ = np.linalg.qr(rng.standard_normal((n, q)))
    prev = np.full(q, np.inf)
    for _ in range(_EIG_MAX_ITER):
        W = S @ V
        V, _ = np.linalg.qr(W)
        T = V.T @ (S @ V)
        T = (T + T.T) / 2.0
        ritz, U = np.linalg.eigh(T)
        ritz, U = ritz[::-1], U[:, ::-1]
        V = V @ U
        scale = max(float(ritz[0]), np.finfo(float).tiny)
        if np.abs(ritz - prev).max() <= _EIG_TOL * scale:
            return ritz, V
        prev = ritz
    raise EigenSolverDidNotConverge(
        f"subspace iteration did not converge in {_EIG_MAX_ITER} iterations")


def _centered_gram(X: np.ndarray, spec: KernelSpec) -> tuple[np.ndarray, np.ndarray, float]:
    K = gram(X, replace(spec, delta=0.0)).K
    row_mean = K.mean(axis=1)
    total_mean = float(K.mean())
    Kc = K - row_mean[:, None] - row_mean[None, :] + total_mean
    return Kc, row_mean, total_mean


def default_component_count(X_pos, spec: KernelSpec, mass: float = 0.95) -> int:
    """Smallest q whose leading eigenvalues capture ``mass`` of the centered spectrum."""
    X = np.asarray(X_pos, dtype=np.float64)
    Kc, _, _ = _centered_gram(X, spec)
    eig = np.linalg.eigvalsh(Kc)[::-1]
    eig = np.clip(eig, 0.0, None)
    total = float(eig.sum())
    if total == 0.0:
        return 1
    cum = np.cumsum(eig) / total
    q = int(np.searchsorted(cum, mass) + 1)
    return min(max(q, 1), X.shape[0] - 1)


def kpca_fit(X_pos, spec: KernelSpec, q: int) -> KpcaModel:
    """Principal subspace of the centered Gram matrix.

    Extracts the top-q eigenpairs with the deterministic iterative
    solver and stores eigenvectors scaled by inverse root eigenvalue, so
    probe projections come from centered kernel evaluations alone.

    Args:
        X_pos: training rows.
        spec: kernel configuration (delta is ignored: centering applies
            to the raw kernel matrix).
        q: number of components, 1 <= q <= n - 1.
    """
    X = np.asarray(X_pos, dtype=np.float64)
    n = X.shape[0]
    if not 1 <= q <= n - 1:
        raise ValueError(f"q must lie in [1, {n - 1}], got {q}")
    Kc, row_mean, total_mean = _centered_gram(X, spec)
    eigenvalues, vectors = _top_eigenpairs(Kc, q)
    floor = max(float(eigenvalues[0]), 1.0) * np.finfo(float).eps
    lam = np.clip(eigenvalues, floor, None)
    coeffs = vectors / np.sqrt(lam)[None, :]
    return KpcaModel(X=X, spec=replace(spec, delta=0.0), coeffs=coeffs,
                     eigenvalues=eigenvalues, row_mean=row_mean,
                     total_mean=total_mean)


def kpca_score(model: KpcaModel, z) -> float:
    """Feature-space reconstruction residual of z, clamped at 0.

    The squared distance between the centered feature image of z and its
    projection onto the stored principal subspace, computed purely from
    kernel evaluations.
    """
    z = np.asarray(z, dtype=np.float64).ravel()
    kz = kernel_vector(model.X, z, model.spec)
    kz_mean = float(kz.mean())
    kz_centered = kz - kz_mean - model.row_mean + model.total_mean
    self_centered = (kernel_eval(z, z, model.spec) - 2.0 * kz_mean
                     + model.total_mean)
    f = model.coeffs.T @ kz_centered
    return max(float(self_centered - f @ f), 0.0)


def kpca_score_batch(model: KpcaModel, Z) -> np.ndarray:
    """Vectorized ``kpca_score`` over the rows of Z."""
    Z = np.asarray(Z, dtype=np.float64)
    KZ = kernel_cross(model.X, Z, model.spec)
    kz_mean = KZ.mean(axis=1)
    centered = KZ - kz_mean[:, None] - model.row_mean[None, :] + model.total_mean
    self_centered = 1.0 - 2.0 * kz_mean + model.total_mean
    F = centered @ model.coeffs
    return np.maximum(self_centered - np.einsum("ij,ij->i", F, F), 0.0)
