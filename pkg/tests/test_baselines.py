import numpy as np
import pytest

from ocksr.baselines import (
    EigenSolverDidNotConverge,
    _centered_gram,
    default_component_count,
    kmeans_fit,
    kmeans_score,
    knndd_fit,
    knndd_score,
    kpca_fit,
    kpca_score,
    kpca_score_batch,
)
from ocksr.kernel import KernelSpec


def test_kmeans_k_equals_n_scores_training_rows_zero():
    rng = np.random.default_rng(0)
    X = rng.standard_normal((7, 3))
    m = kmeans_fit(X, k=7, seed=1)
    assert max(kmeans_score(m, x) for x in X) <= 1e-12


def test_kmeans_single_center_is_mean():
    rng = np.random.default_rng(1)
    X = rng.standard_normal((20, 4))
    m = kmeans_fit(X, k=1, seed=0)
    np.testing.assert_allclose(m.centers[0], X.mean(axis=0), atol=1e-12)


def test_kmeans_two_blobs_recovers_means():
    rng = np.random.default_rng(2)
    a = 0.05 * rng.standard_normal((40, 2))
    b = np.array([5.0, 5.0]) + 0.05 * rng.standard_normal((40, 2))
    m = kmeans_fit(np.vstack([a, b]), k=2, seed=3)
    centers = m.centers[np.argsort(m.centers[:, 0])]
    assert np.linalg.norm(centers[0] - a.mean(axis=0)) < 0.1
    assert np.linalg.norm(centers[1] - b.mean(axis=0)) < 0.1


def test_kmeans_score_is_distance_to_nearest_center():
    m = kmeans_fit(np.array([[0.0, 0.0], [10.0, 0.0]]), k=2, seed=0)
    assert kmeans_score(m, np.array([0.0, 0.0])) == 0.0
    assert kmeans_score(m, np.array([13.0, 4.0])) == pytest.approx(5.0, rel=1e-12)


def test_kmeans_radial_monotonicity():
    rng = np.random.default_rng(3)
    m = kmeans_fit(rng.standard_normal((15, 3)), k=4, seed=5)
    direction = np.ones(3) / np.sqrt(3.0)
    start = m.centers.mean(axis=0)
    scores = [kmeans_score(m, start + r * direction) for r in np.linspace(5.0, 50.0, 8)]
    assert all(s1 <= s2 + 1e-12 for s1, s2 in zip(scores, scores[1:]))


def test_kmeans_invalid_k():
    X = np.zeros((3, 2))
    with pytest.raises(ValueError):
        kmeans_fit(X, k=0, seed=0)
    with pytest.raises(ValueError):
        kmeans_fit(X, k=4, seed=0)


def test_kmeans_permutation_invariant():
    rng = np.random.default_rng(4)
    X = rng.standard_normal((25, 3))
    perm = rng.permutation(25)
    a = kmeans_fit(X, k=5, seed=7)
    b = kmeans_fit(X[perm], k=5, seed=7)
    np.testing.assert_array_equal(a.centers, b.centers)


def test_knndd_zero_on_training_row():
    rng = np.random.default_rng(5)
    X = rng.standard_normal((10, 3))
    assert knndd_score(X, X[4], k=1) == 0.0


def test_knndd_lattice_ratio_one():
    # unit grid: every point's nearest neighbor is one lattice step away
    g = np.array([[i, j] for i in range(5) for j in range(5)], dtype=float)
    z = np.array([-1.0, 0.0])
    assert knndd_score(g, z, k=1) == pytest.approx(1.0, rel=1e-12)


def test_knndd_far_probe_large():
    rng = np.random.default_rng(6)
    X = rng.standard_normal((12, 2))
    assert knndd_score(X, np.array([500.0, 500.0]), k=3) > 50.0


def test_knndd_k_bounds():
    X = np.random.default_rng(7).standard_normal((5, 2))
    with pytest.raises(ValueError):
        knndd_fit(X, k=5)  # needs a kth neighbor distinct from the row itself
    with pytest.raises(ValueError):
        knndd_fit(X, k=0)


def test_knndd_duplicate_rows():
    X = np.array([[0.0, 0.0], [0.0, 0.0], [1.0, 1.0]])
    # probe sits on the duplicated point: 0 / 0 counts as no novelty
    assert knndd_score(X, np.array([0.0, 0.0]), k=1) == 0.0
    # probe near the duplicated point: positive / 0 blows up
    assert knndd_score(X, np.array([0.3, 0.3]), k=1) == np.inf


def test_knndd_permutation_invariant():
    rng = np.random.default_rng(8)
    X = rng.standard_normal((18, 4))
    perm = rng.permutation(18)
    z = rng.standard_normal(4)
    assert knndd_score(X, z, k=4) == knndd_score(X[perm], z, k=4)


def test_kpca_full_rank_training_residuals_zero():
    rng = np.random.default_rng(9)
    X = rng.standard_normal((12, 3))
    m = kpca_fit(X, KernelSpec(sigma=1.5), q=11)
    assert max(kpca_score(m, x) for x in X) <= 1e-8


def test_kpca_eigenvalues_descending():
    X = np.random.default_rng(10).standard_normal((15, 3))
    m = kpca_fit(X, KernelSpec(sigma=1.0), q=6)
    assert np.all(np.diff(m.eigenvalues) <= 1e-12)


def test_kpca_eigenvalues_match_dense_oracle():
    X = np.random.default_rng(11).standard_normal((20, 4))
    spec = KernelSpec(sigma=1.3)
    m = kpca_fit(X, spec, q=5)
    Kc = _centered_gram(X, spec)[0]
    dense = np.linalg.eigvalsh(Kc)[::-1][:5]
    np.testing.assert_allclose(m.eigenvalues, dense, rtol=1e-8)


def test_kpca_coefficients_orthonormal_in_kernel_metric():
    X = np.random.default_rng(12).standard_normal((18, 3))
    spec = KernelSpec(sigma=1.2)
    m = kpca_fit(X, spec, q=6)
    Kc = _centered_gram(X, spec)[0]
    G = m.coeffs.T @ Kc @ m.coeffs
    np.testing.assert_allclose(G, np.eye(6), atol=1e-8)


def test_kpca_line_manifold_low_rank():
    # a curved 1-d manifold in feature space sits in ~2 components
    rng = np.random.default_rng(13)
    t = rng.uniform(-2.0, 2.0, 30)
    X = np.stack([t, 2.0 * t], axis=1)
    m = kpca_fit(X, KernelSpec(sigma=40.0), q=2)
    on = kpca_score(m, np.array([1.3, 2.6]))
    off = kpca_score(m, np.array([2.6, 1.3]))
    assert on <= 1e-6
    assert on <= 1e-3 * off


def test_kpca_residual_nonnegative_and_monotone_in_q():
    rng = np.random.default_rng(14)
    X = rng.standard_normal((16, 3))
    spec = KernelSpec(sigma=1.4)
    z = rng.standard_normal(3)
    residuals = [kpca_score(kpca_fit(X, spec, q=q), z) for q in (1, 3, 6, 10, 15)]
    assert min(residuals) >= 0.0
    assert all(r1 >= r2 - 1e-10 for r1, r2 in zip(residuals, residuals[1:]))


def test_kpca_q_bounds():
    X = np.random.default_rng(15).standard_normal((6, 2))
    with pytest.raises(ValueError):
        kpca_fit(X, KernelSpec(), q=0)
    with pytest.raises(ValueError):
        kpca_fit(X, KernelSpec(), q=6)


def test_kpca_score_batch_matches_scalar():
    rng = np.random.default_rng(16)
    X = rng.standard_normal((14, 3))
    m = kpca_fit(X, KernelSpec(sigma=1.1), q=4)
    Z = rng.standard_normal((5, 3))
    batch = kpca_score_batch(m, Z)
    each = np.array([kpca_score(m, z) for z in Z])
    np.testing.assert_allclose(batch, each, rtol=1e-10, atol=1e-12)


def test_kpca_permutation_invariant_scores():
    rng = np.random.default_rng(17)
    X = rng.standard_normal((20, 3))
    perm = rng.permutation(20)
    spec = KernelSpec(sigma=1.5)
    z = rng.standard_normal(3)
    a = kpca_score(kpca_fit(X, spec, q=4), z)
    b = kpca_score(kpca_fit(X[perm], spec, q=4), z)
    # exact in exact arithmetic; the iterative eigensolver leaves
    # gap-limited vector error well below this
    assert a == pytest.approx(b, rel=1e-4, abs=1e-8)


def test_default_component_count_matches_mass_rule():
    X = np.random.default_rng(18).standard_normal((25, 4))
    spec = KernelSpec(sigma=1.0)
    q = default_component_count(X, spec)
    eig = np.clip(np.linalg.eigvalsh(_centered_gram(X, spec)[0])[::-1], 0.0, None)
    cum = np.cumsum(eig) / eig.sum()
    expect = int(np.searchsorted(cum, 0.95) + 1)
    assert q == min(max(expect, 1), 24)


def test_default_component_count_rank_one_structure():
    X = np.vstack([np.zeros((10, 2)), np.ones((10, 2))])
    assert default_component_count(X, KernelSpec(sigma=1.0)) == 1


def test_eigen_iteration_budget_enforced(monkeypatch):
    import ocksr.baselines as bl

    monkeypatch.setattr(bl, "_EIG_MAX_ITER", 1)
    X = np.random.default_rng(19).standard_normal((12, 3))
    with pytest.raises(EigenSolverDidNotConverge):
        bl.kpca_fit(X, KernelSpec(sigma=1.0), q=3)
