import numpy as np
import numpy.testing as npt
import pytest

from reidkit.errors import NumericError
from reidkit.xqda import (
    CovariancePair,
    CrossViewDataset,
    XqdaConfig,
    compute_covariances_fast,
    compute_covariances_naive,
    distance,
    pairwise_distances,
    project,
    train_xqda,
    xqda_from_covariances,
)


def random_dataset(rng, d=6, classes=4, max_per_view=3):
    n_counts = rng.integers(1, max_per_view + 1, size=classes)
    m_counts = rng.integers(1, max_per_view + 1, size=classes)
    labels_x = np.repeat(np.arange(classes), n_counts)
    labels_z = np.repeat(np.arange(classes), m_counts)
    x = rng.standard_normal((d, len(labels_x)))
    z = rng.standard_normal((d, len(labels_z)))
    return CrossViewDataset(x, z, labels_x, labels_z)


def test_pair_counts_hand_example():
    # Classes a and b: view one holds 2 a's and 3 b's, view two 1 a and
    # 4 b's, so genuine pairs number 2*1 + 3*4 = 14 of the 25 total.
    rng = np.random.default_rng(0)
    ds = CrossViewDataset(
        rng.standard_normal((3, 5)),
        rng.standard_normal((3, 5)),
        np.array(["a", "a", "b", "b", "b"]),
        np.array(["a", "b", "b", "b", "b"]),
    )
    for compute in (compute_covariances_fast, compute_covariances_naive):
        cov = compute(ds)
        assert cov.n_intra == 14
        assert cov.n_extra == 11
        assert cov.n_intra + cov.n_extra == 25


def test_fast_matches_naive_on_random_datasets():
    rng = np.random.default_rng(1)
    for _ in range(10):
        ds = random_dataset(rng, d=int(rng.integers(2, 9)), classes=int(rng.integers(2, 6)))
        fast = compute_covariances_fast(ds)
        naive = compute_covariances_naive(ds)
        assert fast.n_intra == naive.n_intra
        assert fast.n_extra == naive.n_extra
        for a, b in ((fast.sigma_intra, naive.sigma_intra), (fast.sigma_extra, naive.sigma_extra)):
            rel = np.linalg.norm(a - b) / max(np.linalg.norm(b), 1e-30)
            assert rel <= 1e-10


def test_mirrored_views_include_self_pairs():
    rng = np.random.default_rng(2)
    x = rng.standard_normal((4, 6))
    labels = np.array([0, 0, 1, 1, 2, 2])
    ds = CrossViewDataset(x, x.copy(), labels, labels)
    fast = compute_covariances_fast(ds)
    naive = compute_covariances_naive(ds)
    npt.assert_allclose(fast.sigma_intra, naive.sigma_intra, atol=1e-12)
    npt.assert_allclose(fast.sigma_extra, naive.sigma_extra, atol=1e-12)


def test_covariances_symmetric_and_psd():
    rng = np.random.default_rng(3)
    for _ in range(5):
        cov = compute_covariances_fast(random_dataset(rng))
        for sigma in (cov.sigma_intra, cov.sigma_extra):
            npt.assert_array_equal(sigma, sigma.T)
            floor = -1e-10 * np.trace(sigma)
            assert np.linalg.eigvalsh(sigma).min() >= floor


def test_naive_refuses_oversized_datasets():
    rng = np.random.default_rng(4)
    ds = random_dataset(rng)
    with pytest.raises(ValueError, match="naive limit"):
        compute_covariances_naive(ds, max_pairs=3)


def test_dataset_validation():
    x = np.zeros((3, 2))
    with pytest.raises(ValueError, match="both views"):
        CrossViewDataset(x, x, np.array([0, 1]), np.array([0, 2]))
    with pytest.raises(ValueError, match="two identities"):
        CrossViewDataset(x, x, np.array([5, 5]), np.array([5, 5]))
    with pytest.raises(ValueError, match="label counts"):
        CrossViewDataset(x, x, np.array([0, 1, 2]), np.array([0, 1]))
    with pytest.raises(ValueError, match="feature dimension"):
        CrossViewDataset(np.zeros((3, 2)), np.zeros((4, 2)), [0, 1], [0, 1])


def test_known_diagonal_covariances_solve_exactly():
    # sigma_extra w = lambda sigma_intra w with diagonal matrices has
    # eigenvalues 5/0.1 = 50 and 1/1 = 1 along the axes. The threshold
    # keeps only lambda = 50, the first axis, and the scoring kernel is
    # 1/0.1 - 1/5 = 9.8 there.
    cov = CovariancePair(np.diag([0.1, 1.0]), np.diag([5.0, 1.0]), 10, 10)
    model = xqda_from_covariances(cov, XqdaConfig(regularizer=0.0))
    assert model.w.shape == (2, 1)
    npt.assert_allclose(model.eigenvalues, [50.0], atol=1e-10)
    npt.assert_allclose(np.abs(model.w[:, 0]), [1.0, 0.0], atol=1e-12)
    npt.assert_allclose(model.m, [[9.8]], atol=1e-10)
    npt.assert_allclose(
        distance(model, np.array([1.0, 0.0]), np.array([0.0, 0.0])), 9.8, atol=1e-10
    )


def test_sampled_gaussians_recover_informative_axis():
    # Identity centers vary only along the first axis; per-view noise is
    # diag(0.05, 0.5), putting the genuine-pair difference covariance at
    # diag(0.1, 1) and the impostor one near diag(5, 1) as above.
    rng = np.random.default_rng(5)
    classes, per_view = 60, 4
    centers = np.zeros((2, classes))
    centers[0] = np.sqrt(2.45) * rng.standard_normal(classes)
    noise = np.sqrt([0.05, 0.5])[:, None]
    labels = np.repeat(np.arange(classes), per_view)
    x = centers[:, labels] + noise * rng.standard_normal((2, len(labels)))
    z = centers[:, labels] + noise * rng.standard_normal((2, len(labels)))
    model = train_xqda(CrossViewDataset(x, z, labels, labels), XqdaConfig(max_dims=1))
    assert abs(model.w[0, 0]) > 0.95
    assert 25.0 < model.eigenvalues[0] < 90.0


def test_full_rank_model_equals_direct_inverse_difference():
    rng = np.random.default_rng(6)
    ds = random_dataset(rng, d=5, classes=6, max_per_view=4)
    cov = compute_covariances_fast(ds)
    cfg = XqdaConfig(regularizer=0.0, max_dims=5, eigen_threshold=float("-inf"))
    model = xqda_from_covariances(cov, cfg)
    assert model.w.shape == (5, 5)
    lifted = model.w @ model.m @ model.w.T
    direct = np.linalg.inv(cov.sigma_intra) - np.linalg.inv(cov.sigma_extra)
    npt.assert_allclose(lifted, direct, rtol=0, atol=1e-8 * np.abs(direct).max())


def test_eigenpairs_satisfy_generalized_problem():
    rng = np.random.default_rng(7)
    ds = random_dataset(rng, d=7, classes=5, max_per_view=4)
    cfg = XqdaConfig(regularizer=0.001, eigen_threshold=float("-inf"), max_dims=7)
    cov = compute_covariances_fast(ds)
    model = xqda_from_covariances(cov, cfg)
    reg_intra = cov.sigma_intra + cfg.regularizer * np.eye(7)
    for k, lam in enumerate(model.eigenvalues):
        w = model.w[:, k]
        lhs = cov.sigma_extra @ w
        residual = np.linalg.norm(lhs - lam * (reg_intra @ w))
        assert residual <= 1e-8 * np.linalg.norm(lhs)
    assert np.all(np.diff(model.eigenvalues) < 0)


def test_threshold_cap_and_floor_rules():
    cov = CovariancePair(np.eye(3), np.diag([9.0, 4.0, 0.25]), 10, 10)
    cfg0 = XqdaConfig(regularizer=0.0)
    assert xqda_from_covariances(cov, cfg0).w.shape[1] == 2  # 9 and 4 pass, 0.25 fails
    capped = XqdaConfig(regularizer=0.0, max_dims=1)
    assert xqda_from_covariances(cov, capped).w.shape[1] == 1
    # nothing clears an absurd threshold, so the floor keeps the top axis
    floored = xqda_from_covariances(cov, XqdaConfig(regularizer=0.0, eigen_threshold=100.0))
    assert floored.w.shape[1] == 1
    npt.assert_allclose(floored.eigenvalues, [9.0], atol=1e-10)
    npt.assert_allclose(np.abs(floored.w[:, 0]), [1.0, 0.0, 0.0], atol=1e-10)


def test_span_reduction_matches_direct_solution():
    # With more feature dimensions than samples, training restricts the
    # problem to the span of the data columns. Distances must match the
    # unrestricted solver because off-span directions are never retained.
    rng = np.random.default_rng(8)
    d, classes, per_view = 80, 5, 3
    labels = np.repeat(np.arange(classes), per_view)
    ds = CrossViewDataset(
        rng.standard_normal((d, len(labels))),
        rng.standard_normal((d, len(labels))),
        labels,
        labels,
    )
    assert d > 2 * len(labels)
    reduced = train_xqda(ds)  # takes the span path
    direct = xqda_from_covariances(compute_covariances_fast(ds))
    assert reduced.w.shape == direct.w.shape
    npt.assert_allclose(reduced.eigenvalues, direct.eigenvalues, rtol=1e-8)
    probes = rng.standard_normal((d, 7))
    gallery = rng.standard_normal((d, 9))
    a = pairwise_distances(reduced, probes, gallery)
    b = pairwise_distances(direct, probes, gallery)
    npt.assert_allclose(a, b, rtol=0, atol=1e-8 * np.abs(b).max())


def test_zero_padded_features_score_identically():
    rng = np.random.default_rng(9)
    ds = random_dataset(rng, d=4, classes=5, max_per_view=3)
    pad = lambda arr: np.vstack([arr, np.zeros((3, arr.shape[1]))])
    padded = CrossViewDataset(pad(ds.x), pad(ds.z), ds.labels_x, ds.labels_z)
    base = train_xqda(ds)
    wide = train_xqda(padded)
    probes = rng.standard_normal((4, 6))
    gallery = rng.standard_normal((4, 5))
    a = pairwise_distances(base, probes, gallery)
    b = pairwise_distances(wide, pad(probes), pad(gallery))
    npt.assert_allclose(a, b, rtol=0, atol=1e-8 * np.abs(a).max())


def test_distance_properties():
    rng = np.random.default_rng(10)
    ds = random_dataset(rng, d=5, classes=4, max_per_view=3)
    model = train_xqda(ds)
    x = rng.standard_normal(5)
    z = rng.standard_normal(5)
    assert distance(model, x, x) == 0.0
    assert distance(model, x, z) == distance(model, z, x)


def test_pairwise_matches_elementwise():
    rng = np.random.default_rng(11)
    ds = random_dataset(rng, d=6, classes=5, max_per_view=3)
    model = train_xqda(ds)
    probes = rng.standard_normal((6, 8))
    gallery = rng.standard_normal((6, 9))
    table = pairwise_distances(model, probes, gallery)
    scale = np.abs(table).max()
    for i in range(8):
        for j in range(9):
            expected = distance(model, probes[:, i], gallery[:, j])
            assert abs(table[i, j] - expected) <= 1e-10 * max(scale, 1.0)
    self_table = pairwise_distances(model, probes, probes)
    assert np.abs(np.diag(self_table)).max() <= 1e-12 * max(scale, 1.0)


def test_scores_may_be_negative():
    # Swapping the covariance roles makes the kernel negative along the
    # informative axis; scores are not a metric and may fall below zero.
    cov = CovariancePair(np.diag([5.0, 1.0]), np.diag([0.1, 1.0]), 10, 10)
    model = xqda_from_covariances(
        cov, XqdaConfig(regularizer=0.0, eigen_threshold=float("-inf"), max_dims=2)
    )
    # along the first axis the kernel is 1/5 - 1/0.1 = -9.8
    npt.assert_allclose(
        distance(model, np.array([1.0, 0.0]), np.array([0.0, 0.0])), -9.8, atol=1e-10
    )


def test_singular_intra_without_regularizer_raises():
    cov = CovariancePair(np.zeros((3, 3)), np.eye(3), 10, 10)
    with pytest.raises(NumericError, match="regularizer"):
        xqda_from_covariances(cov, XqdaConfig(regularizer=0.0))


def test_project_validates_dimension():
    rng = np.random.default_rng(12)
    model = train_xqda(random_dataset(rng, d=5))
    with pytest.raises(ValueError, match="dimension"):
        project(model, np.zeros(4))
    assert project(model, np.zeros((5, 3))).shape == (model.w.shape[1], 3)


def test_config_validation():
    with pytest.raises(ValueError):
        XqdaConfig(regularizer=-0.1)
    with pytest.raises(ValueError):
        XqdaConfig(max_dims=0)
