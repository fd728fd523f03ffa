"""Cross-view quadratic discriminant metric learning.

Given samples of the same identities seen from two views, the differences
of genuine cross-view pairs (same identity) and impostor pairs (different
identities) are modeled as two zero-mean Gaussians. The learner solves the
generalized eigenproblem sigma_extra w = lambda sigma_intra w to find a
subspace where impostor differences spread widest relative to genuine
ones, then scores pairs with the quadratic form
(x - z)^T W (S_I'^-1 - S_E'^-1) W^T (x - z) built from the projected
covariances.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cholesky, solve_triangular

from .errors import NumericError


@dataclass(frozen=True)
class CrossViewDataset:
    """Feature columns per view plus identity labels.

    x is (d, n), z is (d, m); labels_x and labels_z give the identity of
    each column. Every identity must appear in both views and at least two
    identities are required, otherwise impostor pairs do not exist.
    """

    x: np.ndarray
    z: np.ndarray
    labels_x: np.ndarray
    labels_z: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "labels_x", np.asarray(self.labels_x))
        object.__setattr__(self, "labels_z", np.asarray(self.labels_z))
        if self.x.ndim != 2 or self.z.ndim != 2:
            raise ValueError("feature matrices must be 2-D (features by samples)")
        if self.x.shape[0] != self.z.shape[0]:
            raise ValueError("views disagree in feature dimension")
        if self.labels_x.shape != (self.x.shape[1],) or self.labels_z.shape != (self.z.shape[1],):
            raise ValueError("label counts must match sample counts")
        classes_x = np.unique(self.labels_x)
        classes_z = np.unique(self.labels_z)
        if len(classes_x) != len(classes_z) or np.any(classes_x != classes_z):
            raise ValueError("every identity must appear in both views")
        if len(classes_x) < 2:
            raise ValueError("need at least two identities")


@dataclass(frozen=True)
class CovariancePair:
    sigma_intra: np.ndarray
    sigma_extra: np.ndarray
    n_intra: int
    n_extra: int


@dataclass(frozen=True)
class XqdaConfig:
    regularizer: float = 0.001
    max_dims: int | None = None
    eigen_threshold: float = 1.0

    def __post_init__(self) -> None:
        if self.regularizer < 0:
            raise ValueError("regularizer must be non-negative")
        if self.max_dims is not None and self.max_dims < 1:
            raise ValueError("max_dims must be at least 1")


@dataclass(frozen=True)
class XqdaModel:
    """Learned projection (d, r), distance kernel (r, r), and eigenvalues."""

    w: np.ndarray
    m: np.ndarray
    eigenvalues: np.ndarray
    regularizer: float


def compute_covariances_fast(ds: CrossViewDataset) -> CovariancePair:
    """Pair-difference covariances without enumerating pairs.

    The sum over genuine pairs of (x_i - z_j)(x_i - z_j)^T expands into
    per-class second moments: columns of x scaled by sqrt(m_k) (the other
    view's class count), columns of z scaled by sqrt(n_k), minus the cross
    products of per-class column sums. The impostor sum is the all-pairs
    sum minus the genuine one, with global column sums in the cross term.
    Both covariances are zero-mean by definition (no mean subtraction) and
    are symmetrized before returning.
    """
    x = ds.x.astype(np.float64, copy=False)
    z = ds.z.astype(np.float64, copy=False)
    d, n = x.shape
    m = z.shape[1]
    classes, xi = np.unique(ds.labels_x, return_inverse=True)
    _, zi = np.unique(ds.labels_z, return_inverse=True)
    c = len(classes)
    n_k = np.bincount(xi, minlength=c).astype(np.float64)
    m_k = np.bincount(zi, minlength=c).astype(np.float64)
    n_intra = int((n_k * m_k).sum())
    n_extra = n * m - n_intra
    if n_extra <= 0:
        raise ValueError("no impostor pairs: need at least two identities")

    x_scaled = x * np.sqrt(m_k)[xi]
    z_scaled = z * np.sqrt(n_k)[zi]
    class_sum_x = np.zeros((c, d))
    class_sum_z = np.zeros((c, d))
    np.add.at(class_sum_x, xi, x.T)
    np.add.at(class_sum_z, zi, z.T)
    cross = class_sum_x.T @ class_sum_z
    intra_sum = x_scaled @ x_scaled.T + z_scaled @ z_scaled.T - cross - cross.T

    sum_x = x.sum(axis=1)
    sum_z = z.sum(axis=1)
    outer = np.outer(sum_x, sum_z)
    extra_sum = m * (x @ x.T) + n * (z @ z.T) - outer - outer.T - intra_sum

    sigma_intra = intra_sum / n_intra
    sigma_extra = extra_sum / n_extra
    return CovariancePair(
        sigma_intra=(sigma_intra + sigma_intra.T) / 2.0,
        sigma_extra=(sigma_extra + sigma_extra.T) / 2.0,
        n_intra=n_intra,
        n_extra=n_extra,
    )


def compute_covariances_naive(ds: CrossViewDataset, max_pairs: int = 1_000_000) -> CovariancePair:
    """Reference covariances by explicit pair enumeration.

    Quadratic in the sample counts; refuses more than max_pairs pairs. Used
    to cross-check compute_covariances_fast, so it deliberately shares no
    algebra with it.
    """
    x = ds.x.astype(np.float64)
    z = ds.z.astype(np.float64)
    d, n = x.shape
    m = z.shape[1]
    if n * m > max_pairs:
        raise ValueError(f"{n * m} pairs exceed the naive limit of {max_pairs}")
    acc_intra = np.zeros((d, d))
    acc_extra = np.zeros((d, d))
    n_intra = 0
    for i in range(n):
        xi = x[:, i]
        same = ds.labels_x[i]
        for j in range(m):
            diff = xi - z[:, j]
            outer = np.outer(diff, diff)
            if same == ds.labels_z[j]:
                acc_intra += outer
                n_intra += 1
            else:
                acc_extra += outer
    n_extra = n * m - n_intra
    if n_extra <= 0:
        raise ValueError("no impostor pairs: need at least two identities")
    return CovariancePair(acc_intra / n_intra, acc_extra / n_extra, n_intra, n_extra)


def xqda_from_covariances(cov: CovariancePair, cfg: XqdaConfig | None = None) -> XqdaModel:
    """Solve the generalized eigenproblem and assemble the model.

    sigma_intra is regularized with cfg.regularizer on the diagonal, then
    sigma_extra w = lambda (sigma_intra + reg I) w is reduced via the
    Cholesky factor of the regularized matrix to an ordinary symmetric
    eigenproblem. Eigenvalues come out strictly descending; dimensions with
    lambda > eigen_threshold are retained, capped at max_dims, with at
    least the leading one kept. Columns of W are unit-normalized.
    """
    if cfg is None:
        cfg = XqdaConfig()
    d = cov.sigma_intra.shape[0]
    sigma_intra = cov.sigma_intra + cfg.regularizer * np.eye(d)
    try:
        chol = cholesky(sigma_intra, lower=True)
    except np.linalg.LinAlgError as exc:
        raise NumericError(
            "intrapersonal covariance is not positive definite; "
            "increase the regularizer (0.001 is a reasonable default)"
        ) from exc

    half = solve_triangular(chol, cov.sigma_extra, lower=True)
    whitened = solve_triangular(chol, half.T, lower=True)
    whitened = (whitened + whitened.T) / 2.0
    evals, evecs = np.linalg.eigh(whitened)
    evals = evals[::-1]
    evecs = evecs[:, ::-1]

    r = int(np.count_nonzero(evals > cfg.eigen_threshold))
    if cfg.max_dims is not None:
        r = min(r, cfg.max_dims)
    r = max(r, 1)

    w = solve_triangular(chol, evecs[:, :r], lower=True, trans="T")
    w = w / np.linalg.norm(w, axis=0)

    proj_intra = w.T @ sigma_intra @ w
    proj_extra = w.T @ cov.sigma_extra @ w
    try:
        kernel = np.linalg.inv(proj_intra) - np.linalg.inv(proj_extra)
    except np.linalg.LinAlgError as exc:
        raise NumericError("projected covariance is singular; retain fewer dimensions") from exc
    kernel = (kernel + kernel.T) / 2.0
    return XqdaModel(w=w, m=kernel, eigenvalues=evals[:r].copy(), regularizer=cfg.regularizer)


def train_xqda(ds: CrossViewDataset, cfg: XqdaConfig | None = None) -> XqdaModel:
    """Learn an XQDA model from a cross-view dataset.

    When the feature dimension exceeds the total sample count, the problem
    is first restricted to an orthonormal basis of the training columns.
    Directions orthogonal to that span have zero impostor spread and are
    never retained, so the restriction is exact, and it keeps the
    covariance work at sample-count scale.
    """
    if cfg is None:
        cfg = XqdaConfig()
    d = ds.x.shape[0]
    total = ds.x.shape[1] + ds.z.shape[1]
    if d > total:
        stacked = np.hstack([ds.x, ds.z]).astype(np.float64, copy=False)
        basis, _ = np.linalg.qr(stacked)
        reduced = CrossViewDataset(
            basis.T @ stacked[:, : ds.x.shape[1]],
            basis.T @ stacked[:, ds.x.shape[1] :],
            ds.labels_x,
            ds.labels_z,
        )
        inner = xqda_from_covariances(compute_covariances_fast(reduced), cfg)
        return XqdaModel(
            w=basis @ inner.w,
            m=inner.m,
            eigenvalues=inner.eigenvalues,
            regularizer=inner.regularizer,
        )
    return xqda_from_covariances(compute_covariances_fast(ds), cfg)


def project(model: XqdaModel, vectors: np.ndarray) -> np.ndarray:
    """Map a (d,) vector or (d, k) matrix into the learned subspace."""
    if vectors.shape[0] != model.w.shape[0]:
        raise ValueError(
            f"expected feature dimension {model.w.shape[0]}, got {vectors.shape[0]}"
        )
    return model.w.T @ vectors


def distance(model: XqdaModel, x: np.ndarray, z: np.ndarray) -> float:
    """Score one pair; lower means more alike. May be negative."""
    p = project(model, x - z)
    return float(p @ model.m @ p)


def pairwise_quadratic(kernel: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """All-pairs quadratic form (a_i - b_j)^T kernel (a_i - b_j).

    a is (r, p), b is (r, g); the result is (p, g). Expanding the square
    avoids materializing the p*g difference vectors.
    """
    ka = kernel @ a
    kb = kernel @ b
    qa = np.einsum("ij,ij->j", a, ka)
    qb = np.einsum("ij,ij->j", b, kb)
    return qa[:, None] + qb[None, :] - 2.0 * (a.T @ kb)


def pairwise_distances(model: XqdaModel, probes: np.ndarray, gallery: np.ndarray) -> np.ndarray:
    """Score matrix between probe columns and gallery columns."""
    return pairwise_quadratic(model.m, project(model, probes), project(model, gallery))
