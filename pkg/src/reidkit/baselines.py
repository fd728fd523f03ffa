"""Baseline scorers to compare the learned metric against.

All scorers return (probes, gallery) matrices of dissimilarities, lower
meaning more alike, and are symmetric under swapping the probe and gallery
roles (up to transposition).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericError
from .xqda import CrossViewDataset, compute_covariances_fast, pairwise_quadratic


@dataclass(frozen=True)
class PcaModel:
    mean: np.ndarray
    basis: np.ndarray  # (d, p), orthonormal columns
    eigenvalues: np.ndarray  # descending


@dataclass(frozen=True)
class MetricModel:
    """A quadratic metric, optionally preceded by a PCA projection."""

    name: str
    pca: PcaModel | None
    kernel: np.ndarray
    regularizer: float


def pca_fit(samples: np.ndarray, p: int) -> PcaModel:
    """Top-p eigendecomposition of the mean-centered covariance.

    samples is (d, n). Computed through the thin SVD of the centered data,
    which yields the same orthonormal basis with eigenvalues in descending
    order without forming the d x d covariance.
    """
    if samples.ndim != 2:
        raise ValueError("samples must be 2-D (features by samples)")
    d, n = samples.shape
    if n < 2:
        raise ValueError("need at least two samples")
    if not 1 <= p <= min(d, n - 1):
        raise ValueError(f"p must lie in [1, {min(d, n - 1)}] for {d}x{n} data")
    mean = samples.mean(axis=1)
    centered = samples.astype(np.float64, copy=False) - mean[:, None]
    u, s, _ = np.linalg.svd(centered, full_matrices=False)
    return PcaModel(mean=mean, basis=u[:, :p], eigenvalues=(s[:p] ** 2) / (n - 1))


def pca_transform(model: PcaModel, vectors: np.ndarray) -> np.ndarray:
    """Project (d,) or (d, k) input onto the PCA basis after centering."""
    if vectors.shape[0] != model.mean.shape[0]:
        raise ValueError("feature dimension does not match the PCA model")
    centered = vectors - (model.mean[:, None] if vectors.ndim == 2 else model.mean)
    return model.basis.T @ centered


def _difference_covariances(ds: CrossViewDataset, pca_dims: int):
    joint = np.hstack([ds.x, ds.z]).astype(np.float64, copy=False)
    pca = pca_fit(joint, pca_dims)
    reduced = CrossViewDataset(
        pca_transform(pca, ds.x),
        pca_transform(pca, ds.z),
        ds.labels_x,
        ds.labels_z,
    )
    return pca, compute_covariances_fast(reduced)


def train_kissme(ds: CrossViewDataset, pca_dims: int = 100, reg: float = 0.001) -> MetricModel:
    """KISS metric: difference of inverse pair covariances in PCA space.

    Both covariances are regularized with the same diagonal term before
    inversion.
    """
    pca, cov = _difference_covariances(ds, pca_dims)
    eye = reg * np.eye(pca_dims)
    try:
        kernel = np.linalg.inv(cov.sigma_intra + eye) - np.linalg.inv(cov.sigma_extra + eye)
    except np.linalg.LinAlgError as exc:
        raise NumericError("pair covariance is singular even after regularization") from exc
    kernel = (kernel + kernel.T) / 2.0
    return MetricModel(name="kissme", pca=pca, kernel=kernel, regularizer=reg)


def train_mahalanobis_genuine(
    ds: CrossViewDataset, pca_dims: int = 100, reg: float = 0.001
) -> MetricModel:
    """Mahalanobis metric from genuine pairs only: inverse intrapersonal covariance."""
    pca, cov = _difference_covariances(ds, pca_dims)
    try:
        kernel = np.linalg.inv(cov.sigma_intra + reg * np.eye(pca_dims))
    except np.linalg.LinAlgError as exc:
        raise NumericError("intrapersonal covariance is singular even after regularization") from exc
    kernel = (kernel + kernel.T) / 2.0
    return MetricModel(name="mahalanobis", pca=pca, kernel=kernel, regularizer=reg)


def metric_scores(model: MetricModel, probes: np.ndarray, gallery: np.ndarray) -> np.ndarray:
    """Pairwise quadratic-form scores under a trained baseline metric."""
    p = pca_transform(model.pca, probes) if model.pca is not None else probes
    g = pca_transform(model.pca, gallery) if model.pca is not None else gallery
    return pairwise_quadratic(model.kernel, p, g)


def euclidean_scores(probes: np.ndarray, gallery: np.ndarray) -> np.ndarray:
    """Squared Euclidean distances between probe and gallery columns."""
    if probes.shape[0] != gallery.shape[0]:
        raise ValueError("probe and gallery feature dimensions differ")
    qa = np.einsum("ij,ij->j", probes, probes)
    qb = np.einsum("ij,ij->j", gallery, gallery)
    return qa[:, None] + qb[None, :] - 2.0 * (probes.T @ gallery)


def cosine_scores(probes: np.ndarray, gallery: np.ndarray) -> np.ndarray:
    """One minus cosine similarity, so lower still means more alike."""
    if probes.shape[0] != gallery.shape[0]:
        raise ValueError("probe and gallery feature dimensions differ")
    pn = np.linalg.norm(probes, axis=0)
    gn = np.linalg.norm(gallery, axis=0)
    pn = np.where(pn == 0.0, 1.0, pn)
    gn = np.where(gn == 0.0, 1.0, gn)
    return 1.0 - (probes / pn).T @ (gallery / gn)
