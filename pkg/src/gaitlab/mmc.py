"""Maximum-margin discriminant features: scatter matrices and transform learning.

The learning objective is the margin criterion tr(Sb - Sw), the total
between-class scatter minus the total within-class scatter.  Two routes
produce the feature matrix:

* the direct route eigendecomposes Sb - Sw and keeps the eigenvectors with
  positive eigenvalues (orthonormal columns);
* the SVD route simultaneously diagonalizes the between and total scatter
  through two thin SVDs, never forming a DxD matrix, and keeps the basis
  columns whose between-class diagonal entry reaches 1/2.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .dataset import LabeledDataset
from .exceptions import DegenerateDataError

ROUTE_DIRECT = "direct"
ROUTE_MMC_SVD = "mmc-svd"


@dataclass(frozen=True, eq=False)
class ScatterSet:
    """Between/within/total scatter of a labeled dataset, plus the means.

    `total` is accumulated independently of `between + within` so the
    decomposition identity stays a checkable property, not a tautology.
    """

    between: np.ndarray  # (D, D)
    within: np.ndarray  # (D, D)
    total: np.ndarray  # (D, D)
    mean: np.ndarray  # (D,)
    class_means: np.ndarray  # (C, D)
    class_sizes: np.ndarray  # (C,)
    classes: tuple


@dataclass(frozen=True, eq=False)
class MmcDecomposition:
    """Intermediate factors of the SVD route, kept for auditing.

    `basis` simultaneously diagonalizes the scatters: basis.T @ St @ basis is
    the identity on the retained rank (with St the 1/N-weighted total scatter
    of `centered_samples`) and basis.T @ Sb @ basis equals `between_diagonal`.
    """

    centered_samples: np.ndarray  # (D, N): columns (g_n - mean) / sqrt(N)
    centered_means: np.ndarray  # (D, C): columns (class mean - mean)
    total_eigenvectors: np.ndarray  # (D, r)
    total_eigenvalues: np.ndarray  # (r,), decreasing, positive
    whitened_between_eigenvectors: np.ndarray  # (r, r)
    basis: np.ndarray  # (D, r)
    between_diagonal: np.ndarray  # (r, r)

    @property
    def rank(self) -> int:
        return self.total_eigenvalues.shape[0]


@dataclass(frozen=True, eq=False)
class FeatureTransform:
    """Learned linear feature map: columns of `matrix` span the feature space."""

    matrix: np.ndarray  # (D, D_hat)
    eigenvalues: np.ndarray  # (D_hat,) retention scores of the kept columns
    route: str
    n_classes: int
    n_samples: int
    n_joints: int = 0
    n_frames: int = 0
    seed: int = 0

    @property
    def n_features(self) -> int:
        return self.matrix.shape[0]

    @property
    def n_components(self) -> int:
        return self.matrix.shape[1]


def _symmetrize(m: np.ndarray) -> np.ndarray:
    return (m + m.T) / 2.0


def scatter_matrices(data: LabeledDataset) -> ScatterSet:
    """Between-, within-, and total-scatter matrices of a labeled dataset.

    Between-class scatter sums (m_c - m)(m_c - m)^T over classes; within- and
    total-scatter average each class's contribution by its size.
    """
    if data.n_samples == 0:
        raise ValueError("empty dataset")
    x = data.samples
    d = data.n_features
    mean = x.mean(axis=0)
    between = np.zeros((d, d))
    within = np.zeros((d, d))
    total = np.zeros((d, d))
    class_means = []
    for label in data.classes:
        rows = x[data.class_indices[label]]
        n_c = rows.shape[0]
        m_c = rows.mean(axis=0)
        class_means.append(m_c)
        gap = m_c - mean
        between += np.outer(gap, gap)
        centered = rows - m_c
        within += centered.T @ centered / n_c
        offset = rows - mean
        total += offset.T @ offset / n_c
    return ScatterSet(between=_symmetrize(between), within=_symmetrize(within),
                      total=_symmetrize(total), mean=mean,
                      class_means=np.array(class_means),
                      class_sizes=data.class_sizes(), classes=data.classes)


def mmc_pairwise(data: LabeledDataset) -> float:
    """Margin criterion as half the double sum of pairwise class margins.

    Each ordered class pair (c, c') contributes the squared distance of the
    class means minus the traces of both class scatters.
    """
    if data.n_classes < 2:
        raise ValueError("at least 2 identity classes required")
    x = data.samples
    means = []
    traces = []
    for label in data.classes:
        rows = x[data.class_indices[label]]
        m_c = rows.mean(axis=0)
        means.append(m_c)
        centered = rows - m_c
        traces.append(float((centered * centered).sum() / rows.shape[0]))
    total = 0.0
    c = len(means)
    for i in range(c):
        for j in range(c):
            gap = means[i] - means[j]
            total += float(gap @ gap) - (traces[i] + traces[j])
    return total / 2.0


def mmc_trace(scatter: ScatterSet) -> float:
    """Margin criterion in trace form: tr(Sb) - tr(Sw)."""
    return float(np.trace(scatter.between) - np.trace(scatter.within))


def criterion_in_feature_space(transform, scatter: ScatterSet) -> float:
    """Margin criterion after projection: tr(phi^T (Sb - Sw) phi).

    `transform` may be a FeatureTransform or a plain (D, D_hat) matrix.
    """
    phi = np.asarray(getattr(transform, "matrix", transform), dtype=np.float64)
    if phi.ndim == 1:
        phi = phi[:, None]
    if phi.shape[0] != scatter.between.shape[0]:
        raise ValueError(
            f"transform has {phi.shape[0]} rows, scatter is "
            f"{scatter.between.shape[0]}-dimensional")
    return float(np.trace(phi.T @ (scatter.between - scatter.within) @ phi))


def _canonical_signs(matrix: np.ndarray) -> np.ndarray:
    """Per-column sign flips making the largest-magnitude entry positive."""
    if matrix.shape[1] == 0:
        return np.ones(0)
    idx = np.argmax(np.abs(matrix), axis=0)
    signs = np.sign(matrix[idx, np.arange(matrix.shape[1])])
    signs[signs == 0] = 1.0
    return signs


def learn_transform_direct(data: LabeledDataset) -> FeatureTransform:
    """Feature matrix from the dense eigendecomposition of Sb - Sw.

    Keeps the orthonormal eigenvectors of the positive eigenvalues, capped at
    C - 1 columns; if no eigenvalue is positive the single largest is kept so
    a transform is always produced.
    """
    if data.n_classes < 2:
        raise ValueError("at least 2 identity classes required")
    scatter = scatter_matrices(data)
    m = _symmetrize(scatter.between - scatter.within)
    eigvals, eigvecs = np.linalg.eigh(m)
    eigvals = eigvals[::-1]
    eigvecs = eigvecs[:, ::-1]
    tol = 1e-12 * max(np.abs(eigvals).max(), np.finfo(float).tiny)
    keep = min(int(np.sum(eigvals > tol)), data.n_classes - 1)
    if keep == 0:
        keep = 1
    matrix = eigvecs[:, :keep] * _canonical_signs(eigvecs[:, :keep])
    return FeatureTransform(matrix=matrix, eigenvalues=eigvals[:keep].copy(),
                            route=ROUTE_DIRECT, n_classes=data.n_classes,
                            n_samples=data.n_samples, n_joints=data.n_joints,
                            n_frames=data.n_frames)


def learn_transform_mmc(data: LabeledDataset,
                        rank_tol: float = 1e-12) -> tuple[FeatureTransform, MmcDecomposition]:
    """Feature matrix via the two-step SVD simultaneous diagonalization.

    Builds the centered sample factor X (total scatter = X X^T) and the
    centered class-mean factor Y (between scatter = Y Y^T); the SVD of X
    whitens the total scatter, the SVD of the whitened Y diagonalizes the
    between scatter within it.  Columns whose between-class diagonal entry
    reaches 1/2 form the transform; if none qualifies the single best column
    is kept.  Singular values at or below `rank_tol` times the largest are
    treated as zero.
    """
    if data.n_classes < 2:
        raise ValueError("at least 2 identity classes required")
    x = data.samples
    n, d = x.shape
    mean = x.mean(axis=0)
    centered_samples = (x - mean).T / np.sqrt(n)  # (D, N)
    class_means = np.array([x[data.class_indices[c]].mean(axis=0)
                            for c in data.classes])
    centered_means = (class_means - mean).T  # (D, C)

    u, s, _ = np.linalg.svd(centered_samples, full_matrices=False)
    if s.size == 0 or s[0] <= 0.0:
        raise DegenerateDataError("total scatter has rank 0 (all samples identical)")
    rank = int(np.sum(s > rank_tol * s[0]))
    total_eigenvectors = u[:, :rank] * _canonical_signs(u[:, :rank])
    total_eigenvalues = s[:rank] ** 2

    inv_sqrt = 1.0 / np.sqrt(total_eigenvalues)
    whitened_means = inv_sqrt[:, None] * (total_eigenvectors.T @ centered_means)
    xi, _, _ = np.linalg.svd(whitened_means, full_matrices=True)  # (r, r)
    basis = (total_eigenvectors * inv_sqrt[None, :]) @ xi  # (D, r)
    flips = _canonical_signs(basis)
    basis = basis * flips
    xi = xi * flips

    projected_means = basis.T @ centered_means  # (r, C)
    between_diagonal = projected_means @ projected_means.T  # = basis^T Sb basis
    scores = np.diag(between_diagonal).copy()

    kept = np.flatnonzero(scores >= 0.5)
    if kept.size == 0:
        kept = np.array([int(np.argmax(scores))])
    if kept.size > data.n_classes - 1:
        kept = kept[np.argsort(scores[kept])[::-1][:data.n_classes - 1]]
        kept = np.sort(kept)

    decomposition = MmcDecomposition(
        centered_samples=centered_samples, centered_means=centered_means,
        total_eigenvectors=total_eigenvectors, total_eigenvalues=total_eigenvalues,
        whitened_between_eigenvectors=xi, basis=basis,
        between_diagonal=between_diagonal)
    transform = FeatureTransform(
        matrix=basis[:, kept].copy(), eigenvalues=scores[kept],
        route=ROUTE_MMC_SVD, n_classes=data.n_classes, n_samples=n,
        n_joints=data.n_joints, n_frames=data.n_frames)
    return transform, decomposition


def apply_transform(transform: FeatureTransform, sample) -> np.ndarray:
    """Project a sample (or row matrix of samples) into the feature space."""
    arr = np.asarray(sample, dtype=np.float64)
    if arr.shape[-1] != transform.n_features:
        raise ValueError(
            f"sample has dimension {arr.shape[-1]}, transform expects "
            f"{transform.n_features}")
    return arr @ transform.matrix


def learn_transform(data: LabeledDataset, route: str = ROUTE_MMC_SVD) -> FeatureTransform:
    """Learn a transform by name; convenience wrapper over the two routes."""
    if route == ROUTE_MMC_SVD:
        return learn_transform_mmc(data)[0]
    if route == ROUTE_DIRECT:
        return learn_transform_direct(data)
    raise ValueError(f"unknown route {route!r}")


class MaximumMarginProjection(TransformerMixin, BaseEstimator):
    """Supervised linear projection maximizing between- minus within-class scatter.

    Parameters
    ----------
    route : "mmc-svd" or "direct"
        "mmc-svd" runs the two-step SVD simultaneous diagonalization and
        retains columns with between-class diagonal entries >= 1/2; "direct"
        eigendecomposes Sb - Sw and retains positive eigenvalues.
    rank_tol : float
        Relative singular-value cutoff for the SVD route.
    """

    def __init__(self, route=ROUTE_MMC_SVD, rank_tol=1e-12):
        self.route = route
        self.rank_tol = rank_tol

    def fit(self, X, y):
        X, y = check_X_y(X, y)
        data = LabeledDataset(samples=X, labels=tuple(y))
        if self.route == ROUTE_MMC_SVD:
            transform, decomposition = learn_transform_mmc(data, rank_tol=self.rank_tol)
            self.decomposition_ = decomposition
        elif self.route == ROUTE_DIRECT:
            transform = learn_transform_direct(data)
        else:
            raise ValueError(f"unknown route {self.route!r}")
        self.feature_transform_ = transform
        self.components_ = transform.matrix.T
        self.eigenvalues_ = transform.eigenvalues
        self.n_components_ = transform.n_components
        self.classes_ = np.unique(y)
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "components_")
        X = check_array(X)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(
                f"X has {X.shape[1]} features, expected {self.n_features_in_}")
        return X @ self.components_.T
