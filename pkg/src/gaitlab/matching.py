"""Mahalanobis metric over gait templates and nearest-template classification."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .exceptions import DegenerateDataError
from .validation import as_sample_matrix, check_square

_EIG_FLOOR = 1e-10  # smallest-eigenvalue-to-trace ratio that triggers the ridge


@dataclass(frozen=True, eq=False)
class MetricModel:
    """Inverse scatter matrix defining a Mahalanobis distance."""

    inverse: np.ndarray  # (D_hat, D_hat), symmetric positive definite
    source: str = ""
    ridge: float = 0.0

    def __post_init__(self):
        arr = check_square(self.inverse, "inverse")
        object.__setattr__(self, "inverse", arr)

    @property
    def n_features(self) -> int:
        return self.inverse.shape[0]


@dataclass(frozen=True, eq=False)
class TemplateGallery:
    """Labeled templates grouped by identity, with per-class centroids."""

    templates: np.ndarray  # (N, D_hat)
    labels: tuple

    def __post_init__(self):
        arr = as_sample_matrix(self.templates, "templates")
        object.__setattr__(self, "templates", arr)
        object.__setattr__(self, "labels", tuple(self.labels))
        if len(self.labels) != arr.shape[0]:
            raise ValueError("template/label count mismatch")
        if arr.shape[0] == 0:
            raise ValueError("empty gallery")
        classes = tuple(dict.fromkeys(self.labels))
        indices = {c: np.flatnonzero([lab == c for lab in self.labels])
                   for c in classes}
        object.__setattr__(self, "classes", classes)
        object.__setattr__(self, "class_indices", indices)
        object.__setattr__(self, "centroids",
                           np.array([arr[indices[c]].mean(axis=0) for c in classes]))


def fit_metric(templates, ridge: float = 1e-8, labels=None,
               source: str = "") -> MetricModel:
    """Fit the Mahalanobis metric from a template set.

    Without labels the scatter is the plain covariance about the mean
    (1/N-weighted).  With labels each class contributes its deviations from
    the overall mean averaged by class size.  When the smallest eigenvalue
    falls at or below 1e-10 of the trace, ridge * (trace / D) is added to the
    diagonal (falling back to ridge itself for an all-zero scatter).
    """
    arr = as_sample_matrix(templates, "templates")
    n, d = arr.shape
    if n < 2:
        raise ValueError("at least 2 templates required to fit a metric")
    if ridge < 0:
        raise ValueError("ridge must be >= 0")
    mean = arr.mean(axis=0)
    centered = arr - mean
    if labels is None:
        scatter = centered.T @ centered / n
    else:
        labels = tuple(labels)
        if len(labels) != n:
            raise ValueError("template/label count mismatch")
        scatter = np.zeros((d, d))
        for label in dict.fromkeys(labels):
            rows = centered[np.flatnonzero([lab == label for lab in labels])]
            scatter += rows.T @ rows / rows.shape[0]
    scatter = (scatter + scatter.T) / 2.0
    trace = float(np.trace(scatter))
    eigvals = np.linalg.eigvalsh(scatter)
    if eigvals[0] <= _EIG_FLOOR * trace:
        scale = trace / d if trace > 0 else 1.0
        scatter = scatter + ridge * scale * np.eye(d)
        eigvals = np.linalg.eigvalsh(scatter)
    if eigvals[0] <= 0:
        raise DegenerateDataError(
            "template scatter is singular; use a positive ridge")
    inverse = np.linalg.inv(scatter)
    return MetricModel(inverse=(inverse + inverse.T) / 2.0, source=source, ridge=ridge)


def mahalanobis(metric: MetricModel, a, b) -> float:
    """Mahalanobis distance sqrt((a-b)^T inverse (a-b)) between two templates."""
    av = np.asarray(a, dtype=np.float64).ravel()
    bv = np.asarray(b, dtype=np.float64).ravel()
    if av.shape[0] != bv.shape[0] or av.shape[0] != metric.n_features:
        raise ValueError("template dimensions do not match the metric")
    diff = av - bv
    return float(np.sqrt(max(diff @ metric.inverse @ diff, 0.0)))


def mahalanobis_squared_many(metric: MetricModel, probe, templates) -> np.ndarray:
    """Squared Mahalanobis distances from one probe to each template row."""
    diffs = np.asarray(templates, dtype=np.float64) - np.asarray(probe, dtype=np.float64)
    return np.einsum("nd,de,ne->n", diffs, metric.inverse, diffs)


def classify(gallery: TemplateGallery, probe, metric: MetricModel):
    """Winner-takes-all label: the label of the nearest gallery template.

    Ties go to the template with the lowest gallery insertion index.
    """
    probe = np.asarray(probe, dtype=np.float64).ravel()
    if probe.shape[0] != gallery.templates.shape[1]:
        raise ValueError("probe dimension does not match the gallery")
    distances = mahalanobis_squared_many(metric, probe, gallery.templates)
    return gallery.labels[int(np.argmin(distances))]


class MahalanobisNearestNeighbor(ClassifierMixin, BaseEstimator):
    """1-nearest-neighbor classifier under a Mahalanobis metric.

    fit() stores the gallery and fits the metric on its templates (grouped by
    label); predict() assigns each probe the label of its closest gallery
    template.  Pass a prefitted MetricModel via `metric` to override.
    """

    def __init__(self, ridge=1e-8, metric=None):
        self.ridge = ridge
        self.metric = metric

    def fit(self, X, y):
        X, y = check_X_y(X, y)
        self.gallery_ = TemplateGallery(templates=X, labels=tuple(y))
        if self.metric is not None:
            self.metric_ = self.metric
        else:
            self.metric_ = fit_metric(X, ridge=self.ridge, labels=tuple(y),
                                      source="gallery")
        self.classes_ = np.unique(y)
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X):
        check_is_fitted(self, "gallery_")
        X = check_array(X)
        return np.array([classify(self.gallery_, row, self.metric_) for row in X])
