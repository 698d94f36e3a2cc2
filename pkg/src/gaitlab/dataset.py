"""Labeled gait-sample datasets: flat coordinate vectors with identity labels."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .validation import as_sample_matrix


@dataclass(frozen=True, eq=False)
class LabeledDataset:
    """N gait samples of dimension D with one identity label per sample.

    `n_joints`/`n_frames` record the (J, T) structure of the sample vectors
    (D = 3*J*T); both are 0 for raw, algebra-only data.
    """

    samples: np.ndarray  # (N, D)
    labels: tuple
    n_joints: int = 0
    n_frames: int = 0

    def __post_init__(self):
        arr = as_sample_matrix(self.samples)
        object.__setattr__(self, "samples", arr)
        object.__setattr__(self, "labels", tuple(self.labels))
        if len(self.labels) != arr.shape[0]:
            raise ValueError(
                f"{arr.shape[0]} samples but {len(self.labels)} labels")
        for lab in self.labels:
            if isinstance(lab, str) and not lab:
                raise ValueError("empty string label")
        if self.n_joints and self.n_frames:
            expected = 3 * self.n_joints * self.n_frames
            if arr.shape[1] != expected:
                raise ValueError(
                    f"D={arr.shape[1]} inconsistent with 3*J*T={expected}")

    @property
    def n_samples(self) -> int:
        return self.samples.shape[0]

    @property
    def n_features(self) -> int:
        return self.samples.shape[1]

    @cached_property
    def classes(self) -> tuple:
        """Distinct labels in order of first appearance."""
        return tuple(dict.fromkeys(self.labels))

    @cached_property
    def class_indices(self) -> dict:
        """Label -> sorted array of row indices."""
        out = {c: [] for c in self.classes}
        for i, lab in enumerate(self.labels):
            out[lab].append(i)
        return {c: np.array(rows, dtype=int) for c, rows in out.items()}

    @property
    def n_classes(self) -> int:
        return len(self.classes)

    def class_sizes(self) -> np.ndarray:
        return np.array([len(self.class_indices[c]) for c in self.classes], dtype=int)

    def subset(self, indices) -> "LabeledDataset":
        """New dataset restricted to the given row indices (order preserved)."""
        idx = np.asarray(indices, dtype=int)
        return LabeledDataset(samples=self.samples[idx],
                              labels=tuple(self.labels[i] for i in idx),
                              n_joints=self.n_joints, n_frames=self.n_frames)
