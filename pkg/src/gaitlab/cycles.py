"""Gait-cycle segmentation by DTW and assembly of flat coordinate samples."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .asfamc import MotionSequence
from .validation import as_vector


@dataclass(frozen=True, eq=False)
class JointTrack:
    """Joint positions over time, shaped (T, J, 3)."""

    positions: np.ndarray
    frame_rate: float = 120.0

    def __post_init__(self):
        arr = np.asarray(self.positions, dtype=np.float64)
        if arr.ndim != 3 or arr.shape[2] != 3 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError(f"positions must be (T, J, 3), got {arr.shape}")
        object.__setattr__(self, "positions", arr)

    @property
    def n_frames(self) -> int:
        return self.positions.shape[0]

    @property
    def n_joints(self) -> int:
        return self.positions.shape[1]


@dataclass(frozen=True, eq=False)
class CycleDetectionConfig:
    """Exemplar-matching parameters for cycle detection.

    The exemplar is the rotation-channel sequence of one clean cycle; a
    candidate window is accepted when its DTW distance to the exemplar stays
    within the threshold.
    """

    exemplar: np.ndarray  # (L, K) rotation features of one clean cycle
    threshold: float
    min_length: int
    max_length: int
    stride: int = 1

    def __post_init__(self):
        arr = np.asarray(self.exemplar, dtype=np.float64)
        if arr.ndim == 1:
            arr = arr[:, None]
        if arr.ndim != 2 or arr.shape[0] == 0:
            raise ValueError("exemplar must be a non-empty sequence")
        object.__setattr__(self, "exemplar", arr)
        if not (0 < self.min_length <= self.max_length):
            raise ValueError("window bounds must satisfy 0 < min <= max")
        if not self.threshold > 0:
            raise ValueError("threshold must be positive")
        if self.stride < 1:
            raise ValueError("stride must be >= 1")


def dtw_distance(a, b, cost=None) -> float:
    """Dynamic time warping distance between two sequences.

    Classic dynamic programming with steps (1,0), (0,1), (1,1) and no warping
    window; returns the total accumulated cost along the optimal path.  The
    default local cost is the Euclidean distance between elements.
    """
    first = np.asarray(a, dtype=np.float64)
    second = np.asarray(b, dtype=np.float64)
    if first.ndim == 1:
        first = first[:, None]
    if second.ndim == 1:
        second = second[:, None]
    if first.shape[0] == 0 or second.shape[0] == 0:
        raise ValueError("dtw_distance requires non-empty sequences")
    if cost is None:
        diffs = first[:, None, :] - second[None, :, :]
        local = np.sqrt((diffs * diffs).sum(axis=2))
    else:
        local = np.array([[cost(x, y) for y in b] for x in a], dtype=np.float64)
    n, m = local.shape
    acc = np.full((n + 1, m + 1), np.inf)
    acc[0, 0] = 0.0
    for i in range(n):
        for j in range(m):
            acc[i + 1, j + 1] = local[i, j] + min(acc[i, j], acc[i, j + 1], acc[i + 1, j])
    return float(acc[n, m])


def rotation_features(seq: MotionSequence) -> np.ndarray:
    """Per-frame rotation channels (root rotation then bone dofs), shape (T, K)."""
    rows = []
    for frame in seq.frames:
        vals = list(frame.root_rotation)
        for bone in seq.skeleton.bones:
            if bone.dof:
                vals.extend(frame.bone_values[bone.name])
        rows.append(vals)
    return np.array(rows, dtype=np.float64)


def detect_gait_cycle_ranges(seq: MotionSequence, cfg: CycleDetectionConfig) -> list[tuple[int, int]]:
    """Frame ranges [start, stop) of accepted cycles, in temporal order.

    Scans start frames in order; at each start the candidate length with the
    smallest DTW distance to the exemplar wins, and is accepted when that
    distance stays within the threshold.  Accepted cycles never overlap: the
    scan resumes after each accepted cycle.
    """
    feats = rotation_features(seq)
    n = feats.shape[0]
    ranges: list[tuple[int, int]] = []
    start = 0
    while start + cfg.min_length <= n:
        best_len = None
        best_dist = math.inf
        for length in range(cfg.min_length, min(cfg.max_length, n - start) + 1):
            d = dtw_distance(feats[start:start + length], cfg.exemplar)
            if d < best_dist:
                best_dist = d
                best_len = length
        if best_len is not None and best_dist <= cfg.threshold:
            ranges.append((start, start + best_len))
            start += best_len
        else:
            start += cfg.stride
    return ranges


def detect_gait_cycles(seq: MotionSequence, cfg: CycleDetectionConfig) -> list[MotionSequence]:
    """Accepted gait cycles as sub-sequences of `seq` (may be empty)."""
    return [replace(seq, frames=seq.frames[a:b])
            for a, b in detect_gait_cycle_ranges(seq, cfg)]


def resample_to_length(track: JointTrack, n_frames: int) -> JointTrack:
    """Linearly resample a track to `n_frames` frames, keeping endpoints exact."""
    if n_frames < 2:
        raise ValueError("target length must be >= 2")
    t_raw = track.n_frames
    if n_frames == t_raw:
        return track
    pos = np.linspace(0.0, t_raw - 1, n_frames)
    lo = np.floor(pos).astype(int)
    hi = np.minimum(lo + 1, t_raw - 1)
    w = (pos - lo)[:, None, None]
    resampled = (1.0 - w) * track.positions[lo] + w * track.positions[hi]
    return replace(track, positions=resampled)


def average_cycle_length(cycles: list[JointTrack]) -> int:
    """Round-half-up mean frame count of the cycles, at least 2."""
    if not cycles:
        raise ValueError("empty cycle list")
    mean = sum(c.n_frames for c in cycles) / len(cycles)
    return max(2, int(math.floor(mean + 0.5)))


def assemble_sample(track: JointTrack) -> np.ndarray:
    """Flatten a (T, J, 3) track to the time-major sample vector of length 3*J*T.

    Ordering: all joints of frame 1, then all joints of frame 2, ...; each
    joint contributes its (x, y, z) triple.
    """
    if not np.all(np.isfinite(track.positions)):
        raise ValueError("non-finite coordinate in track")
    return track.positions.reshape(-1).copy()


def disassemble_sample(sample, n_joints: int, n_frames: int) -> np.ndarray:
    """Inverse of assemble_sample: recover the (T, J, 3) position array."""
    vec = as_vector(sample, length=3 * n_joints * n_frames, name="sample")
    return vec.reshape(n_frames, n_joints, 3)
