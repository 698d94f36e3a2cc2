"""DTW, cycle detection, resampling, and sample assembly."""

import math
from functools import lru_cache

import numpy as np
import pytest
from conftest import TIBIA_ASF
from hypothesis import given, settings
from hypothesis import strategies as st

from gaitlab import (CycleDetectionConfig, JointTrack, MotionFrame,
                     MotionSequence, assemble_sample, average_cycle_length,
                     detect_gait_cycle_ranges, detect_gait_cycles,
                     disassemble_sample, dtw_distance, parse_asf,
                     resample_to_length, rotation_features)


def dtw_brute_force(a, b):
    """Minimal accumulated Euclidean cost over all monotone warping paths."""
    a = np.atleast_2d(np.asarray(a, float).T).T
    b = np.atleast_2d(np.asarray(b, float).T).T

    @lru_cache(maxsize=None)
    def best(i, j):
        local = float(np.linalg.norm(a[i] - b[j]))
        if i == 0 and j == 0:
            return local
        options = []
        if i > 0:
            options.append(best(i - 1, j))
        if j > 0:
            options.append(best(i, j - 1))
        if i > 0 and j > 0:
            options.append(best(i - 1, j - 1))
        return local + min(options)

    return best(len(a) - 1, len(b) - 1)


class TestDtw:
    def test_identity_alignment(self):
        rng = np.random.default_rng(0)
        s = rng.standard_normal((6, 3))
        assert dtw_distance(s, s) == 0.0

    def test_hand_example_zero(self):
        assert dtw_distance([0.0, 0.0, 1.0], [0.0, 1.0],
                            cost=lambda x, y: abs(x - y)) == 0.0

    def test_hand_example_two(self):
        assert dtw_distance([0.0, 2.0], [0.0, 0.0],
                            cost=lambda x, y: abs(x - y)) == 2.0

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            dtw_distance([], [1.0])

    def test_matches_brute_force(self):
        rng = np.random.default_rng(42)
        for _ in range(30):
            a = rng.standard_normal((int(rng.integers(1, 6)), 2))
            b = rng.standard_normal((int(rng.integers(1, 6)), 2))
            assert dtw_distance(a, b) == pytest.approx(dtw_brute_force(a, b),
                                                       abs=1e-12)

    @given(st.lists(st.floats(-5, 5), min_size=1, max_size=5),
           st.lists(st.floats(-5, 5), min_size=1, max_size=5))
    @settings(max_examples=60, deadline=None)
    def test_nonnegative_and_symmetric(self, a, b):
        d = dtw_distance(a, b)
        assert d >= 0.0
        assert d == pytest.approx(dtw_distance(b, a), abs=1e-12)


def sine_sequence(skeleton, n_frames, periods=1.0, amplitude=40.0, phase=0.0):
    frames = []
    for t in range(n_frames):
        angle = amplitude * math.sin(2 * math.pi * periods * t / n_frames + phase)
        frames.append(MotionFrame(root_position=(0.0, 0.0, 0.0),
                                  root_rotation=(0.0, 0.0, 0.0),
                                  bone_values={"tibia": (angle,)}))
    return MotionSequence(skeleton=skeleton, frames=tuple(frames))


class TestDetectCycles:
    def test_exact_exemplar_match(self):
        skel = parse_asf(TIBIA_ASF)
        seq = sine_sequence(skel, 12)
        cfg = CycleDetectionConfig(exemplar=rotation_features(seq),
                                   threshold=1.0, min_length=8, max_length=16)
        cycles = detect_gait_cycles(seq, cfg)
        assert len(cycles) == 1
        assert cycles[0] == seq

    def test_constant_pose_no_match(self):
        skel = parse_asf(TIBIA_ASF)
        exemplar_seq = sine_sequence(skel, 12)
        constant = sine_sequence(skel, 30, amplitude=0.0)
        exemplar = rotation_features(exemplar_seq)
        # independent oracle: even the best candidate stays far from the exemplar
        best = min(dtw_distance(rotation_features(constant).copy()[s:s + 12],
                                exemplar)
                   for s in range(0, 18))
        assert best > 50.0
        cfg = CycleDetectionConfig(exemplar=exemplar, threshold=50.0,
                                   min_length=8, max_length=16)
        assert detect_gait_cycles(constant, cfg) == []

    def test_two_back_to_back_cycles(self):
        skel = parse_asf(TIBIA_ASF)
        one = sine_sequence(skel, 12)
        two = MotionSequence(skeleton=skel, frames=one.frames + one.frames)
        cfg = CycleDetectionConfig(exemplar=rotation_features(one),
                                   threshold=1.0, min_length=10, max_length=14)
        ranges = detect_gait_cycle_ranges(two, cfg)
        assert ranges == [(0, 12), (12, 24)]

    def test_ranges_sorted_nonoverlapping(self):
        skel = parse_asf(TIBIA_ASF)
        rng = np.random.default_rng(1)
        frames = tuple(
            MotionFrame(root_position=(0.0, 0.0, 0.0),
                        root_rotation=(0.0, 0.0, 0.0),
                        bone_values={"tibia": (float(v),)})
            for v in rng.uniform(-40, 40, 120))
        noisy = MotionSequence(skeleton=skel, frames=frames)
        exemplar = rotation_features(sine_sequence(skel, 12))
        cfg = CycleDetectionConfig(exemplar=exemplar, threshold=300.0,
                                   min_length=8, max_length=16)
        ranges = detect_gait_cycle_ranges(noisy, cfg)
        for (a1, b1), (a2, b2) in zip(ranges, ranges[1:]):
            assert a1 < b1 <= a2 < b2

    def test_config_validation(self):
        with pytest.raises(ValueError):
            CycleDetectionConfig(exemplar=np.zeros((0, 2)), threshold=1.0,
                                 min_length=2, max_length=4)
        with pytest.raises(ValueError):
            CycleDetectionConfig(exemplar=np.zeros((3, 2)), threshold=0.0,
                                 min_length=2, max_length=4)
        with pytest.raises(ValueError):
            CycleDetectionConfig(exemplar=np.zeros((3, 2)), threshold=1.0,
                                 min_length=5, max_length=4)


def scalar_track(values):
    arr = np.array(values, dtype=float).reshape(-1, 1, 1)
    return JointTrack(positions=np.concatenate([arr, 0 * arr, 0 * arr], axis=2))


class TestResample:
    def test_identity(self):
        rng = np.random.default_rng(2)
        track = JointTrack(positions=rng.standard_normal((9, 4, 3)))
        out = resample_to_length(track, 9)
        assert np.array_equal(out.positions, track.positions)

    def test_downsample(self):
        out = resample_to_length(scalar_track([0, 1, 2, 3]), 2)
        assert np.array_equal(out.positions[:, 0, 0], [0.0, 3.0])

    def test_upsample(self):
        out = resample_to_length(scalar_track([0, 1, 2, 3]), 7)
        assert np.allclose(out.positions[:, 0, 0],
                           [0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0])

    def test_endpoints_bit_exact(self):
        rng = np.random.default_rng(3)
        track = JointTrack(positions=rng.standard_normal((13, 2, 3)))
        for t in (2, 5, 29):
            out = resample_to_length(track, t)
            assert np.array_equal(out.positions[0], track.positions[0])
            assert np.array_equal(out.positions[-1], track.positions[-1])

    def test_too_short_target(self):
        with pytest.raises(ValueError):
            resample_to_length(scalar_track([0, 1]), 1)


class TestAverageCycleLength:
    def test_examples(self):
        assert average_cycle_length([scalar_track([0] * 10)]) == 10
        assert average_cycle_length([scalar_track([0] * 10),
                                     scalar_track([0] * 20)]) == 15
        # round half up
        assert average_cycle_length([scalar_track([0] * 3),
                                     scalar_track([0] * 4)]) == 4

    def test_minimum_two(self):
        assert average_cycle_length([scalar_track([0, 1])]) == 2

    def test_empty(self):
        with pytest.raises(ValueError):
            average_cycle_length([])


class TestAssemble:
    def test_single_joint_single_frame(self):
        track = JointTrack(positions=np.array([[[1.0, 2.0, 3.0]]]))
        assert np.array_equal(assemble_sample(track), [1.0, 2.0, 3.0])

    def test_time_major_joint_order(self):
        positions = np.array([[[1, 2, 3], [4, 5, 6]],
                              [[7, 8, 9], [10, 11, 12]]], dtype=float)
        track = JointTrack(positions=positions)
        assert np.array_equal(assemble_sample(track), np.arange(1.0, 13.0))

    def test_dimension_arithmetic(self):
        rng = np.random.default_rng(4)
        track = JointTrack(positions=rng.standard_normal((46, 31, 3)))
        assert assemble_sample(track).shape == (4278,)

    def test_non_finite_rejected(self):
        positions = np.zeros((1, 1, 3))
        positions[0, 0, 0] = np.nan
        with pytest.raises(ValueError, match="non-finite"):
            assemble_sample(JointTrack(positions=positions))

    @given(st.integers(1, 4), st.integers(1, 5), st.integers(0, 2 ** 31 - 1))
    @settings(max_examples=40, deadline=None)
    def test_bijection(self, n_joints, n_frames, seed):
        rng = np.random.default_rng(seed)
        positions = rng.standard_normal((n_frames, n_joints, 3))
        sample = assemble_sample(JointTrack(positions=positions))
        assert np.array_equal(disassemble_sample(sample, n_joints, n_frames),
                              positions)
