"""ASF/AMC parsing, root zeroing, mean skeleton, and forward kinematics."""

import math

import numpy as np
import pytest
from conftest import ROOT_ONLY_ASF, TIBIA_AMC, TIBIA_ASF, random_sequence, random_skeleton

from gaitlab import (Bone, FormatError, MotionFrame, MotionSequence, RootSpec,
                     Skeleton, forward_kinematics, forward_kinematics_sequence,
                     parse_amc, parse_asf, prototypical_skeleton, write_amc,
                     zero_root)


def make_frame(skeleton, values, position=(0.0, 0.0, 0.0),
               rotation=(0.0, 0.0, 0.0)):
    return MotionFrame(root_position=position, root_rotation=rotation,
                       bone_values=values)


class TestParseAsf:
    def test_minimal_bone(self):
        skel = parse_asf(TIBIA_ASF)
        assert len(skel.bones) == 1
        bone = skel.bones[0]
        assert bone.name == "tibia"
        assert bone.length == 1.45
        assert bone.direction == (0.0, 1.0, 0.0)
        assert bone.dof == ("rz",)
        assert skel.parents == {"tibia": "root"}
        assert skel.angle_unit == "deg"
        assert skel.length_scale == 0.45

    def test_zero_bones(self):
        skel = parse_asf(ROOT_ONLY_ASF)
        assert skel.bones == ()
        assert skel.parents == {}
        assert skel.n_joints == 1

    def test_translation_dof_rejected(self):
        text = TIBIA_ASF.replace("dof rz", "dof tx")
        with pytest.raises(FormatError, match="translation dof on non-root bone"):
            parse_asf(text)

    def test_duplicate_bone_name(self):
        block = """  begin
    id 2
    name tibia
    direction 1 0 0
    length 1.0
    axis 0 0 0 XYZ
  end
"""
        text = TIBIA_ASF.replace(":hierarchy", block + ":hierarchy")
        with pytest.raises(FormatError, match="duplicate bone name"):
            parse_asf(text)

    def test_non_unit_direction(self):
        text = TIBIA_ASF.replace("direction 0 1 0", "direction 0 0.5 0")
        with pytest.raises(FormatError, match="non-unit direction"):
            parse_asf(text)

    def test_direction_normalized_when_close(self):
        text = TIBIA_ASF.replace("direction 0 1 0", "direction 0 1.0000005 0")
        skel = parse_asf(text)
        assert abs(np.linalg.norm(skel.bones[0].direction) - 1.0) < 1e-12

    def test_unknown_keyword_has_line_number(self):
        text = TIBIA_ASF.replace("length 1.45", "girth 1.45")
        with pytest.raises(FormatError, match=r"line \d+: unknown keyword"):
            parse_asf(text)

    def test_unknown_section(self):
        with pytest.raises(FormatError, match="unknown keyword :wings"):
            parse_asf(TIBIA_ASF + ":wings\n")


class TestParseAmc:
    def test_root_only_frame(self):
        skel = parse_asf(ROOT_ONLY_ASF)
        seq = parse_amc(":FULLY-SPECIFIED\n1\nroot 0 0 0 0 0 0\n", skel)
        assert seq.n_frames == 1
        assert seq.frames[0].root_position == (0.0, 0.0, 0.0)
        assert seq.frames[0].root_rotation == (0.0, 0.0, 0.0)

    def test_frame_index_gap(self):
        skel = parse_asf(ROOT_ONLY_ASF)
        text = "1\nroot 0 0 0 0 0 0\n3\nroot 0 0 0 0 0 0\n"
        with pytest.raises(FormatError, match="frame index gap at 2"):
            parse_amc(text, skel)

    def test_two_frame_tibia(self):
        skel = parse_asf(TIBIA_ASF)
        seq = parse_amc(TIBIA_AMC, skel)
        assert seq.n_frames == 2
        assert seq.frames[0].bone_values["tibia"] == (0.0,)
        assert seq.frames[1].bone_values["tibia"] == (90.0,)

    def test_unknown_bone(self):
        skel = parse_asf(TIBIA_ASF)
        text = "1\nroot 0 0 0 0 0 0\ntibia 0\nfemur 1 2 3\n"
        with pytest.raises(FormatError, match="absent from skeleton"):
            parse_amc(text, skel)

    def test_wrong_value_count(self):
        skel = parse_asf(TIBIA_ASF)
        text = "1\nroot 0 0 0 0 0 0\ntibia 0 1\n"
        with pytest.raises(FormatError, match="expects 1 values"):
            parse_amc(text, skel)

    def test_missing_bone_channels(self):
        skel = parse_asf(TIBIA_ASF)
        with pytest.raises(FormatError, match="missing channels"):
            parse_amc("1\nroot 0 0 0 0 0 0\n", skel)

    def test_no_frames(self):
        skel = parse_asf(ROOT_ONLY_ASF)
        with pytest.raises(FormatError, match="no frames"):
            parse_amc(":FULLY-SPECIFIED\n", skel)


class TestWriteAmc:
    def test_round_trip_fixture(self):
        skel = parse_asf(TIBIA_ASF)
        seq = parse_amc(TIBIA_AMC, skel)
        assert parse_amc(write_amc(seq), skel) == seq

    def test_round_trip_random(self):
        rng = np.random.default_rng(7)
        for _ in range(25):
            skel = random_skeleton(rng)
            seq = random_sequence(rng, skel)
            assert parse_amc(write_amc(seq), skel) == seq

    def test_empty_sequence_is_header_only(self):
        skel = parse_asf(TIBIA_ASF)
        text = write_amc(MotionSequence(skeleton=skel, frames=()))
        body = [l for l in text.splitlines() if l and not l.startswith(":")]
        assert body == []


class TestZeroRoot:
    def test_zeroes_root_keeps_bones(self):
        skel = parse_asf(TIBIA_ASF)
        frame = make_frame(skel, {"tibia": (15.0,)}, position=(3.1, 0.9, -2.0),
                           rotation=(10.0, 20.0, 30.0))
        seq = zero_root(MotionSequence(skeleton=skel, frames=(frame,)))
        out = seq.frames[0]
        assert out.root_position == (0.0, 0.0, 0.0)
        assert out.root_rotation == (0.0, 0.0, 0.0)
        assert out.bone_values == {"tibia": (15.0,)}

    def test_idempotent(self):
        rng = np.random.default_rng(11)
        for _ in range(10):
            seq = random_sequence(rng, random_skeleton(rng))
            once = zero_root(seq)
            assert zero_root(once) == once

    def test_identity_on_already_zeroed(self):
        skel = parse_asf(TIBIA_ASF)
        seq = parse_amc(TIBIA_AMC, skel)
        assert zero_root(seq) == seq


class TestPrototypicalSkeleton:
    def test_singleton(self):
        skel = parse_asf(TIBIA_ASF)
        assert prototypical_skeleton([skel]) == skel

    def test_mean_length(self):
        a = parse_asf(TIBIA_ASF.replace("length 1.45", "length 1.0"))
        b = parse_asf(TIBIA_ASF.replace("length 1.45", "length 3.0"))
        assert prototypical_skeleton([a, b]).bones[0].length == 2.0

    def test_mean_direction_renormalized(self):
        a = parse_asf(TIBIA_ASF.replace("direction 0 1 0", "direction 1 0 0"))
        b = parse_asf(TIBIA_ASF)
        proto = prototypical_skeleton([a, b])
        expected = np.array([1.0, 1.0, 0.0]) / math.sqrt(2.0)
        assert np.allclose(proto.bones[0].direction, expected, atol=1e-15)

    def test_copies_give_back_original(self):
        rng = np.random.default_rng(3)
        skel = random_skeleton(rng, n_bones=4)
        proto = prototypical_skeleton([skel] * 3)
        for got, want in zip(proto.bones, skel.bones):
            assert got.length == pytest.approx(want.length, rel=1e-12)
            assert np.allclose(got.direction, want.direction, atol=1e-12)
            assert np.allclose(got.axis, want.axis, atol=1e-12)

    def test_mismatched_bones_rejected(self):
        a = parse_asf(TIBIA_ASF)
        b = parse_asf(TIBIA_ASF.replace("name tibia", "name femur")
                      .replace("root tibia", "root femur"))
        with pytest.raises(ValueError, match="mismatched"):
            prototypical_skeleton([a, b])

    def test_empty_list_rejected(self):
        with pytest.raises(ValueError):
            prototypical_skeleton([])


class TestForwardKinematics:
    def test_identity_rotation(self):
        skel = parse_asf(TIBIA_ASF)
        frame = make_frame(skel, {"tibia": (0.0,)})
        joints = forward_kinematics(skel, frame)
        assert np.allclose(joints[0], [0.0, 0.0, 0.0])
        assert np.allclose(joints[1], [0.0, 1.45, 0.0])

    def test_rotation_about_z(self):
        skel = parse_asf(TIBIA_ASF)
        frame = make_frame(skel, {"tibia": (90.0,)})
        joints = forward_kinematics(skel, frame)
        assert np.allclose(joints[1], [-1.45, 0.0, 0.0], atol=1e-12)

    def test_two_bone_chain(self):
        bones = (Bone(name="upper", direction=(0.0, 1.0, 0.0), length=2.0,
                      axis=(0.0, 0.0, 0.0), dof=("rx", "ry", "rz")),
                 Bone(name="lower", direction=(0.0, 1.0, 0.0), length=1.5,
                      axis=(0.0, 0.0, 0.0), dof=("rx", "ry", "rz")))
        skel = Skeleton(bones=bones, parents={"upper": "root", "lower": "upper"})
        frame = make_frame(skel, {"upper": (0.0, 0.0, 0.0),
                                  "lower": (0.0, 0.0, 0.0)})
        joints = forward_kinematics(skel, frame)
        assert np.allclose(joints[1], [0.0, 2.0, 0.0])
        assert np.allclose(joints[2], [0.0, 3.5, 0.0])

    def test_axis_transform_conjugation(self):
        # axis (0,0,90) turns an rx channel into a rotation about +y
        bone = Bone(name="b", direction=(0.0, 0.0, 1.0), length=2.0,
                    axis=(0.0, 0.0, 90.0), dof=("rx",))
        skel = Skeleton(bones=(bone,), parents={"b": "root"})
        frame = make_frame(skel, {"b": (90.0,)})
        joints = forward_kinematics(skel, frame)
        assert np.allclose(joints[1], [2.0, 0.0, 0.0], atol=1e-12)

    def test_root_translation(self):
        skel = parse_asf(TIBIA_ASF)
        frame = make_frame(skel, {"tibia": (0.0,)}, position=(1.0, 2.0, 3.0))
        joints = forward_kinematics(skel, frame)
        assert np.allclose(joints[0], [1.0, 2.0, 3.0])
        assert np.allclose(joints[1], [1.0, 3.45, 3.0])

    def test_bone_lengths_preserved(self):
        rng = np.random.default_rng(23)
        for _ in range(20):
            skel = random_skeleton(rng)
            seq = random_sequence(rng, skel, n_frames=5)
            joints = forward_kinematics_sequence(seq)
            index = {n: i for i, n in enumerate(skel.joint_names)}
            for bone in skel.bones:
                child = joints[:, index[bone.name]]
                parent = joints[:, index[skel.parents[bone.name]]]
                lengths = np.linalg.norm(child - parent, axis=1)
                assert np.max(np.abs(lengths - bone.length)) < 1e-9

    def test_zero_rooted_root_at_origin(self):
        rng = np.random.default_rng(5)
        seq = zero_root(random_sequence(rng, random_skeleton(rng), n_frames=4))
        joints = forward_kinematics_sequence(seq)
        assert np.all(joints[:, 0] == 0.0)


class TestSkeletonInvariants:
    def test_cycle_rejected(self):
        bones = (Bone(name="a", direction=(1.0, 0.0, 0.0), length=1.0,
                      axis=(0.0, 0.0, 0.0)),
                 Bone(name="b", direction=(1.0, 0.0, 0.0), length=1.0,
                      axis=(0.0, 0.0, 0.0)))
        with pytest.raises(ValueError, match="not a tree"):
            Skeleton(bones=bones, parents={"a": "b", "b": "a"})

    def test_orphan_rejected(self):
        bone = Bone(name="a", direction=(1.0, 0.0, 0.0), length=1.0,
                    axis=(0.0, 0.0, 0.0))
        with pytest.raises(ValueError, match="hierarchy"):
            Skeleton(bones=(bone,), parents={})
