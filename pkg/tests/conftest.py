"""Shared fixtures and random-instance generators for the test suite."""

import numpy as np

from gaitlab import (Bone, LabeledDataset, MotionFrame, MotionSequence,
                     RootSpec, Skeleton)

TIBIA_ASF = """\
# minimal single-bone skeleton
:version 1.10
:name test
:units
  mass 1.0
  length 0.45
  angle deg
:documentation
  fixture for the test suite
:root
  order TX TY TZ RX RY RZ
  axis XYZ
  position 0 0 0
  orientation 0 0 0
:bonedata
  begin
    id 1
    name tibia
    direction 0 1 0
    length 1.45
    axis 0 0 0 XYZ
    dof rz
    limits (-60.0 70.0)
  end
:hierarchy
  begin
    root tibia
  end
"""

TIBIA_AMC = """\
#!comment line
:FULLY-SPECIFIED
:DEGREES
1
root 0 0 0 0 0 0
tibia 0
2
root 0 0 0 0 0 0
tibia 90
"""

ROOT_ONLY_ASF = """\
:version 1.10
:units
  angle deg
:root
  order TX TY TZ RX RY RZ
  axis XYZ
  position 0 0 0
  orientation 0 0 0
:bonedata
:hierarchy
  begin
  end
"""


def random_skeleton(rng, n_bones=None):
    """Random valid skeleton: tree hierarchy, unit directions, random dofs."""
    n = int(n_bones if n_bones is not None else rng.integers(1, 6))
    names = [f"b{i}" for i in range(n)]
    bones = []
    parents = {}
    for i, name in enumerate(names):
        direction = rng.standard_normal(3)
        direction = direction / np.linalg.norm(direction)
        dof = tuple(ch for ch in ("rx", "ry", "rz") if rng.random() < 0.7)
        bones.append(Bone(name=name,
                          direction=tuple(float(v) for v in direction),
                          length=float(rng.uniform(0.5, 3.0)),
                          axis=tuple(float(v) for v in rng.uniform(-45, 45, 3)),
                          axis_order="XYZ", dof=dof))
        parents[name] = "root" if i == 0 else names[int(rng.integers(0, i))]
    return Skeleton(angle_unit="deg", length_scale=0.45, root=RootSpec(),
                    bones=tuple(bones), parents=parents)


def random_sequence(rng, skeleton, n_frames=None):
    t = int(n_frames if n_frames is not None else rng.integers(1, 8))
    frames = []
    for _ in range(t):
        values = {b.name: tuple(float(v) for v in rng.uniform(-180, 180, len(b.dof)))
                  for b in skeleton.bones if b.dof}
        frames.append(MotionFrame(
            root_position=tuple(float(v) for v in rng.uniform(-10, 10, 3)),
            root_rotation=tuple(float(v) for v in rng.uniform(-180, 180, 3)),
            bone_values=values))
    return MotionSequence(skeleton=skeleton, frames=tuple(frames))


def random_dataset(rng, n_classes=None, dim=None, balanced=False, spread=3.0):
    """Random labeled dataset: Gaussian classes around random means."""
    c = int(n_classes if n_classes is not None else rng.integers(2, 7))
    d = int(dim if dim is not None else rng.integers(3, 21))
    if balanced:
        sizes = [int(rng.integers(3, 16))] * c
    else:
        sizes = [int(rng.integers(3, 16)) for _ in range(c)]
    means = rng.standard_normal((c, d)) * spread
    samples = np.vstack([means[i] + rng.standard_normal((s, d))
                         for i, s in enumerate(sizes)])
    labels = tuple(f"c{i}" for i, s in enumerate(sizes) for _ in range(s))
    return LabeledDataset(samples=samples, labels=labels)


HAND_2D = LabeledDataset(
    samples=np.array([[0.0, 0.0], [0.0, 2.0], [4.0, 0.0], [4.0, 2.0]]),
    labels=("A", "A", "B", "B"))
