"""Acclaim ASF/AMC motion-capture files: parsing, mean skeleton, forward kinematics.

ASF files describe a skeleton (bone directions, lengths, local rotation axes
and degrees of freedom); AMC files store per-frame channel values that deform
it.  Joint positions are recovered by composing each bone's local rotation,
conjugated by its axis transform, down the bone hierarchy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .exceptions import FormatError

ROOT = "root"

_ROTATION_CHANNELS = ("rx", "ry", "rz")
_TRANSLATION_CHANNELS = ("tx", "ty", "tz")
_ALL_CHANNELS = _TRANSLATION_CHANNELS + _ROTATION_CHANNELS


@dataclass(frozen=True)
class Bone:
    name: str
    direction: tuple[float, float, float]  # unit vector in the parent frame
    length: float
    axis: tuple[float, float, float]  # local-frame rotation angles
    axis_order: str = "XYZ"
    dof: tuple[str, ...] = ()  # subset of rx/ry/rz; AMC value order


@dataclass(frozen=True)
class RootSpec:
    order: tuple[str, ...] = _ALL_CHANNELS  # AMC channel order for the root line
    axis_order: str = "XYZ"
    position: tuple[float, float, float] = (0.0, 0.0, 0.0)
    orientation: tuple[float, float, float] = (0.0, 0.0, 0.0)


@dataclass(frozen=True)
class Skeleton:
    angle_unit: str = "deg"  # "deg" or "rad"
    length_scale: float = 1.0  # recorded from :units; lengths stay in file units
    root: RootSpec = RootSpec()
    bones: tuple[Bone, ...] = ()  # document order
    parents: dict[str, str] = None  # bone name -> parent bone name or "root"

    def __post_init__(self):
        if self.parents is None:
            object.__setattr__(self, "parents", {})
        if self.angle_unit not in ("deg", "rad"):
            raise ValueError(f"unknown angle unit {self.angle_unit!r}")
        names = [b.name for b in self.bones]
        if len(set(names)) != len(names):
            raise ValueError("duplicate bone names")
        if ROOT in names:
            raise ValueError(f"bone may not be named {ROOT!r}")
        known = set(names) | {ROOT}
        for bone in self.bones:
            norm = math.sqrt(sum(c * c for c in bone.direction))
            if abs(norm - 1.0) > 1e-6:
                raise ValueError(f"bone {bone.name!r} direction is not unit length")
            bad = [ch for ch in bone.dof if ch not in _ROTATION_CHANNELS]
            if bad:
                raise ValueError(f"bone {bone.name!r} has non-rotation dof {bad}")
        if set(self.parents) != set(names):
            raise ValueError("hierarchy does not cover the bone set exactly")
        # every bone must reach the root without cycles
        for name in names:
            seen = set()
            cur = name
            while cur != ROOT:
                if cur in seen or cur not in known:
                    raise ValueError(f"hierarchy is not a tree at bone {name!r}")
                seen.add(cur)
                cur = self.parents[cur]

    @property
    def joint_names(self) -> tuple[str, ...]:
        """Fixed joint enumeration: root first, then bones in document order."""
        return (ROOT,) + tuple(b.name for b in self.bones)

    @property
    def n_joints(self) -> int:
        return 1 + len(self.bones)


@dataclass(frozen=True)
class MotionFrame:
    root_position: tuple[float, float, float]
    root_rotation: tuple[float, float, float]
    bone_values: dict[str, tuple[float, ...]]  # keyed by bone name, dof order


@dataclass(frozen=True)
class MotionSequence:
    skeleton: Skeleton
    frames: tuple[MotionFrame, ...]
    frame_rate: float = 120.0

    @property
    def n_frames(self) -> int:
        return len(self.frames)


# ---------------------------------------------------------------------------
# parsing


def _tokenize(text):
    """Split into (lineno, tokens) pairs, dropping blanks and # comments."""
    out = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        out.append((lineno, line.split()))
    return out


def _floats(tokens, n, lineno, what):
    if len(tokens) < n:
        raise FormatError(f"line {lineno}: expected {n} numbers for {what}")
    try:
        return tuple(float(t) for t in tokens[:n])
    except ValueError:
        raise FormatError(f"line {lineno}: invalid number in {what}") from None


def parse_asf(text: str) -> Skeleton:
    """Parse an ASF skeleton document.

    Errors carry the offending line number.  Bone directions are normalized;
    a direction whose norm is off unit by more than 1e-3 is rejected.
    """
    lines = _tokenize(text)
    sections = []  # (lineno, name, body lines)
    current = None
    for lineno, tokens in lines:
        if tokens[0].startswith(":"):
            name = tokens[0][1:].lower()
            if not name:
                raise FormatError(f"line {lineno}: malformed section header")
            current = (lineno, name, [])
            sections.append(current)
        else:
            if current is None:
                raise FormatError(f"line {lineno}: content before any section header")
            current[2].append((lineno, tokens))

    angle_unit = "deg"
    length_scale = 1.0
    root = RootSpec()
    bones: list[Bone] = []
    parents: dict[str, str] = {}
    bone_lines: dict[str, int] = {}
    seen_sections = set()

    for lineno, name, body in sections:
        if name in seen_sections:
            raise FormatError(f"line {lineno}: duplicate section :{name}")
        seen_sections.add(name)
        if name in ("version", "name", "documentation", "skin"):
            continue
        if name == "units":
            for ln, tokens in body:
                key = tokens[0].lower()
                if key == "mass":
                    continue
                elif key == "length":
                    (length_scale,) = _floats(tokens[1:], 1, ln, "length unit")
                elif key == "angle":
                    unit = tokens[1].lower() if len(tokens) > 1 else ""
                    if unit not in ("deg", "rad"):
                        raise FormatError(f"line {ln}: unknown angle unit {unit!r}")
                    angle_unit = unit
                else:
                    raise FormatError(f"line {ln}: unknown keyword {key!r} in :units")
        elif name == "root":
            order = root.order
            axis_order = root.axis_order
            position = root.position
            orientation = root.orientation
            for ln, tokens in body:
                key = tokens[0].lower()
                if key == "order":
                    order = tuple(t.lower() for t in tokens[1:])
                    if sorted(order) != sorted(set(order)) or not set(order) <= set(_ALL_CHANNELS):
                        raise FormatError(f"line {ln}: invalid root channel order")
                elif key == "axis":
                    axis_order = tokens[1].upper() if len(tokens) > 1 else "XYZ"
                elif key == "position":
                    position = _floats(tokens[1:], 3, ln, "root position")
                elif key == "orientation":
                    orientation = _floats(tokens[1:], 3, ln, "root orientation")
                else:
                    raise FormatError(f"line {ln}: unknown keyword {key!r} in :root")
            root = RootSpec(order=order, axis_order=axis_order, position=position,
                            orientation=orientation)
        elif name == "bonedata":
            bone: dict | None = None
            for ln, tokens in body:
                key = tokens[0].lower()
                if key == "begin":
                    if bone is not None:
                        raise FormatError(f"line {ln}: nested begin in :bonedata")
                    bone = {"lineno": ln, "axis": (0.0, 0.0, 0.0), "axis_order": "XYZ",
                            "dof": ()}
                    continue
                if bone is None:
                    raise FormatError(f"line {ln}: expected 'begin' in :bonedata")
                if key == "end":
                    for field in ("name", "direction", "length"):
                        if field not in bone:
                            raise FormatError(
                                f"line {bone['lineno']}: bone block missing {field!r}")
                    bones.append(Bone(name=bone["name"], direction=bone["direction"],
                                      length=bone["length"], axis=bone["axis"],
                                      axis_order=bone["axis_order"], dof=bone["dof"]))
                    bone = None
                elif key == "id":
                    continue
                elif key == "name":
                    bname = tokens[1]
                    if bname in bone_lines or bname == ROOT:
                        raise FormatError(f"line {ln}: duplicate bone name {bname!r}")
                    bone_lines[bname] = ln
                    bone["name"] = bname
                elif key == "direction":
                    vec = _floats(tokens[1:], 3, ln, "direction")
                    norm = math.sqrt(sum(c * c for c in vec))
                    if abs(norm - 1.0) > 1e-3:
                        raise FormatError(
                            f"line {ln}: non-unit direction (norm {norm:.6g})")
                    bone["direction"] = tuple(c / norm for c in vec)
                elif key == "length":
                    (bone["length"],) = _floats(tokens[1:], 1, ln, "length")
                elif key == "axis":
                    bone["axis"] = _floats(tokens[1:], 3, ln, "axis")
                    if len(tokens) > 4:
                        bone["axis_order"] = tokens[4].upper()
                elif key == "dof":
                    dof = tuple(t.lower() for t in tokens[1:])
                    for ch in dof:
                        if ch in _TRANSLATION_CHANNELS:
                            raise FormatError(
                                f"line {ln}: translation dof on non-root bone")
                        if ch not in _ROTATION_CHANNELS:
                            raise FormatError(f"line {ln}: unknown dof channel {ch!r}")
                    bone["dof"] = dof
                elif key == "limits" or key.startswith("("):
                    continue  # limit ranges are not used downstream
                else:
                    raise FormatError(f"line {ln}: unknown keyword {key!r} in bone block")
            if bone is not None:
                raise FormatError(f"line {bone['lineno']}: unterminated bone block")
        elif name == "hierarchy":
            in_block = False
            known = {b.name for b in bones} | {ROOT}
            for ln, tokens in body:
                key = tokens[0].lower()
                if key == "begin":
                    in_block = True
                    continue
                if key == "end":
                    in_block = False
                    continue
                if not in_block:
                    raise FormatError(f"line {ln}: expected 'begin' in :hierarchy")
                parent = tokens[0]
                if parent not in known:
                    raise FormatError(f"line {ln}: unknown parent bone {parent!r}")
                for child in tokens[1:]:
                    if child not in known:
                        raise FormatError(f"line {ln}: unknown child bone {child!r}")
                    if child in parents:
                        raise FormatError(f"line {ln}: bone {child!r} has two parents")
                    parents[child] = parent
        else:
            raise FormatError(f"line {lineno}: unknown keyword :{name}")

    for bone in bones:
        if bone.name not in parents:
            raise FormatError(
                f"line {bone_lines.get(bone.name, 0)}: bone {bone.name!r} missing "
                f"from hierarchy")
    try:
        return Skeleton(angle_unit=angle_unit, length_scale=length_scale, root=root,
                        bones=tuple(bones), parents=parents)
    except ValueError as exc:
        raise FormatError(str(exc)) from None


def _root_channels(root: RootSpec, values, lineno):
    if len(values) != len(root.order):
        raise FormatError(
            f"line {lineno}: root expects {len(root.order)} values, got {len(values)}")
    pos = {ch: 0.0 for ch in _TRANSLATION_CHANNELS}
    rot = {ch: 0.0 for ch in _ROTATION_CHANNELS}
    for ch, v in zip(root.order, values):
        (pos if ch in pos else rot)[ch] = v
    return (pos["tx"], pos["ty"], pos["tz"]), (rot["rx"], rot["ry"], rot["rz"])


def parse_amc(text: str, skeleton: Skeleton, frame_rate: float = 120.0) -> MotionSequence:
    """Parse an AMC motion document against its skeleton.

    Frames must be numbered consecutively; every frame must supply the root
    channels and exactly the channels declared by each bone's dof list.
    """
    expected = {b.name: len(b.dof) for b in skeleton.bones if b.dof}
    frames: list[MotionFrame] = []
    current: dict[str, tuple[float, ...]] | None = None
    current_root = None
    last_index = None
    frame_line = 0

    def finalize():
        if current is None:
            return
        if current_root is None:
            raise FormatError(f"line {frame_line}: frame {last_index} missing root line")
        missing = [n for n in expected if n not in current]
        if missing:
            raise FormatError(
                f"line {frame_line}: frame {last_index} missing channels for bone "
                f"{missing[0]!r}")
        ordered = {b.name: current[b.name] for b in skeleton.bones if b.dof}
        frames.append(MotionFrame(root_position=current_root[0],
                                  root_rotation=current_root[1],
                                  bone_values=ordered))

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#") or line.startswith(":"):
            continue
        tokens = line.split()
        if len(tokens) == 1 and tokens[0].lstrip("-").isdigit():
            idx = int(tokens[0])
            finalize()
            if last_index is not None and idx != last_index + 1:
                raise FormatError(f"line {lineno}: frame index gap at {last_index + 1}")
            last_index = idx
            frame_line = lineno
            current = {}
            current_root = None
            continue
        if current is None:
            raise FormatError(f"line {lineno}: channel data before any frame index")
        name = tokens[0]
        try:
            values = tuple(float(t) for t in tokens[1:])
        except ValueError:
            raise FormatError(f"line {lineno}: invalid number for bone {name!r}") from None
        if name == ROOT:
            if current_root is not None:
                raise FormatError(f"line {lineno}: duplicate root line in frame")
            current_root = _root_channels(skeleton.root, values, lineno)
        else:
            if name not in expected:
                raise FormatError(f"line {lineno}: bone {name!r} absent from skeleton")
            if name in current:
                raise FormatError(f"line {lineno}: duplicate bone {name!r} in frame")
            if len(values) != expected[name]:
                raise FormatError(
                    f"line {lineno}: bone {name!r} expects {expected[name]} values, "
                    f"got {len(values)}")
            current[name] = values
    finalize()
    if not frames:
        raise FormatError("no frames in AMC document")
    return MotionSequence(skeleton=skeleton, frames=tuple(frames), frame_rate=frame_rate)


def _fmt(v: float) -> str:
    return repr(float(v))


def write_amc(seq: MotionSequence) -> str:
    """Serialize a motion sequence; numeric values round-trip exactly."""
    skel = seq.skeleton
    out = [":FULLY-SPECIFIED", ":DEGREES" if skel.angle_unit == "deg" else ":RADIANS"]
    for idx, frame in enumerate(seq.frames, start=1):
        out.append(str(idx))
        chan = {"tx": frame.root_position[0], "ty": frame.root_position[1],
                "tz": frame.root_position[2], "rx": frame.root_rotation[0],
                "ry": frame.root_rotation[1], "rz": frame.root_rotation[2]}
        out.append(ROOT + " " + " ".join(_fmt(chan[ch]) for ch in skel.root.order))
        for bone in skel.bones:
            if bone.dof:
                vals = frame.bone_values[bone.name]
                out.append(bone.name + " " + " ".join(_fmt(v) for v in vals))
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# transformations


def zero_root(seq: MotionSequence) -> MotionSequence:
    """Zero the root translation and rotation in every frame (idempotent)."""
    zero = (0.0, 0.0, 0.0)
    frames = tuple(replace(f, root_position=zero, root_rotation=zero)
                   for f in seq.frames)
    return replace(seq, frames=frames)


def prototypical_skeleton(skeletons: list[Skeleton]) -> Skeleton:
    """Average a list of structurally identical skeletons bone by bone.

    Bone lengths and axis angles are averaged component-wise; directions are
    averaged and renormalized.  Hierarchy, dof layout, and units must match.
    """
    if not skeletons:
        raise ValueError("empty skeleton list")
    base = skeletons[0]
    for s in skeletons[1:]:
        same = (s.angle_unit == base.angle_unit
                and s.length_scale == base.length_scale
                and s.root.order == base.root.order
                and s.root.axis_order == base.root.axis_order
                and s.parents == base.parents
                and tuple(b.name for b in s.bones) == tuple(b.name for b in base.bones)
                and tuple(b.dof for b in s.bones) == tuple(b.dof for b in base.bones)
                and tuple(b.axis_order for b in s.bones)
                == tuple(b.axis_order for b in base.bones))
        if not same:
            raise ValueError("skeletons have mismatched hierarchies or bone sets")
    if len(skeletons) == 1:
        return base
    bones = []
    for i, bone in enumerate(base.bones):
        group = [s.bones[i] for s in skeletons]
        direction = np.mean([b.direction for b in group], axis=0)
        norm = float(np.linalg.norm(direction))
        if norm < 1e-12:
            raise ValueError(f"mean direction of bone {bone.name!r} is degenerate")
        bones.append(replace(
            bone,
            direction=tuple(float(c) for c in direction / norm),
            length=float(np.mean([b.length for b in group])),
            axis=tuple(float(c) for c in np.mean([b.axis for b in group], axis=0)),
        ))
    root = replace(
        base.root,
        position=tuple(float(c) for c in
                       np.mean([s.root.position for s in skeletons], axis=0)),
        orientation=tuple(float(c) for c in
                          np.mean([s.root.orientation for s in skeletons], axis=0)),
    )
    return replace(base, root=root, bones=tuple(bones))


# ---------------------------------------------------------------------------
# forward kinematics


def _rotation_stack(axis: str, angles: np.ndarray) -> np.ndarray:
    """Rotation matrices (T, 3, 3) about a coordinate axis, angles in radians."""
    c, s = np.cos(angles), np.sin(angles)
    t = angles.shape[0]
    out = np.zeros((t, 3, 3))
    i = "xyz".index(axis)
    j, k = (i + 1) % 3, (i + 2) % 3
    out[:, i, i] = 1.0
    out[:, j, j] = c
    out[:, k, k] = c
    out[:, k, j] = s
    out[:, j, k] = -s
    return out


def _compose(order: str, angles_by_axis: dict[str, np.ndarray]) -> np.ndarray:
    """Compose axis rotations applied in `order` (first letter applied first)."""
    t = next(iter(angles_by_axis.values())).shape[0]
    result = np.broadcast_to(np.eye(3), (t, 3, 3)).copy()
    for ax in order.lower():
        result = _rotation_stack(ax, angles_by_axis[ax]) @ result
    return result


def _axis_transform(angles, order: str, to_radians: float) -> np.ndarray:
    arr = np.asarray(angles, dtype=np.float64) * to_radians
    return _compose(order, {"x": arr[None, 0], "y": arr[None, 1],
                            "z": arr[None, 2]})[0]


def _topological_bones(skel: Skeleton) -> list[Bone]:
    remaining = list(skel.bones)
    done = {ROOT}
    out = []
    while remaining:
        next_round = [b for b in remaining if skel.parents[b.name] in done]
        if not next_round:
            raise ValueError("skeleton hierarchy is not a tree")
        for b in next_round:
            out.append(b)
            done.add(b.name)
        remaining = [b for b in remaining if b.name not in done]
    return out


def forward_kinematics_sequence(seq: MotionSequence) -> np.ndarray:
    """Joint positions (T, J, 3) for every frame of a sequence.

    The root joint sits at the frame's root translation; each bone's joint is
    its parent's position displaced by the globally rotated bone vector.
    """
    skel = seq.skeleton
    conv = math.pi / 180.0 if skel.angle_unit == "deg" else 1.0
    n_frames = len(seq.frames)
    joints = np.zeros((n_frames, skel.n_joints, 3))
    if n_frames == 0:
        return joints
    index = {name: i for i, name in enumerate(skel.joint_names)}

    root_pos = np.array([f.root_position for f in seq.frames], dtype=np.float64)
    root_rot = np.array([f.root_rotation for f in seq.frames], dtype=np.float64) * conv
    c_root = _axis_transform(skel.root.orientation, skel.root.axis_order, conv)
    rot_order = "".join(ch[1] for ch in skel.root.order if ch in _ROTATION_CHANNELS)
    m_root = _compose(rot_order or "xyz", {"x": root_rot[:, 0], "y": root_rot[:, 1],
                                           "z": root_rot[:, 2]})
    rotations = {ROOT: c_root @ m_root @ c_root.T}
    positions = {ROOT: root_pos}
    joints[:, 0] = root_pos

    zeros = np.zeros(n_frames)
    for bone in _topological_bones(skel):
        c_bone = _axis_transform(bone.axis, bone.axis_order, conv)
        angles = {"x": zeros, "y": zeros, "z": zeros}
        if bone.dof:
            values = np.array([f.bone_values[bone.name] for f in seq.frames],
                              dtype=np.float64) * conv
            for j, ch in enumerate(bone.dof):
                angles[ch[1]] = values[:, j]
            local = c_bone @ _compose("".join(ch[1] for ch in bone.dof), angles) @ c_bone.T
        else:
            local = np.broadcast_to(np.eye(3), (n_frames, 3, 3))
        parent = skel.parents[bone.name]
        rotation = rotations[parent] @ local
        offset = np.asarray(bone.direction, dtype=np.float64) * bone.length
        position = positions[parent] + rotation @ offset
        rotations[bone.name] = rotation
        positions[bone.name] = position
        joints[:, index[bone.name]] = position
    return joints


def forward_kinematics(skel: Skeleton, frame: MotionFrame) -> np.ndarray:
    """Joint positions (J, 3) for a single frame."""
    seq = MotionSequence(skeleton=skel, frames=(frame,))
    return forward_kinematics_sequence(seq)[0]
