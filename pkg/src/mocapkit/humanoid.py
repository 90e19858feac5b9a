"""Default parametric humanoid: skeleton, marker template, and body mesh.

One set of body dimensions drives three mutually consistent artifacts:

* an articulated skeleton (30 coordinates: 6-DoF pelvis root, 3-DoF
  lumbar/neck/hips/shoulders, hinge knees/ankles/elbows) carrying the
  25 detector landmarks and the 57 output markers as virtual markers;
* a marker-set template whose offsets reproduce the same 57 markers from
  landmark-built segment frames;
* a watertight capsule mesh with a landmark table and per-part vertex
  sets, plus analytic ground truth for every body measurement.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .anthropometry import BodyMesh
from .augmentation import MarkerSetTemplate, template_from_neutral
from .kinematics import Coordinate, Segment, SkeletonModel


@dataclass(frozen=True)
class BodyDims:
    """Key lengths (m) and capsule radii of the synthetic body."""

    hip_height: float = 0.95
    hip_half_width: float = 0.09
    thigh_length: float = 0.45
    shank_length: float = 0.41
    torso_length: float = 0.55
    shoulder_half_width: float = 0.20
    shoulder_drop: float = 0.05
    upper_arm_length: float = 0.30
    forearm_length: float = 0.27
    heel_back: float = 0.06
    toe_front: float = 0.16
    foot_drop: float = 0.07
    r_head: float = 0.09
    r_neck: float = 0.055
    r_chest: float = 0.131
    r_abdomen: float = 0.112
    r_pelvis: float = 0.109
    r_upper_arm: float = 0.04
    r_forearm: float = 0.033
    r_thigh: float = 0.065
    r_shank: float = 0.045
    r_foot: float = 0.035

    @property
    def knee_z(self):
        return self.hip_height - self.thigh_length

    @property
    def ankle_z(self):
        return self.knee_z - self.shank_length

    @property
    def neck_z(self):
        return self.hip_height + self.torso_length

    @property
    def shoulder_z(self):
        return self.neck_z - self.shoulder_drop

    @property
    def elbow_z(self):
        return self.shoulder_z - self.upper_arm_length

    @property
    def wrist_z(self):
        return self.elbow_z - self.forearm_length

    @property
    def foot_z(self):
        return self.ankle_z - self.foot_drop


def _mirror(points):
    """Flip the y coordinate; L<->R prefix swap is done by the caller."""
    return {n: (p[0], -p[1], p[2]) for n, p in points.items()}


def landmark_neutral_positions(dims: BodyDims = BodyDims()) -> dict:
    """World positions of the 25 detector landmarks in the neutral pose."""
    d = dims
    left = {
        "LShoulder": (0.0, d.shoulder_half_width, d.shoulder_z),
        "LElbow": (0.0, d.shoulder_half_width, d.elbow_z),
        "LWrist": (0.0, d.shoulder_half_width, d.wrist_z),
        "LHip": (0.0, d.hip_half_width, d.hip_height),
        "LKnee": (0.0, d.hip_half_width, d.knee_z),
        "LAnkle": (0.0, d.hip_half_width, d.ankle_z),
        "LEye": (0.08, 0.035, d.neck_z + 0.14),
        "LEar": (0.01, 0.07, d.neck_z + 0.12),
        "LBigToe": (d.toe_front, d.hip_half_width, d.foot_z),
        "LSmallToe": (d.toe_front - 0.02, d.hip_half_width + 0.03, d.foot_z),
        "LHeel": (-d.heel_back, d.hip_half_width, d.foot_z),
    }
    right = {
        "R" + n[1:]: p for n, p in _mirror(left).items()
    }
    return {
        "Nose": (0.09, 0.0, d.neck_z + 0.10),
        "Neck": (0.0, 0.0, d.neck_z),
        "MidHip": (0.0, 0.0, d.hip_height),
        **left,
        **right,
    }


# 57 output markers: name -> (augmentation segment, neutral world position).
# Template offsets and skeleton attachments both derive from this table.
def template_neutral_positions(dims: BodyDims = BodyDims()) -> dict:
    d = dims
    sz, sw = d.shoulder_z, d.shoulder_half_width
    hz, hw = d.hip_height, d.hip_half_width
    left = {
        "LFHD": ("head", (0.08, 0.045, d.neck_z + 0.20)),
        "LBHD": ("head", (-0.08, 0.045, d.neck_z + 0.18)),
        "LBAK": ("torso", (-0.125, 0.10, hz + 0.38)),
        "LSHO": ("torso", (0.0, sw + 0.01, sz + 0.05)),
        "LUPA": ("upper_arm_l", (0.0, sw + 0.045, sz - 0.13)),
        "LUPB": ("upper_arm_l", (-0.04, sw + 0.01, sz - 0.19)),
        "LELB": ("upper_arm_l", (0.0, sw + 0.04, d.elbow_z)),
        "LELBIN": ("upper_arm_l", (0.0, sw - 0.04, d.elbow_z)),
        "LFRM": ("forearm_l", (0.033, sw + 0.01, d.elbow_z - 0.13)),
        "LWRA": ("forearm_l", (0.033, sw, d.wrist_z + 0.02)),
        "LWRB": ("forearm_l", (-0.033, sw, d.wrist_z + 0.02)),
        "LFIN": ("forearm_l", (0.0, sw, d.wrist_z - 0.10)),
        "LASI": ("pelvis", (0.10, 0.085, hz + 0.05)),
        "LPSI": ("pelvis", (-0.10, 0.06, hz + 0.04)),
        "LTHI": ("thigh_l", (0.0, hw + 0.065, hz - 0.23)),
        "LTHIF": ("thigh_l", (0.06, hw + 0.01, hz - 0.35)),
        "LKNE": ("thigh_l", (0.0, hw + 0.055, d.knee_z)),
        "LKNEIN": ("thigh_l", (0.0, hw - 0.055, d.knee_z)),
        "LTIB": ("shank_l", (0.0, hw + 0.045, d.knee_z - 0.20)),
        "LTIBF": ("shank_l", (0.045, hw, d.knee_z - 0.28)),
        "LANK": ("shank_l", (0.0, hw + 0.04, d.ankle_z)),
        "LANKIN": ("shank_l", (0.0, hw - 0.04, d.ankle_z)),
        "LHEE": ("foot_l", (-d.heel_back - 0.01, hw, d.foot_z + 0.01)),
        "LTOE": ("foot_l", (d.toe_front + 0.01, hw, d.foot_z + 0.01)),
        "LMT1": ("foot_l", (d.toe_front - 0.04, hw - 0.035, d.foot_z)),
        "LMT5": ("foot_l", (d.toe_front - 0.04, hw + 0.035, d.foot_z)),
    }
    right = {}
    for name, (seg, p) in left.items():
        seg_r = seg.replace("_l", "_r")
        right["R" + name[1:]] = (seg_r, (p[0], -p[1], p[2]))
    midline = {
        "C7": ("torso", (-0.07, 0.0, d.neck_z - 0.01)),
        "T10": ("torso", (-0.13, 0.0, hz + 0.25)),
        "CLAV": ("torso", (0.07, 0.0, sz + 0.01)),
        "STRN": ("torso", (0.131, 0.0, hz + 0.31)),
        "SACR": ("pelvis", (-d.r_pelvis, 0.0, hz - 0.02)),
    }
    return {**left, **right, **midline}


def build_skeleton(dims: BodyDims = BodyDims()) -> SkeletonModel:
    """Articulated humanoid with landmarks and markers attached."""
    d = dims
    rot = "rotation"
    trans = "translation"
    X, Y, Z = (1, 0, 0), (0, 1, 0), (0, 0, 1)
    NY = (0, -1, 0)

    def ball(stem, flex_axis, flex_bounds, abd_bounds, rot_bounds, side=""):
        return (
            Coordinate(f"{stem}_flexion{side}", rot, flex_axis, flex_bounds),
            Coordinate(f"{stem}_adduction{side}", rot, X, abd_bounds),
            Coordinate(f"{stem}_rotation{side}", rot, Z, rot_bounds),
        )

    segments = [
        Segment(
            "pelvis",
            None,
            (0.0, 0.0, d.hip_height),
            (
                Coordinate("pelvis_tx", trans, X, (-3.0, 3.0)),
                Coordinate("pelvis_ty", trans, Y, (-3.0, 3.0)),
                Coordinate("pelvis_tz", trans, Z, (-3.0, 3.0)),
                Coordinate("pelvis_rot_x", rot, X, (-0.8, 0.8)),
                Coordinate("pelvis_rot_y", rot, Y, (-1.2, 1.2)),
                Coordinate("pelvis_rot_z", rot, Z, (-1.2, 1.2)),
            ),
        ),
        Segment(
            "torso",
            "pelvis",
            (0.0, 0.0, 0.0),
            (
                Coordinate("lumbar_flexion", rot, Y, (-0.35, 1.0)),
                Coordinate("lumbar_bending", rot, X, (-0.45, 0.45)),
                Coordinate("lumbar_rotation", rot, Z, (-0.6, 0.6)),
            ),
        ),
        Segment(
            "head",
            "torso",
            (0.0, 0.0, d.torso_length),
            (
                Coordinate("neck_flexion", rot, Y, (-0.7, 0.7)),
                Coordinate("neck_bending", rot, X, (-0.6, 0.6)),
                Coordinate("neck_rotation", rot, Z, (-0.9, 0.9)),
            ),
        ),
    ]
    for side, sign in (("l", 1.0), ("r", -1.0)):
        segments += [
            Segment(
                f"upper_arm_{side}",
                "torso",
                (0.0, sign * d.shoulder_half_width, d.torso_length - d.shoulder_drop),
                ball("shoulder", NY, (-1.0, 2.8), (-1.2, 1.2), (-1.0, 1.0), f"_{side}"),
            ),
            Segment(
                f"forearm_{side}",
                f"upper_arm_{side}",
                (0.0, 0.0, -d.upper_arm_length),
                (Coordinate(f"elbow_flexion_{side}", rot, NY, (-0.05, 2.6)),),
            ),
            Segment(
                f"thigh_{side}",
                "pelvis",
                (0.0, sign * d.hip_half_width, 0.0),
                ball("hip", NY, (-0.5, 2.1), (-0.6, 0.6), (-0.7, 0.7), f"_{side}"),
            ),
            Segment(
                f"shank_{side}",
                f"thigh_{side}",
                (0.0, 0.0, -d.thigh_length),
                (Coordinate(f"knee_angle_{side}", rot, Y, (-0.05, 2.3)),),
            ),
            Segment(
                f"foot_{side}",
                f"shank_{side}",
                (0.0, 0.0, -d.shank_length),
                (Coordinate(f"ankle_angle_{side}", rot, NY, (-0.8, 0.6)),),
            ),
        ]

    # neutral world origin of each segment, for world->local conversion
    seg_origin = {
        "pelvis": (0.0, 0.0, d.hip_height),
        "torso": (0.0, 0.0, d.hip_height),
        "head": (0.0, 0.0, d.neck_z),
    }
    for side, sign in (("l", 1.0), ("r", -1.0)):
        y = sign * d.shoulder_half_width
        hy = sign * d.hip_half_width
        seg_origin[f"upper_arm_{side}"] = (0.0, y, d.shoulder_z)
        seg_origin[f"forearm_{side}"] = (0.0, y, d.elbow_z)
        seg_origin[f"thigh_{side}"] = (0.0, hy, d.hip_height)
        seg_origin[f"shank_{side}"] = (0.0, hy, d.knee_z)
        seg_origin[f"foot_{side}"] = (0.0, hy, d.ankle_z)

    landmark_segment = {
        "Nose": "head", "LEye": "head", "REye": "head", "LEar": "head", "REar": "head",
        "Neck": "torso", "LShoulder": "torso", "RShoulder": "torso",
        "MidHip": "pelvis", "LHip": "pelvis", "RHip": "pelvis",
        "LElbow": "upper_arm_l", "RElbow": "upper_arm_r",
        "LWrist": "forearm_l", "RWrist": "forearm_r",
        "LKnee": "thigh_l", "RKnee": "thigh_r",
        "LAnkle": "shank_l", "RAnkle": "shank_r",
        "LBigToe": "foot_l", "LSmallToe": "foot_l", "LHeel": "foot_l",
        "RBigToe": "foot_r", "RSmallToe": "foot_r", "RHeel": "foot_r",
    }

    markers = {}
    for name, world in landmark_neutral_positions(dims).items():
        seg = landmark_segment[name]
        markers[name] = (seg, np.subtract(world, seg_origin[seg]))
    for name, (aug_seg, world) in template_neutral_positions(dims).items():
        # augmentation segments map 1:1 onto skeleton segments here
        seg = aug_seg
        markers[name] = (seg, np.subtract(world, seg_origin[seg]))

    return SkeletonModel(
        segments,
        markers,
        angle_exports={
            "hip_flexion": "hip_flexion_r",
            "knee": "knee_angle_r",
            "elbow": "elbow_flexion_r",
        },
        name="humanoid-30dof",
    )


def default_template(dims: BodyDims = BodyDims()) -> MarkerSetTemplate:
    """Marker-set template consistent with the default skeleton."""
    landmarks = {
        n: np.asarray(p, dtype=float) for n, p in landmark_neutral_positions(dims).items()
    }
    return template_from_neutral(template_neutral_positions(dims), landmarks)


# ---------------------------------------------------------------------------
# parametric capsule mesh


def _orthonormal_basis(direction):
    d = np.asarray(direction, dtype=float)
    d = d / np.linalg.norm(d)
    helper = np.array([0.0, 0.0, 1.0]) if abs(d[2]) < 0.9 else np.array([1.0, 0.0, 0.0])
    u = np.cross(helper, d)
    u = u / np.linalg.norm(u)
    v = np.cross(d, u)
    return u, v, d


def build_capsule(p0, p1, radius, n_sectors=48, n_cap_rows=12, n_cyl_rows=8):
    """Watertight capsule: cylinder p0->p1 with hemispherical end caps.

    Returns (vertices (N,3), faces (M,3)). Faces are consistently wound.
    Degenerates to a UV sphere when p0 == p1.
    """
    p0 = np.asarray(p0, dtype=float)
    p1 = np.asarray(p1, dtype=float)
    axis = p1 - p0
    length = np.linalg.norm(axis)
    u, v, d = _orthonormal_basis(axis if length > 0 else (0.0, 0.0, 1.0))

    angles = 2.0 * np.pi * np.arange(n_sectors) / n_sectors
    circle = np.outer(np.cos(angles), u) + np.outer(np.sin(angles), v)

    rings = []  # (center, ring_radius)
    for i in range(1, n_cap_rows + 1):
        phi = -np.pi / 2.0 + (np.pi / 2.0) * i / n_cap_rows
        rings.append((p0 + radius * np.sin(phi) * d, radius * np.cos(phi)))
    if length > 0:
        for j in range(1, n_cyl_rows + 1):
            rings.append((p0 + (j / n_cyl_rows) * axis, radius))
    for i in range(1, n_cap_rows):
        phi = (np.pi / 2.0) * i / n_cap_rows
        rings.append((p1 + radius * np.sin(phi) * d, radius * np.cos(phi)))

    vertices = [p0 - radius * d]
    ring_start = []
    for center, r in rings:
        ring_start.append(len(vertices))
        vertices.extend(center + r * circle)
    pole1 = len(vertices)
    vertices.append(p1 + radius * d)

    faces = []
    first = ring_start[0]
    for k in range(n_sectors):
        faces.append((0, first + (k + 1) % n_sectors, first + k))
    for a, b in zip(ring_start[:-1], ring_start[1:]):
        for k in range(n_sectors):
            k2 = (k + 1) % n_sectors
            faces.append((a + k, a + k2, b + k))
            faces.append((a + k2, b + k2, b + k))
    last = ring_start[-1]
    for k in range(n_sectors):
        faces.append((pole1, last + k, last + (k + 1) % n_sectors))
    return np.array(vertices), np.array(faces, dtype=int)


def capsule_volume(p0, p1, radius) -> float:
    length = float(np.linalg.norm(np.subtract(p1, p0)))
    return np.pi * radius**2 * length + (4.0 / 3.0) * np.pi * radius**3


def build_body_mesh(dims: BodyDims = BodyDims(), n_sectors=48, n_cap_rows=12, n_cyl_rows=8):
    """Capsule body mesh plus analytic ground-truth measurements.

    Returns (BodyMesh, ground_truth) where ground_truth maps measurement
    codes A-Q to expected values (meters/kilograms at density 985) and
    also carries the analytic part volumes.
    """
    d = dims
    hw, sw = d.hip_half_width, d.shoulder_half_width
    capsules = {
        "head": ((0.0, 0.0, d.neck_z + 0.12), (0.0, 0.0, d.neck_z + 0.18), d.r_head),
        "neck": ((0.0, 0.0, d.neck_z - 0.06), (0.0, 0.0, d.neck_z + 0.06), d.r_neck),
        "chest": ((0.0, 0.0, d.hip_height + 0.23), (0.0, 0.0, d.hip_height + 0.41), d.r_chest),
        "abdomen": ((0.0, 0.0, d.hip_height + 0.07), (0.0, 0.0, d.hip_height + 0.21), d.r_abdomen),
        "pelvis": ((0.0, 0.0, d.hip_height - 0.03), (0.0, 0.0, d.hip_height + 0.02), d.r_pelvis),
    }
    for side, sign in (("l", 1.0), ("r", -1.0)):
        y = sign * sw
        hy = sign * hw
        capsules[f"upper_arm_{side}"] = (
            (0.0, y, d.shoulder_z - d.r_upper_arm),
            (0.0, y, d.elbow_z + d.r_upper_arm),
            d.r_upper_arm,
        )
        capsules[f"forearm_{side}"] = (
            (0.0, y, d.elbow_z - d.r_forearm),
            (0.0, y, d.wrist_z + d.r_forearm),
            d.r_forearm,
        )
        capsules[f"thigh_{side}"] = (
            (0.0, hy, d.hip_height - d.r_thigh),
            (0.0, hy, d.knee_z + d.r_thigh),
            d.r_thigh,
        )
        capsules[f"shank_{side}"] = (
            (0.0, hy, d.knee_z - d.r_shank),
            (0.0, hy, d.ankle_z + d.r_shank),
            d.r_shank,
        )
        capsules[f"foot_{side}"] = (
            (-d.heel_back + d.r_foot, hy, d.foot_z + 0.025),
            (d.toe_front - d.r_foot, hy, d.foot_z + 0.025),
            d.r_foot,
        )

    vertices = []
    faces = []
    part_range = {}
    for name, (p0, p1, r) in capsules.items():
        vs, fs = build_capsule(p0, p1, r, n_sectors, n_cap_rows, n_cyl_rows)
        offset = len(vertices)
        part_range[name] = (offset, offset + len(vs))
        vertices.extend(vs)
        faces.extend(fs + offset)
    vertices = np.array(vertices)
    faces = np.array(faces, dtype=int)

    def snap(part, point):
        lo, hi = part_range[part]
        idx = lo + int(np.argmin(np.sum((vertices[lo:hi] - point) ** 2, axis=1)))
        return idx

    head_p0, head_p1, _ = capsules["head"]
    chest_p1 = capsules["chest"][1]
    anchor = {
        "HEAD_TOP": ("head", (0.0, 0.0, head_p1[2] + d.r_head)),
        "HEAD_LEFT_TEMPLE": ("head", (0.0, d.r_head, (head_p0[2] + head_p1[2]) / 2)),
        "NECK_ADAM_APPLE": ("neck", (d.r_neck, 0.0, d.neck_z + 0.01)),
        "SHOULDER_TOP": ("chest", (0.0, 0.0, chest_p1[2] + d.r_chest)),
        "CHEST": ("chest", (d.r_chest, 0.0, d.hip_height + 0.31)),
        "WAIST": ("abdomen", (d.r_abdomen, 0.0, d.hip_height + 0.14)),
        "LEFT_SHOULDER": ("upper_arm_l", (0.0, sw, d.shoulder_z)),
        "RIGHT_SHOULDER": ("upper_arm_r", (0.0, -sw, d.shoulder_z)),
        "LEFT_ELBOW": ("upper_arm_l", (0.0, sw, d.elbow_z)),
        "RIGHT_ELBOW": ("upper_arm_r", (0.0, -sw, d.elbow_z)),
        "LEFT_FOREARM": ("forearm_l", (d.r_forearm, sw, d.elbow_z - 0.13)),
        "LEFT_WRIST": ("forearm_l", (d.r_forearm, sw, d.wrist_z + 0.05)),
        "RIGHT_WRIST": ("forearm_r", (d.r_forearm, -sw, d.wrist_z + 0.05)),
        "LEFT_HIP": ("pelvis", (0.0, d.r_pelvis, d.hip_height)),
        "RIGHT_HIP": ("pelvis", (0.0, -d.r_pelvis, d.hip_height)),
        "LEFT_THIGH": ("thigh_l", (d.r_thigh, hw, d.hip_height - 0.22)),
        "LEFT_KNEE": ("thigh_l", (0.0, hw, d.knee_z)),
        "RIGHT_KNEE": ("thigh_r", (0.0, -hw, d.knee_z)),
        "LEFT_CALF": ("shank_l", (d.r_shank, hw, d.knee_z - 0.16)),
        "LEFT_ANKLE": ("shank_l", (d.r_shank, hw, d.ankle_z + 0.07)),
        "RIGHT_ANKLE": ("shank_r", (d.r_shank, -hw, d.ankle_z + 0.07)),
        "LEFT_HEEL": ("foot_l", (-d.heel_back, hw, d.foot_z + 0.025)),
        "RIGHT_HEEL": ("foot_r", (-d.heel_back, -hw, d.foot_z + 0.025)),
    }
    landmark_table = {}
    snapped = {}
    for name, (part, point) in anchor.items():
        idx = snap(part, np.asarray(point))
        landmark_table[name] = idx
        snapped[name] = vertices[idx]

    torso_parts = ("neck", "chest", "abdomen", "pelvis")
    arm_l_parts = ("upper_arm_l", "forearm_l")
    arm_r_parts = ("upper_arm_r", "forearm_r")

    def part_indices(parts):
        return np.concatenate([np.arange(*part_range[p]) for p in parts])

    segment_sets = {name: np.arange(*rng) for name, rng in part_range.items()}
    segment_sets["torso"] = part_indices(torso_parts)
    segment_sets["arm_left"] = part_indices(arm_l_parts)
    segment_sets["arm_right"] = part_indices(arm_r_parts)

    mesh = BodyMesh(
        vertices=vertices,
        faces=faces,
        landmark_table=landmark_table,
        segment_vertex_sets=segment_sets,
    )

    def dist(a, b):
        return float(np.linalg.norm(snapped[a] - snapped[b]))

    volumes = {name: capsule_volume(*caps) for name, caps in capsules.items()}
    v_whole = sum(volumes.values())
    v_torso = sum(volumes[p] for p in torso_parts)
    v_arm_l = sum(volumes[p] for p in arm_l_parts)
    v_arm_r = sum(volumes[p] for p in arm_r_parts)
    rho = 985.0
    mid_hip = (snapped["LEFT_HIP"] + snapped["RIGHT_HIP"]) / 2.0
    ground_truth = {
        "A": 2 * np.pi * d.r_head,
        "B": 2 * np.pi * d.r_neck,
        "C": float(np.linalg.norm(snapped["SHOULDER_TOP"] - mid_hip)),
        "D": 2 * np.pi * d.r_chest,
        "E": 2 * np.pi * d.r_abdomen,
        "F": dist("LEFT_SHOULDER", "RIGHT_SHOULDER"),
        "G": 2 * np.pi * d.r_forearm,
        "H": 2 * np.pi * d.r_forearm,
        "I": dist("LEFT_SHOULDER", "LEFT_ELBOW") + dist("LEFT_ELBOW", "LEFT_WRIST"),
        "J": 2 * np.pi * d.r_thigh,
        "K": 2 * np.pi * d.r_shank,
        "L": 2 * np.pi * d.r_shank,
        "M": dist("HEAD_TOP", "LEFT_HEEL"),
        "N": rho * v_whole,
        "O": rho * v_torso,
        "P": rho * v_arm_l,
        "Q": rho * v_arm_r,
        "volume_whole_m3": v_whole,
        "volume_torso_m3": v_torso,
        "volume_arm_left_m3": v_arm_l,
        "volume_arm_right_m3": v_arm_r,
    }
    return mesh, ground_truth
