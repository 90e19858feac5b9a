"""Expansion of the 21 triangulated landmarks to a 57-marker set.

The baseline augmenter attaches each output marker rigidly to a body
segment whose local frame is rebuilt every frame from the triangulated
landmarks: origin at a proximal landmark, longitudinal axis toward a
distal landmark, lateral axis orthogonalized from a bilateral width pair
(hip or shoulder line), third axis by cross product. Trained per-frame
predictors can be slotted in through the same interface.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import MissingDefiningLandmark, ModelArtifactMissing, WindowTooLong
from .filtering import MarkerTrajectory, fill_gaps
from .landmarks import SKELETAL_LANDMARKS

N_OUTPUT_MARKERS = 57


@dataclass(frozen=True)
class SegmentFrameDef:
    """Landmarks defining one segment's local frame."""

    origin: str
    axis: tuple  # (from, to): longitudinal direction, local +z
    width: tuple  # (from, to): bilateral pair, local +y after orthogonalization


SEGMENT_FRAMES = {
    "pelvis": SegmentFrameDef("MidHip", ("MidHip", "Neck"), ("RHip", "LHip")),
    "torso": SegmentFrameDef("Neck", ("MidHip", "Neck"), ("RShoulder", "LShoulder")),
    "head": SegmentFrameDef("Nose", ("Neck", "Nose"), ("RShoulder", "LShoulder")),
    "upper_arm_l": SegmentFrameDef("LShoulder", ("LShoulder", "LElbow"), ("RShoulder", "LShoulder")),
    "upper_arm_r": SegmentFrameDef("RShoulder", ("RShoulder", "RElbow"), ("RShoulder", "LShoulder")),
    "forearm_l": SegmentFrameDef("LElbow", ("LElbow", "LWrist"), ("RShoulder", "LShoulder")),
    "forearm_r": SegmentFrameDef("RElbow", ("RElbow", "RWrist"), ("RShoulder", "LShoulder")),
    "thigh_l": SegmentFrameDef("LHip", ("LHip", "LKnee"), ("RHip", "LHip")),
    "thigh_r": SegmentFrameDef("RHip", ("RHip", "RKnee"), ("RHip", "LHip")),
    "shank_l": SegmentFrameDef("LKnee", ("LKnee", "LAnkle"), ("RHip", "LHip")),
    "shank_r": SegmentFrameDef("RKnee", ("RKnee", "RAnkle"), ("RHip", "LHip")),
    "foot_l": SegmentFrameDef("LHeel", ("LHeel", "LBigToe"), ("RHip", "LHip")),
    "foot_r": SegmentFrameDef("RHeel", ("RHeel", "RBigToe"), ("RHip", "LHip")),
}


def _build_frame(points: dict, spec: SegmentFrameDef):
    origin = points[spec.origin]
    z = points[spec.axis[1]] - points[spec.axis[0]]
    nz = np.linalg.norm(z)
    w = points[spec.width[1]] - points[spec.width[0]]
    if nz < 1e-12:
        raise MissingDefiningLandmark("degenerate longitudinal axis")
    z = z / nz
    y = w - (w @ z) * z
    ny = np.linalg.norm(y)
    if ny < 1e-8 * max(np.linalg.norm(w), 1.0):
        raise MissingDefiningLandmark("width pair parallel to the longitudinal axis")
    y = y / ny
    x = np.cross(y, z)
    return origin, np.column_stack([x, y, z])


def segment_frames(points: dict, skip_missing: bool = False) -> dict:
    """Right-handed orthonormal frame per segment from landmark positions.

    ``points`` maps landmark names to world positions; absent or gapped
    landmarks are simply missing from the dict. With skip_missing a
    partial result is returned; otherwise the first incomplete segment
    raises MissingDefiningLandmark.
    """
    frames = {}
    for name, spec in SEGMENT_FRAMES.items():
        needed = {spec.origin, *spec.axis, *spec.width}
        missing = [n for n in needed if n not in points]
        if missing:
            if skip_missing:
                continue
            raise MissingDefiningLandmark(
                f"segment {name!r}: landmarks {missing} unavailable"
            )
        try:
            frames[name] = _build_frame(points, spec)
        except MissingDefiningLandmark:
            if skip_missing:
                continue
            raise
    return frames


@dataclass(frozen=True)
class MarkerSetTemplate:
    """Ordered marker names with segment attachment and local offsets."""

    names: tuple
    segment_of: dict
    local_offset: dict

    def __post_init__(self):
        if len(self.names) != N_OUTPUT_MARKERS:
            raise ValueError(f"template must define {N_OUTPUT_MARKERS} markers")
        if len(set(self.names)) != len(self.names):
            raise ValueError("marker names must be unique")
        for name in self.names:
            seg = self.segment_of.get(name)
            if seg not in SEGMENT_FRAMES:
                raise ValueError(f"marker {name!r}: unknown segment {seg!r}")
            if name not in self.local_offset:
                raise ValueError(f"marker {name!r}: missing offset")
        object.__setattr__(
            self,
            "local_offset",
            {n: np.asarray(v, dtype=float).reshape(3) for n, v in self.local_offset.items()},
        )


def template_from_neutral(marker_points: dict, landmark_points: dict) -> MarkerSetTemplate:
    """Derive template offsets from a neutral pose.

    ``marker_points`` maps each of the 57 markers to (segment, world
    position) in the neutral pose; ``landmark_points`` gives the 21
    landmark positions of the same pose. Offsets are expressed in the
    segment frames rebuilt from those landmarks, so the baseline
    augmenter reproduces the neutral constellation exactly.
    """
    frames = segment_frames(landmark_points)
    names = tuple(marker_points)
    segment_of = {}
    offsets = {}
    for name, (seg, world) in marker_points.items():
        origin, rot = frames[seg]
        segment_of[name] = seg
        offsets[name] = rot.T @ (np.asarray(world, dtype=float) - origin)
    return MarkerSetTemplate(names=names, segment_of=segment_of, local_offset=offsets)


@dataclass(frozen=True)
class Augmenter:
    """Augmentation strategy: rigid baseline or external per-frame model.

    External predictors receive a (window, 21, 3) array of landmark
    positions (ordered as SKELETAL_LANDMARKS, gap-filled) and return
    (57, 3) marker positions for the window's last frame.
    """

    kind: str = "baseline_rigid"
    window: int = 1
    predict: object = None

    def __post_init__(self):
        if self.kind not in ("baseline_rigid", "external_model"):
            raise ValueError(f"unknown augmenter kind {self.kind!r}")
        if self.window < 1:
            raise ValueError("window must be >= 1")


def _check_alignment(trajectories: dict):
    trajs = list(trajectories.values())
    if not trajs:
        raise ValueError("empty trajectory set")
    frames = trajs[0].frames
    for t in trajs[1:]:
        if len(t) != len(frames) or not np.array_equal(t.frames, frames):
            raise ValueError("landmark trajectories must share a common frame range")
    return frames, trajs[0].rate


def augment_baseline(trajectories: dict, template: MarkerSetTemplate) -> dict:
    """Rigid-offset placement of all 57 markers, frame by frame.

    Frames where a segment's defining landmarks are gapped produce gaps
    for that segment's markers.
    """
    frames, rate = _check_alignment(trajectories)
    n = len(frames)
    xyz = {name: np.full((n, 3), np.nan) for name in template.names}
    gaps = {name: np.ones(n, dtype=bool) for name in template.names}
    for row in range(n):
        points = {
            lm: traj.xyz[row]
            for lm, traj in trajectories.items()
            if not traj.gap_mask[row]
        }
        seg_frames = segment_frames(points, skip_missing=True)
        for name in template.names:
            frame = seg_frames.get(template.segment_of[name])
            if frame is None:
                continue
            origin, rot = frame
            xyz[name][row] = origin + rot @ template.local_offset[name]
            gaps[name][row] = False
    return {
        name: MarkerTrajectory(name, frames, xyz[name], gaps[name], rate)
        for name in template.names
    }


def augment(trajectories: dict, augmenter: Augmenter, template: MarkerSetTemplate) -> dict:
    """Dispatch to the configured augmentation strategy."""
    if augmenter.kind == "baseline_rigid":
        return augment_baseline(trajectories, template)

    if augmenter.predict is None:
        raise ModelArtifactMissing("external augmenter has no predictor configured")
    frames, rate = _check_alignment(trajectories)
    n = len(frames)
    if n < augmenter.window:
        raise WindowTooLong(f"sequence of {n} frames < window {augmenter.window}")

    filled = np.stack(
        [fill_gaps(trajectories[lm]).xyz for lm in SKELETAL_LANDMARKS], axis=1
    )  # (n, 21, 3)
    out = np.empty((n, N_OUTPUT_MARKERS, 3))
    for i in range(n):
        lo = i - augmenter.window + 1
        if lo < 0:
            window = np.concatenate([np.repeat(filled[:1], -lo, axis=0), filled[: i + 1]])
        else:
            window = filled[lo : i + 1]
        pred = np.asarray(augmenter.predict(window), dtype=float)
        if pred.shape != (N_OUTPUT_MARKERS, 3):
            raise ValueError(
                f"external model returned {pred.shape}, expected ({N_OUTPUT_MARKERS}, 3)"
            )
        out[i] = pred
    no_gaps = np.zeros(n, dtype=bool)
    return {
        name: MarkerTrajectory(name, frames, out[:, mi], no_gaps, rate)
        for mi, name in enumerate(template.names)
    }
