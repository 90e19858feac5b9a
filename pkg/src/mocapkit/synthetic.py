"""Synthetic capture rig: scripted motions, projection, noise, occlusion.

Generates complete datasets with every intermediate ground truth so the
whole pipeline can be verified end to end: scripted joint coordinates,
true 3D landmarks and markers, per-camera keypoint files with injected
pixel noise and occlusion, the rig calibration file, and the body mesh
with analytic measurements. Generation is deterministic under a fixed
seed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import fileio
from .augmentation import augment_baseline
from .camera import CameraModel, look_at_rotation, project
from .errors import SubjectOutOfView
from .filtering import MarkerTrajectory
from .humanoid import (
    BodyDims,
    build_body_mesh,
    build_skeleton,
    default_template,
)
from .kinematics import JointAngleSeries, joint_angles, marker_positions, rotation_about
from .landmarks import LANDMARK_NAMES, N_LANDMARKS


@dataclass(frozen=True)
class CameraPlacement:
    id: str
    position: tuple
    target: tuple
    yaw_deg: float = 0.0  # extra yaw of the optical axis about world Z


@dataclass(frozen=True)
class RigLayout:
    """Camera placements plus shared intrinsics for the synthetic rig."""

    placements: tuple
    image_size: tuple = (1920, 1080)
    focal_px: float = 600.0

    def build(self) -> list:
        w, h = self.image_size
        k = np.array([[self.focal_px, 0.0, w / 2.0], [0.0, self.focal_px, h / 2.0], [0.0, 0.0, 1.0]])
        cameras = []
        for p in self.placements:
            position = np.asarray(p.position, dtype=float)
            forward = np.asarray(p.target, dtype=float) - position
            if p.yaw_deg:
                forward = rotation_about((0.0, 0.0, 1.0), np.radians(p.yaw_deg)) @ forward
            rotation = look_at_rotation(position, position + forward)
            cameras.append(
                CameraModel(
                    id=p.id,
                    intrinsics=k,
                    rotation=rotation,
                    center=position,
                    image_size=self.image_size,
                )
            )
        return cameras


def standard_rig(center=(0.0, 0.0, 0.9), height: float = 1.05) -> RigLayout:
    """Four-camera layout: front/back pair 3.67 m apart, yawed 5 degrees
    in opposite senses; left/right lateral pair 2.45 m apart."""
    cx, cy, _ = center
    return RigLayout(
        placements=(
            CameraPlacement("front", (cx + 1.835, cy, height), center, yaw_deg=5.0),
            CameraPlacement("back", (cx - 1.835, cy, height), center, yaw_deg=-5.0),
            CameraPlacement("left", (cx, cy + 1.225, height), center),
            CameraPlacement("right", (cx, cy - 1.225, height), center),
        )
    )


@dataclass(frozen=True)
class MotionScript:
    """Named task with per-coordinate curves q(t); unset coordinates stay 0."""

    name: str
    curves: dict
    duration: float = 10.0
    rate: float = 30.0

    @property
    def n_frames(self) -> int:
        return int(round(self.duration * self.rate))

    def sample(self, model) -> np.ndarray:
        """(n_frames, n_coordinates) coordinate matrix."""
        t = np.arange(self.n_frames) / self.rate
        qs = np.zeros((self.n_frames, model.n_coordinates))
        for name, curve in self.curves.items():
            qs[:, model.coordinate_index(name)] = [curve(ti) for ti in t]
        return qs


def _bump(duration, cycles=1.0):
    def f(t):
        return np.sin(np.pi * cycles * t / duration) ** 2

    return f


def leaning_script(duration=10.0, rate=30.0) -> MotionScript:
    """Forward lean with a reaching right arm (hip-hinge motion)."""
    s = _bump(duration)
    return MotionScript(
        "leaning",
        {
            "pelvis_rot_y": lambda t: 0.25 * s(t),
            "hip_flexion_l": lambda t: 0.25 * s(t),
            "hip_flexion_r": lambda t: 0.25 * s(t),
            "shoulder_flexion_r": lambda t: 1.1 * s(t),
            "elbow_flexion_r": lambda t: 0.5 * s(t),
            "shoulder_flexion_l": lambda t: 0.2 * s(t),
        },
        duration,
        rate,
    )


def bending_script(duration=10.0, rate=30.0) -> MotionScript:
    """Full forward bend with extended knees."""
    s = _bump(duration)
    return MotionScript(
        "bending",
        {
            "pelvis_rot_y": lambda t: 0.35 * s(t),
            "hip_flexion_l": lambda t: 1.0 * s(t),
            "hip_flexion_r": lambda t: 1.0 * s(t),
            "shoulder_flexion_l": lambda t: 0.5 * s(t),
            "shoulder_flexion_r": lambda t: 0.5 * s(t),
            "elbow_flexion_l": lambda t: 0.3 * s(t),
            "elbow_flexion_r": lambda t: 0.3 * s(t),
        },
        duration,
        rate,
    )


def squatting_script(duration=10.0, rate=30.0, dims: BodyDims = BodyDims()) -> MotionScript:
    """Squat with planted feet: thigh/shin tilts plus a root drop."""
    s = _bump(duration)
    a_max, shin_max, pitch_max = 0.9, 0.35, 0.25

    def root_drop(t):
        a = a_max * s(t)
        b = shin_max * s(t)
        return dims.thigh_length * (np.cos(a) - 1.0) + dims.shank_length * (np.cos(b) - 1.0)

    return MotionScript(
        "squatting",
        {
            "pelvis_rot_y": lambda t: pitch_max * s(t),
            "pelvis_tz": root_drop,
            "hip_flexion_l": lambda t: (a_max + pitch_max) * s(t),
            "hip_flexion_r": lambda t: (a_max + pitch_max) * s(t),
            "knee_angle_l": lambda t: (a_max + shin_max) * s(t),
            "knee_angle_r": lambda t: (a_max + shin_max) * s(t),
            "ankle_angle_l": lambda t: shin_max * s(t),
            "ankle_angle_r": lambda t: shin_max * s(t),
            "shoulder_flexion_l": lambda t: 0.9 * s(t),
            "shoulder_flexion_r": lambda t: 0.9 * s(t),
            "elbow_flexion_l": lambda t: 0.6 * s(t),
            "elbow_flexion_r": lambda t: 0.6 * s(t),
        },
        duration,
        rate,
    )


def walking_script(duration=10.0, rate=30.0, stride_hz=0.9) -> MotionScript:
    """Sagittal walking in place: anti-phase hips/arms, single-peak knees."""
    w = 2.0 * np.pi * stride_hz

    def knee(phase):
        return lambda t: 0.66 * max(np.sin(w * t + phase), 0.0) ** 2

    return MotionScript(
        "walking",
        {
            "hip_flexion_l": lambda t: 0.35 * np.sin(w * t),
            "hip_flexion_r": lambda t: -0.35 * np.sin(w * t),
            "knee_angle_l": knee(0.0),
            "knee_angle_r": knee(np.pi),
            "ankle_angle_l": lambda t: 0.12 * np.sin(w * t + 0.5),
            "ankle_angle_r": lambda t: -0.12 * np.sin(w * t + 0.5),
            "shoulder_flexion_l": lambda t: -0.25 * np.sin(w * t),
            "shoulder_flexion_r": lambda t: 0.25 * np.sin(w * t),
            "elbow_flexion_l": lambda t: 0.35 - 0.25 * np.sin(w * t),
            "elbow_flexion_r": lambda t: 0.35 + 0.25 * np.sin(w * t),
            "pelvis_tz": lambda t: -0.02 * (0.5 - 0.5 * np.cos(2.0 * w * t)),
        },
        duration,
        rate,
    )


SCRIPTS = {
    "leaning": leaning_script,
    "bending": bending_script,
    "squatting": squatting_script,
    "walking": walking_script,
}


@dataclass(frozen=True)
class NoiseSpec:
    """Detector imperfection model, reproducible under a fixed seed.

    Occlusion hits a landmark-frame as a whole (all cameras lose it);
    occluded detections are written with confidences far below any gate.
    """

    pixel_sigma: float = 0.0
    occlusion_rate: float = 0.0
    seed: int = 0
    visible_confidence: tuple = (0.88, 0.05)  # mean, std (clipped to [0,1])
    occluded_confidence: tuple = (0.05, 0.35)  # uniform range

    def __post_init__(self):
        if not 0.0 <= self.occlusion_rate <= 1.0:
            raise ValueError("occlusion_rate must be in [0, 1]")
        if self.pixel_sigma < 0:
            raise ValueError("pixel_sigma must be nonnegative")


def generate(
    script: MotionScript,
    rig: RigLayout,
    noise: NoiseSpec = NoiseSpec(),
    out_dir=None,
    dims: BodyDims = BodyDims(),
) -> dict:
    """Build a full synthetic dataset bundle.

    Returns a dict with in-memory ground truth (coordinate matrix, marker
    trajectories, per-camera keypoint frame dicts, cameras) plus the
    written paths when ``out_dir`` is given.
    """
    model = build_skeleton(dims)
    template = default_template(dims)
    cameras = rig.build()
    rng = np.random.default_rng(noise.seed)

    n = script.n_frames
    frames = np.arange(n)
    qs = script.sample(model)

    landmark_xyz = np.zeros((n, N_LANDMARKS, 3))
    for i in range(n):
        pos = marker_positions(model, qs[i])
        for lid, name in enumerate(LANDMARK_NAMES):
            landmark_xyz[i, lid] = pos[name]

    no_gaps = np.zeros(n, dtype=bool)
    landmark_trajectories = {
        name: MarkerTrajectory(name, frames, landmark_xyz[:, lid], no_gaps, script.rate)
        for lid, name in enumerate(LANDMARK_NAMES)
    }
    marker_trajectories = augment_baseline(landmark_trajectories, template)

    angles = {name: np.zeros(n) for name in model.angle_exports}
    for i in range(n):
        for name, value in joint_angles(qs[i], model).items():
            angles[name][i] = value
    gt_angles = JointAngleSeries(
        frames=frames,
        times=frames / script.rate,
        angles=angles,
        residuals=np.zeros(n),
        flags=tuple([None] * n),
    )

    # occlusion is drawn once per landmark-frame, independent of cameras
    occluded = rng.random((n, N_LANDMARKS)) < noise.occlusion_rate

    width, height = rig.image_size
    keypoints = {cam.id: {} for cam in cameras}
    for cam in cameras:
        for i in range(n):
            pts = np.zeros((N_LANDMARKS, 3))
            for lid in range(N_LANDMARKS):
                world = landmark_xyz[i, lid]
                z_cam = cam.rotation[2] @ (world - cam.center)
                if z_cam <= 0:
                    raise SubjectOutOfView(
                        f"{script.name}: landmark {LANDMARK_NAMES[lid]} behind camera "
                        f"{cam.id} at frame {i}"
                    )
                uv = project(cam, world).uv
                if not (0 <= uv[0] < width and 0 <= uv[1] < height):
                    raise SubjectOutOfView(
                        f"{script.name}: landmark {LANDMARK_NAMES[lid]} outside camera "
                        f"{cam.id} image at frame {i}"
                    )
                uv_noisy = uv + rng.normal(0.0, noise.pixel_sigma, 2) if noise.pixel_sigma else uv
                if occluded[i, lid]:
                    conf = rng.uniform(*noise.occluded_confidence)
                else:
                    conf = float(np.clip(rng.normal(*noise.visible_confidence), 0.0, 1.0))
                pts[lid] = (uv_noisy[0], uv_noisy[1], conf)
            keypoints[cam.id][i] = pts

    mesh, mesh_gt = build_body_mesh(dims)

    bundle = {
        "script": script,
        "model": model,
        "template": template,
        "cameras": cameras,
        "coordinates": qs,
        "landmark_trajectories": landmark_trajectories,
        "marker_trajectories": marker_trajectories,
        "gt_angles": gt_angles,
        "keypoints": keypoints,
        "occluded": occluded,
        "mesh": mesh,
        "mesh_gt": mesh_gt,
    }

    if out_dir is not None:
        out = Path(out_dir)
        (out / "keypoints").mkdir(parents=True, exist_ok=True)
        for cam_id, cam_frames in keypoints.items():
            fileio.write_keypoints(out / "keypoints", cam_id, cam_frames)
        fileio.write_calibration(cameras, out / "calibration.json")
        fileio.write_template(template, out / "template.json")
        fileio.write_skeleton(model, out / "model.json")
        _write_coordinates_csv(out / "gt" / "coordinates.csv", model, frames, script.rate, qs)
        fileio.write_angles_csv(gt_angles, out / "gt" / "angles.csv")
        fileio.write_trc(landmark_trajectories, out / "gt" / "landmarks.trc")
        fileio.write_trc(marker_trajectories, out / "gt" / "markers57.trc")
        fileio._dump_json(
            {
                "schema_version": fileio.SCHEMA_VERSION,
                "occluded": [
                    [int(i), int(lid)] for i, lid in np.argwhere(occluded)
                ],
            },
            out / "gt" / "occlusions.json",
        )
        fileio.write_mesh_obj(mesh, out / "mesh" / "body.obj")
        fileio.write_mesh_sidecar(mesh, out / "mesh" / "landmarks.json")
        fileio._dump_json(
            {"schema_version": fileio.SCHEMA_VERSION, **{k: float(v) for k, v in mesh_gt.items()}},
            out / "mesh" / "measurements.json",
        )
        config = {
            "task": script.name,
            "duration": script.duration,
            "rate": script.rate,
            "pixel_sigma": noise.pixel_sigma,
            "occlusion_rate": noise.occlusion_rate,
            "seed": noise.seed,
            "image_size": list(rig.image_size),
            "focal_px": rig.focal_px,
        }
        fileio.write_manifest(out / "manifest.json", inputs={}, config=config)
        bundle["out_dir"] = out
    return bundle


def _write_coordinates_csv(path, model, frames, rate, qs):
    import csv

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["frame", "time"] + list(model.coordinate_names))
        for i, frame in enumerate(frames):
            writer.writerow(
                [int(frame), f"{frame / rate:.6f}"] + [f"{v:.9f}" for v in qs[i]]
            )
