"""Confidence-weighted multi-view triangulation with gating.

Each observation contributes two rows, scaled linearly by its confidence,
to a stacked homogeneous system; the 3D point is the right singular
vector of the smallest singular value. Views are gated twice: detections
below the confidence floor are dropped before the solve, and views whose
reprojection error exceeds the pixel gate are greedily removed (worst
first) with a re-solve after each removal, until every remaining view
passes or too few views remain.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .camera import CameraModel, PixelPoint, W_EPS
from .errors import (
    EmptySequence,
    FrameIndexMismatch,
    InconsistentLandmark,
    NumericalDegeneracy,
)
from .filtering import MarkerTrajectory
from .landmarks import LANDMARK_NAMES, N_LANDMARKS

ACCEPTED = "accepted"
EXCLUDED_LOW_CONFIDENCE = "excluded_low_confidence"
EXCLUDED_REPROJECTION = "excluded_reprojection"
INSUFFICIENT_VIEWS = "insufficient_views"


@dataclass(frozen=True)
class GateConfig:
    """Gating thresholds for triangulation."""

    confidence_min: float = 0.6
    reprojection_max: float = 8.0
    min_views: int = 2

    def __post_init__(self):
        if not 0.0 < self.confidence_min <= 1.0:
            raise ValueError("confidence_min must be in (0, 1]")
        if self.reprojection_max <= 0:
            raise ValueError("reprojection_max must be positive")
        if self.min_views < 2:
            raise ValueError("min_views must be >= 2")


# "default" is the processing preset (0.6 / 8 px); "validation" is the
# looser preset used for whole-pipeline runs (0.55 / 10 px).
GATE_PRESETS = {
    "default": GateConfig(confidence_min=0.6, reprojection_max=8.0, min_views=2),
    "validation": GateConfig(confidence_min=0.55, reprojection_max=10.0, min_views=2),
}


@dataclass(frozen=True)
class Observation:
    """One camera's detection of one landmark in one frame."""

    camera_id: str
    landmark_id: int
    pixel: PixelPoint

    def __post_init__(self):
        if not 0 <= self.landmark_id < N_LANDMARKS:
            raise ValueError(f"landmark id {self.landmark_id} outside the active set")


@dataclass(frozen=True)
class TriangulatedPoint:
    """Result of triangulating one landmark in one frame.

    ``xyz`` is NaN unless at least one solve succeeded; only points with
    status == "accepted" may be consumed downstream (others are gaps).
    ``reprojection_errors`` maps contributing camera ids to pixel errors
    of the final solve.
    """

    xyz: np.ndarray
    confidence: float
    reprojection_errors: dict
    status: str

    @property
    def accepted(self) -> bool:
        return self.status == ACCEPTED


@dataclass(frozen=True)
class KeypointFrame:
    """All 25 landmark detections of one camera at one frame index.

    ``points`` is (25, 3): pixel x, pixel y, confidence. Undetected
    landmarks carry confidence <= 0 (the common all-zero triple).
    """

    camera_id: str
    frame_index: int
    points: np.ndarray

    def __post_init__(self):
        pts = np.array(self.points, dtype=float).reshape(N_LANDMARKS, 3)
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)


def _solve_dlt(rows: np.ndarray) -> np.ndarray:
    """Smallest-singular-value solution of the stacked system, dehomogenized."""
    _, _, vt = np.linalg.svd(rows)
    y = vt[-1]
    if abs(y[3]) < W_EPS:
        raise NumericalDegeneracy("triangulated point at infinity (w ~ 0)")
    return y[:3] / y[3]


def _observation_rows(obs: Observation, matrix: np.ndarray) -> np.ndarray:
    c = obs.pixel.confidence
    x, y = obs.pixel.uv
    return np.stack([c * (matrix[0] - x * matrix[2]), c * (matrix[1] - y * matrix[2])])


def triangulate(
    observations: list, rig: dict | list, gates: GateConfig = GATE_PRESETS["default"]
) -> TriangulatedPoint:
    """Triangulate one landmark from per-camera observations.

    ``rig`` maps camera ids to CameraModel (a list of models is accepted).
    Observations below the confidence gate are dropped first; the solve
    then iterates, removing the worst-reprojecting view, until all
    remaining views pass the pixel gate or fewer than ``min_views``
    remain.
    """
    if isinstance(rig, (list, tuple)):
        rig = {cam.id: cam for cam in rig}
    if not observations:
        return TriangulatedPoint(np.full(3, np.nan), 0.0, {}, INSUFFICIENT_VIEWS)

    ids = {o.landmark_id for o in observations}
    if len(ids) > 1:
        raise InconsistentLandmark(f"observations mix landmark ids {sorted(ids)}")
    for o in observations:
        if o.camera_id not in rig:
            raise KeyError(f"camera {o.camera_id!r} not in rig")

    survivors = [o for o in observations if o.pixel.confidence >= gates.confidence_min]
    if len(survivors) < gates.min_views:
        status = EXCLUDED_LOW_CONFIDENCE if survivors else INSUFFICIENT_VIEWS
        return TriangulatedPoint(np.full(3, np.nan), 0.0, {}, status)

    matrices = {o.camera_id: rig[o.camera_id].projection_matrix.matrix for o in survivors}

    views = list(survivors)
    while True:
        rows = np.vstack([_observation_rows(o, matrices[o.camera_id]) for o in views])
        xyz = _solve_dlt(rows)
        errors = {}
        for o in views:
            uv = matrices[o.camera_id] @ np.append(xyz, 1.0)
            errors[o.camera_id] = float(np.linalg.norm(uv[:2] / uv[2] - o.pixel.uv))
        worst = max(views, key=lambda o: errors[o.camera_id])
        conf = float(np.mean([o.pixel.confidence for o in views]))
        if errors[worst.camera_id] <= gates.reprojection_max:
            return TriangulatedPoint(xyz, conf, errors, ACCEPTED)
        if len(views) - 1 < gates.min_views:
            # a view still fails the gate but no more can be removed
            return TriangulatedPoint(xyz, conf, errors, EXCLUDED_REPROJECTION)
        views.remove(worst)


def triangulate_frame(
    frames: list, rig: dict | list, gates: GateConfig = GATE_PRESETS["default"]
) -> dict:
    """Triangulate every landmark of one synchronized multi-camera frame.

    Returns a dict landmark_id -> TriangulatedPoint covering all 25 slots;
    landmarks absent from every camera come back as insufficient_views.
    """
    if isinstance(rig, (list, tuple)):
        rig = {cam.id: cam for cam in rig}
    indices = {f.frame_index for f in frames}
    if len(indices) > 1:
        raise FrameIndexMismatch(f"frames mix indices {sorted(indices)}")

    result = {}
    for lid in range(N_LANDMARKS):
        observations = []
        for f in frames:
            x, y, c = f.points[lid]
            if c > 0 and np.isfinite(x) and np.isfinite(y):
                observations.append(
                    Observation(f.camera_id, lid, PixelPoint(np.array([x, y]), float(c)))
                )
        result[lid] = triangulate(observations, rig, gates)
    return result


@dataclass(frozen=True)
class ExclusionStats:
    """Sequence-level gating statistics (excluded share, accepted errors)."""

    task: str
    n_frames: int
    n_landmarks: int
    excluded_percent: float
    mean_reprojection_px: float
    std_reprojection_px: float

    def as_dict(self) -> dict:
        return {
            "task": self.task,
            "frames": self.n_frames,
            "landmarks": self.n_landmarks,
            "excluded_percent": self.excluded_percent,
            "mean_reprojection_px": self.mean_reprojection_px,
            "std_reprojection_px": self.std_reprojection_px,
        }


def exclusion_stats(sequence: list, task: str = "") -> ExclusionStats:
    """Excluded-marker percentage and accepted reprojection-error stats.

    ``sequence`` is a list of triangulate_frame results. Each accepted
    point contributes the mean of its per-camera absolute reprojection
    errors; the summary reports mean and population std of those values.
    """
    if not sequence:
        raise EmptySequence("no frames to summarize")
    total = 0
    excluded = 0
    accepted_errors = []
    for frame in sequence:
        for point in frame.values():
            total += 1
            if point.accepted:
                accepted_errors.append(np.mean(list(point.reprojection_errors.values())))
            else:
                excluded += 1
    errs = np.array(accepted_errors)
    return ExclusionStats(
        task=task,
        n_frames=len(sequence),
        n_landmarks=len(sequence[0]),
        excluded_percent=100.0 * excluded / total,
        mean_reprojection_px=float(errs.mean()) if errs.size else 0.0,
        std_reprojection_px=float(errs.std()) if errs.size else 0.0,
    )


def collect_trajectories(frame_results: list, rate: float = 30.0) -> dict:
    """Assemble per-landmark trajectories from sequential frame results.

    ``frame_results`` is a list of (frame_index, triangulate_frame result)
    in increasing frame order. Non-accepted points become gap frames with
    NaN coordinates. Returns a dict landmark name -> MarkerTrajectory.
    """
    if not frame_results:
        raise EmptySequence("no frames to collect")
    frames = np.array([idx for idx, _ in frame_results], dtype=int)
    out = {}
    for lid, name in enumerate(LANDMARK_NAMES):
        xyz = np.full((len(frames), 3), np.nan)
        gaps = np.ones(len(frames), dtype=bool)
        for row, (_, result) in enumerate(frame_results):
            point = result.get(lid)
            if point is not None and point.accepted:
                xyz[row] = point.xyz
                gaps[row] = False
        out[name] = MarkerTrajectory(
            marker_id=name, frames=frames, xyz=xyz, gap_mask=gaps, rate=rate
        )
    return out
