"""Camera resection from world<->pixel correspondences and quality audit.

Resection recovers the 3x4 projection matrix from >= 6 correspondences by
singular value decomposition of the stacked homogeneous design matrix,
then factors it into intrinsics, rotation, and projection center. Inputs
are Hartley-normalized (centroid shift plus isotropic scaling) before the
solve; raw DLT is numerically fragile without this conditioning.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .camera import CameraModel, PixelPoint, ProjectionMatrix, project
from .errors import DegenerateConfiguration, InsufficientPoints, SingularLeftBlock

MIN_CORRESPONDENCES = 6


@dataclass(frozen=True)
class CorrespondenceSet:
    """Paired world points (n,3) and pixel observations (n,2)."""

    world: np.ndarray
    pixels: np.ndarray
    source: str = "synthetic"  # checkerboard | synthetic | manual

    def __post_init__(self):
        w = np.array(self.world, dtype=float).reshape(-1, 3)
        p = np.array(self.pixels, dtype=float).reshape(-1, 2)
        if len(w) != len(p):
            raise ValueError("world and pixel counts differ")
        if not (np.all(np.isfinite(w)) and np.all(np.isfinite(p))):
            raise ValueError("correspondences must be finite")
        w.setflags(write=False)
        p.setflags(write=False)
        object.__setattr__(self, "world", w)
        object.__setattr__(self, "pixels", p)

    def __len__(self):
        return len(self.world)


@dataclass(frozen=True)
class CalibrationReport:
    """Per-point reprojection audit against a threshold in pixels."""

    per_point_errors: np.ndarray
    mean_error: float
    max_error: float
    excluded_points: list
    threshold: float
    recalibration_recommended: bool


def _normalization_2d(points):
    centroid = points.mean(axis=0)
    rms = np.sqrt(np.mean(np.sum((points - centroid) ** 2, axis=1)))
    s = np.sqrt(2.0) / rms if rms > 0 else 1.0
    t = np.array([[s, 0, -s * centroid[0]], [0, s, -s * centroid[1]], [0, 0, 1]])
    return t


def _normalization_3d(points):
    centroid = points.mean(axis=0)
    rms = np.sqrt(np.mean(np.sum((points - centroid) ** 2, axis=1)))
    s = np.sqrt(3.0) / rms if rms > 0 else 1.0
    t = np.eye(4)
    t[:3, :3] *= s
    t[:3, 3] = -s * centroid
    return t


def resect(correspondences: CorrespondenceSet) -> ProjectionMatrix:
    """Recover the projection matrix from world<->pixel correspondences.

    Each pair contributes two homogeneous rows (one per pixel coordinate)
    to a 2n x 12 design matrix; the solution is the right singular vector
    of the smallest singular value, i.e. the unit-norm matrix minimizing
    the algebraic residual. Raises InsufficientPoints below 6 pairs and
    DegenerateConfiguration when the solution is not unique (coplanar
    world points, or a near-zero gap between the two smallest singular
    values).
    """
    n = len(correspondences)
    if n < MIN_CORRESPONDENCES:
        raise InsufficientPoints(f"resection needs >= {MIN_CORRESPONDENCES} pairs, got {n}")

    world = correspondences.world
    centered = world - world.mean(axis=0)
    if np.linalg.matrix_rank(centered, tol=1e-9 * max(1.0, np.abs(centered).max())) < 3:
        raise DegenerateConfiguration("world points are coplanar")

    tw = _normalization_3d(world)
    tp = _normalization_2d(correspondences.pixels)
    wh = (tw @ np.column_stack([world, np.ones(n)]).T).T
    ph = (tp @ np.column_stack([correspondences.pixels, np.ones(n)]).T).T

    design = np.zeros((2 * n, 12))
    design[0::2, 0:4] = wh
    design[0::2, 8:12] = -ph[:, [0]] * wh
    design[1::2, 4:8] = wh
    design[1::2, 8:12] = -ph[:, [1]] * wh

    _, s, vt = np.linalg.svd(design)
    if (s[-2] - s[-1]) < 1e-8 * s[0]:
        raise DegenerateConfiguration(
            "two smallest singular values coincide; projection matrix not unique"
        )
    a_norm = vt[-1].reshape(3, 4)
    a = np.linalg.inv(tp) @ a_norm @ tw
    return ProjectionMatrix(a)


def decompose(a: ProjectionMatrix, camera_id: str = "cam", image_size=None) -> CameraModel:
    """Factor a projection matrix into (K, R, center).

    RQ factorization of the left 3x3 block with the sign ambiguity fixed
    so K has a positive diagonal and R a +1 determinant; the projection
    center is -M^-1 p for A = [M | p]. K is scaled so K[2,2] = 1.
    """
    m = a.matrix[:, :3]
    scale = np.abs(m).max()
    if abs(np.linalg.det(m)) < 1e-12 * scale**3:
        raise SingularLeftBlock("left 3x3 block of the projection matrix is singular")
    mat = a.matrix if np.linalg.det(m) > 0 else -a.matrix
    m = mat[:, :3]

    k, r = scipy.linalg.rq(m)
    signs = np.sign(np.diag(k))
    signs[signs == 0] = 1.0
    d = np.diag(signs)
    k = k @ d
    r = d @ r

    center = -np.linalg.solve(m, mat[:, 3])
    k = k / k[2, 2]
    return CameraModel(
        id=camera_id, intrinsics=k, rotation=r, center=center, image_size=image_size
    )


def compose(intrinsics, rotation, center) -> ProjectionMatrix:
    """Build the projection matrix K [R | -R c]. Inverse of decompose."""
    k = np.asarray(intrinsics, dtype=float).reshape(3, 3)
    r = np.asarray(rotation, dtype=float).reshape(3, 3)
    c = np.asarray(center, dtype=float).reshape(3)
    return ProjectionMatrix(k @ np.hstack([r, -(r @ c)[:, None]]))


def audit(
    camera: CameraModel, correspondences: CorrespondenceSet, threshold: float
) -> CalibrationReport:
    """Reprojection audit: flag points above the threshold for exclusion.

    The report recommends recalibration when the mean error itself
    exceeds the threshold.
    """
    errors = np.array(
        [
            np.linalg.norm(project(camera, w).uv - p)
            for w, p in zip(correspondences.world, correspondences.pixels)
        ]
    )
    excluded = [int(i) for i in np.flatnonzero(errors > threshold)]
    mean_error = float(errors.mean()) if len(errors) else 0.0
    return CalibrationReport(
        per_point_errors=errors,
        mean_error=mean_error,
        max_error=float(errors.max()) if len(errors) else 0.0,
        excluded_points=excluded,
        threshold=float(threshold),
        recalibration_recommended=bool(mean_error > threshold),
    )
