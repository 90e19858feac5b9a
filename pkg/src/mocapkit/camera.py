"""Pinhole camera model, projection, and homogeneous algebra.

Conventions used throughout the package:

* World frame: right-handed, Z up, meters.
* Camera frame: x right, y down, z forward (optical axis).
* Pixel frame: u right, v down, origin at the top-left corner.
* A projection matrix maps homogeneous world points (x, y, z, 1) to
  homogeneous pixels; it is defined up to scale and stored with the last
  row normalized to unit Euclidean norm and a positive-determinant left
  3x3 block.
* Distortion follows the Brown-Conrady model with OpenCV coefficient
  ordering (k1, k2, p1, p2, k3), applied in normalized image coordinates.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import PointAtInfinity

# |w| below this bound counts as "on the principal plane"
W_EPS = 1e-12


def _readonly(a, shape, name):
    a = np.array(a, dtype=float).reshape(shape)
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} must be finite")
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class PixelPoint:
    """An image-plane observation with a detection confidence in [0, 1]."""

    uv: np.ndarray
    confidence: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "uv", _readonly(self.uv, (2,), "uv"))
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence {self.confidence} outside [0, 1]")


@dataclass(frozen=True)
class ProjectionMatrix:
    """Homogeneous 3x4 projection matrix, defined up to scale.

    Stored normalized: the last row has unit Euclidean norm and the left
    3x3 block has nonnegative determinant, which makes file round trips
    exact and comparisons scale-free.
    """

    matrix: np.ndarray

    def __post_init__(self):
        a = np.array(self.matrix, dtype=float).reshape(3, 4)
        if not np.all(np.isfinite(a)):
            raise ValueError("projection matrix must be finite")
        if np.linalg.matrix_rank(a, tol=1e-10 * max(1.0, np.abs(a).max())) < 3:
            raise ValueError("projection matrix must have rank 3")
        norm = np.linalg.norm(a[2])
        if norm == 0.0:
            raise ValueError("projection matrix has a zero last row")
        a = a / norm
        if np.linalg.det(a[:, :3]) < 0:
            a = -a
        a.setflags(write=False)
        object.__setattr__(self, "matrix", a)

    def project(self, point) -> np.ndarray:
        """Dehomogenized pixel of a world point (distortion-free path)."""
        point = np.asarray(point, dtype=float).reshape(3)
        h = self.matrix @ np.append(point, 1.0)
        if abs(h[2]) < W_EPS:
            raise PointAtInfinity(f"point {point.tolist()} lies on the principal plane")
        return h[:2] / h[2]


@dataclass(frozen=True)
class CameraModel:
    """Calibrated camera: intrinsics K, rotation R (world->camera), center.

    ``center`` is the projection center in world meters, so the projection
    matrix is K [R | -R @ center]. ``distortion`` holds 0-5 Brown-Conrady
    coefficients in (k1, k2, p1, p2, k3) order; trailing zeros may be
    omitted. ``image_size`` is (width, height) in pixels when known.
    """

    id: str
    intrinsics: np.ndarray
    rotation: np.ndarray
    center: np.ndarray
    distortion: np.ndarray = field(default_factory=lambda: np.zeros(0))
    image_size: tuple | None = None

    def __post_init__(self):
        k = _readonly(self.intrinsics, (3, 3), "intrinsics")
        r = _readonly(self.rotation, (3, 3), "rotation")
        c = _readonly(self.center, (3,), "center")
        d = np.atleast_1d(np.array(self.distortion, dtype=float))
        if d.size > 5:
            raise ValueError("at most 5 distortion coefficients supported")
        d.setflags(write=False)
        if np.abs(r.T @ r - np.eye(3)).max() >= 1e-9:
            raise ValueError(f"camera {self.id}: rotation is not orthonormal")
        if np.linalg.det(r) < 0:
            raise ValueError(f"camera {self.id}: rotation has negative determinant")
        if k[0, 0] <= 0 or k[1, 1] <= 0:
            raise ValueError(f"camera {self.id}: focal lengths must be positive")
        if self.image_size is not None:
            w, h = self.image_size
            if not (0 <= k[0, 2] <= w and 0 <= k[1, 2] <= h):
                raise ValueError(
                    f"camera {self.id}: principal point outside the image"
                )
            object.__setattr__(self, "image_size", (int(w), int(h)))
        object.__setattr__(self, "intrinsics", k)
        object.__setattr__(self, "rotation", r)
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "distortion", d)

    @cached_property
    def projection_matrix(self) -> ProjectionMatrix:
        rt = np.hstack([self.rotation, -(self.rotation @ self.center)[:, None]])
        return ProjectionMatrix(self.intrinsics @ rt)

    @property
    def has_distortion(self) -> bool:
        return self.distortion.size > 0 and np.any(self.distortion != 0.0)


def distort_normalized(xn: np.ndarray, coeffs: np.ndarray) -> np.ndarray:
    """Apply Brown-Conrady distortion to normalized image coordinates."""
    k1, k2, p1, p2, k3 = np.pad(np.asarray(coeffs, dtype=float), (0, 5 - len(coeffs)))
    x, y = xn
    r2 = x * x + y * y
    radial = 1.0 + r2 * (k1 + r2 * (k2 + r2 * k3))
    xd = x * radial + 2.0 * p1 * x * y + p2 * (r2 + 2.0 * x * x)
    yd = y * radial + p1 * (r2 + 2.0 * y * y) + 2.0 * p2 * x * y
    return np.array([xd, yd])


def project(camera: CameraModel, point) -> PixelPoint:
    """Project a world point through a camera; confidence is set to 1.

    Distortion, when present, is applied in the normalized image plane
    before the intrinsics. Raises PointAtInfinity when the point lies on
    the camera's principal plane (homogeneous w below 1e-12).
    """
    point = np.asarray(point, dtype=float).reshape(3)
    pc = camera.rotation @ (point - camera.center)
    if abs(pc[2]) < W_EPS:
        raise PointAtInfinity(
            f"camera {camera.id}: point {point.tolist()} on the principal plane"
        )
    xn = pc[:2] / pc[2]
    if camera.has_distortion:
        xn = distort_normalized(xn, camera.distortion)
    k = camera.intrinsics
    uv = np.array(
        [
            k[0, 0] * xn[0] + k[0, 1] * xn[1] + k[0, 2],
            k[1, 1] * xn[1] + k[1, 2],
        ]
    )
    return PixelPoint(uv=uv, confidence=1.0)


def reprojection_error(camera: CameraModel, point, observed: PixelPoint) -> float:
    """Euclidean pixel distance between the projection and an observation."""
    predicted = project(camera, point)
    return float(np.linalg.norm(predicted.uv - observed.uv))


def look_at_rotation(position, target, up=(0.0, 0.0, 1.0)) -> np.ndarray:
    """World->camera rotation for a camera at ``position`` looking at ``target``.

    Rows are the camera axes in world coordinates: x right, y down,
    z forward. Degenerate when the view direction is parallel to ``up``.
    """
    position = np.asarray(position, dtype=float)
    forward = np.asarray(target, dtype=float) - position
    n = np.linalg.norm(forward)
    if n == 0:
        raise ValueError("camera position and target coincide")
    forward = forward / n
    up = np.asarray(up, dtype=float)
    right = np.cross(forward, up)
    n = np.linalg.norm(right)
    if n < 1e-12:
        raise ValueError("view direction parallel to the up vector")
    right = right / n
    down = np.cross(forward, right)
    return np.stack([right, down, forward])
