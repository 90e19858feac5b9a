"""Articulated skeleton, forward kinematics, and per-frame inverse kinematics.

The skeleton is a tree of rigid segments. Each segment is driven by the
joint connecting it to its parent: an ordered list of scalar coordinates,
either translations (root only) or rotations about axes fixed in the
parent-side joint frame. Virtual markers are points fixed in a segment.

Inverse kinematics minimizes the weighted sum of squared marker errors
with a damped Gauss-Newton iteration (Levenberg-style lambda, x10 / /10
adaptation). The marker Jacobian is analytic (chain rule on the joint
axes); a central finite-difference variant is provided for verification.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import Unobservable

STEP_TOL = 1e-8
MAX_ITERATIONS = 100
LAMBDA_INIT = 1e-3


def rotation_about(axis, angle: float) -> np.ndarray:
    """Rodrigues rotation about a unit axis."""
    x, y, z = axis
    k = np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])
    return np.eye(3) + np.sin(angle) * k + (1.0 - np.cos(angle)) * (k @ k)


@dataclass(frozen=True)
class Coordinate:
    """One generalized coordinate: a rotation (rad) or translation (m)."""

    name: str
    kind: str  # "rotation" | "translation"
    axis: tuple
    bounds: tuple = (-np.pi, np.pi)

    def __post_init__(self):
        if self.kind not in ("rotation", "translation"):
            raise ValueError(f"unknown coordinate kind {self.kind!r}")
        axis = np.asarray(self.axis, dtype=float)
        n = np.linalg.norm(axis)
        if n == 0:
            raise ValueError(f"{self.name}: zero axis")
        object.__setattr__(self, "axis", tuple(axis / n))
        if self.bounds[0] >= self.bounds[1]:
            raise ValueError(f"{self.name}: empty bounds")


@dataclass(frozen=True)
class Segment:
    """Rigid body attached to its parent at ``offset`` (parent frame)."""

    name: str
    parent: str | None
    offset: tuple
    coordinates: tuple = ()


class SkeletonModel:
    """Segment tree plus virtual markers and named-angle exports.

    ``markers`` maps marker name -> (segment name, local position).
    ``angle_exports`` maps output angle names (degrees, flexion positive)
    to coordinate names, e.g. {"hip_flexion": "hip_flexion_r"}.
    """

    def __init__(self, segments, markers, angle_exports=None, name="skeleton"):
        self.name = name
        self.segments = tuple(segments)
        seen = {}
        roots = 0
        for i, seg in enumerate(self.segments):
            if seg.name in seen:
                raise ValueError(f"duplicate segment {seg.name!r}")
            if seg.parent is None:
                roots += 1
            elif seg.parent not in seen:
                raise ValueError(
                    f"segment {seg.name!r}: parent {seg.parent!r} must precede it"
                )
            seen[seg.name] = i
        if roots != 1:
            raise ValueError(f"skeleton needs exactly one root, found {roots}")
        self._seg_index = seen

        self.coordinates = tuple(c for seg in self.segments for c in seg.coordinates)
        self.coordinate_names = tuple(c.name for c in self.coordinates)
        if len(set(self.coordinate_names)) != len(self.coordinate_names):
            raise ValueError("coordinate names must be unique")
        self._coord_index = {n: i for i, n in enumerate(self.coordinate_names)}
        self._seg_coord_slices = {}
        start = 0
        for seg in self.segments:
            self._seg_coord_slices[seg.name] = slice(start, start + len(seg.coordinates))
            start += len(seg.coordinates)

        self.markers = {
            name: (seg, np.asarray(local, dtype=float))
            for name, (seg, local) in markers.items()
        }
        for name, (seg, _) in self.markers.items():
            if seg not in self._seg_index:
                raise ValueError(f"marker {name!r}: unknown segment {seg!r}")

        # ancestors[s] includes s itself
        self._ancestors = {}
        for seg in self.segments:
            chain = {seg.name}
            parent = seg.parent
            while parent is not None:
                chain.add(parent)
                parent = self.segment(parent).parent
            self._ancestors[seg.name] = frozenset(chain)

        self.angle_exports = dict(angle_exports or {})
        for coord_name in self.angle_exports.values():
            if coord_name not in self._coord_index:
                raise ValueError(f"angle export references unknown coordinate {coord_name!r}")

        self.bounds = np.array([c.bounds for c in self.coordinates])
        self.neutral_markers = marker_positions(self, np.zeros(self.n_coordinates))

    @property
    def n_coordinates(self) -> int:
        return len(self.coordinates)

    def segment(self, name: str) -> Segment:
        return self.segments[self._seg_index[name]]

    def coordinate_index(self, name: str) -> int:
        return self._coord_index[name]

    def zero_pose(self) -> np.ndarray:
        return np.zeros(self.n_coordinates)

    def clamp(self, q, warn=True) -> np.ndarray:
        q = np.asarray(q, dtype=float)
        clamped = np.clip(q, self.bounds[:, 0], self.bounds[:, 1])
        if warn and not np.allclose(clamped, q):
            over = [self.coordinate_names[i] for i in np.flatnonzero(clamped != q)]
            warnings.warn(f"coordinates clamped to bounds: {over}", stacklevel=3)
        return clamped


def _fk(model: SkeletonModel, q: np.ndarray):
    """Segment poses plus per-coordinate world axes/pivots for the Jacobian."""
    poses = {}
    axis_info = [None] * model.n_coordinates
    ci = 0
    for seg in model.segments:
        if seg.parent is None:
            rp, pp = np.eye(3), np.zeros(3)
        else:
            rp, pp = poses[seg.parent]
        origin = pp + rp @ np.asarray(seg.offset, dtype=float)
        rj = np.eye(3)
        for coord in seg.coordinates:
            axis = np.asarray(coord.axis)
            if coord.kind == "translation":
                world_axis = rp @ axis
                origin = origin + world_axis * q[ci]
                axis_info[ci] = ("t", world_axis, None, seg.name)
            else:
                world_axis = rp @ rj @ axis
                axis_info[ci] = ("r", world_axis, origin, seg.name)
                rj = rj @ rotation_about(axis, q[ci])
            ci += 1
        poses[seg.name] = (rp @ rj, origin)
    return poses, axis_info


def marker_positions(model: SkeletonModel, q) -> dict:
    """World positions of every virtual marker at pose q (no clamping)."""
    q = np.asarray(q, dtype=float)
    poses, _ = _fk(model, q)
    out = {}
    for name, (seg, local) in model.markers.items():
        r, p = poses[seg]
        out[name] = p + r @ local
    return out


def forward_kinematics(model: SkeletonModel, q) -> dict:
    """Public FK: clamps q to bounds (with a warning) before posing."""
    return marker_positions(model, model.clamp(q))


def marker_jacobian(model: SkeletonModel, q, marker_names) -> np.ndarray:
    """Analytic d(marker)/dq, stacked (3 * n_markers, n_coordinates)."""
    q = np.asarray(q, dtype=float)
    poses, axis_info = _fk(model, q)
    jac = np.zeros((3 * len(marker_names), model.n_coordinates))
    for mi, name in enumerate(marker_names):
        seg, local = model.markers[name]
        r, p = poses[seg]
        x = p + r @ local
        ancestors = model._ancestors[seg]
        for ci, info in enumerate(axis_info):
            kind, world_axis, pivot, owner = info
            if owner not in ancestors:
                continue
            if kind == "t":
                jac[3 * mi : 3 * mi + 3, ci] = world_axis
            else:
                jac[3 * mi : 3 * mi + 3, ci] = np.cross(world_axis, x - pivot)
    return jac


def marker_jacobian_fd(model: SkeletonModel, q, marker_names, h: float = 1e-6) -> np.ndarray:
    """Central finite-difference Jacobian; verification twin of the analytic one."""
    q = np.asarray(q, dtype=float)
    jac = np.zeros((3 * len(marker_names), model.n_coordinates))
    for ci in range(model.n_coordinates):
        dq = np.zeros_like(q)
        dq[ci] = h
        plus = marker_positions(model, q + dq)
        minus = marker_positions(model, q - dq)
        for mi, name in enumerate(marker_names):
            jac[3 * mi : 3 * mi + 3, ci] = (plus[name] - minus[name]) / (2.0 * h)
    return jac


@dataclass(frozen=True)
class IkWeights:
    """Per-marker nonnegative weights; markers not listed default to 1."""

    w: dict = field(default_factory=dict)

    def __post_init__(self):
        for name, value in self.w.items():
            if value < 0:
                raise ValueError(f"weight for {name!r} must be nonnegative")

    def weight(self, name: str) -> float:
        return float(self.w.get(name, 1.0))


@dataclass(frozen=True)
class IkResult:
    """Solution of one frame: pose, RMS weighted residual, diagnostics."""

    q: np.ndarray
    residual: float
    converged: bool
    iterations: int
    objective_history: tuple


def _residual(model, q, names, targets, sqrt_w):
    pos = marker_positions(model, q)
    r = np.concatenate([(pos[n] - targets[i]) * sqrt_w[i] for i, n in enumerate(names)])
    return r


def solve_frame(
    model: SkeletonModel,
    weights: IkWeights,
    observed: dict,
    q_init=None,
) -> IkResult:
    """Fit the pose minimizing the weighted sum of squared marker errors.

    ``observed`` maps marker names to world positions; gapped markers are
    passed as None (or omitted). Raises Unobservable when fewer than 3
    non-collinear weighted markers are available. Non-convergence after
    100 iterations returns the best iterate with converged=False.
    """
    names, targets, w = [], [], []
    for name, pos in observed.items():
        if name not in model.markers or pos is None:
            continue
        pos = np.asarray(pos, dtype=float)
        if not np.all(np.isfinite(pos)):
            continue
        weight = weights.weight(name)
        if weight <= 0.0:
            continue
        names.append(name)
        targets.append(pos)
        w.append(weight)
    if len(names) < 3:
        raise Unobservable(f"only {len(names)} usable markers (need >= 3)")
    targets = np.array(targets)
    centered = targets - targets.mean(axis=0)
    if np.linalg.matrix_rank(centered, tol=1e-9) < 2:
        raise Unobservable("usable markers are collinear")

    w = np.array(w)
    sqrt_w = np.sqrt(w)
    q0 = np.array(q_init, dtype=float) if q_init is not None else model.zero_pose()
    if q0.shape != (model.n_coordinates,):
        raise ValueError("q_init has the wrong length")

    lo, hi = model.bounds[:, 0], model.bounds[:, 1]
    best = None
    # deterministic restarts rescue poses where the first descent stalls in
    # a reflected-limb local minimum; warm-started sequences never need them
    for q_start in _start_poses(model, q0, q_init is not None, names, targets, sqrt_w, lo, hi):
        result = _descend(model, q_start, names, targets, sqrt_w, lo, hi)
        if best is None or result[1] < best[1]:
            best = result
        if best[1] <= _GOOD_FIT * len(names):
            break
    q, objective, converged, iterations, history = best

    residual = float(np.sqrt(objective / w.sum()))
    return IkResult(q, residual, converged, iterations, tuple(history))


_GOOD_FIT = 1e-4  # per-marker squared-error threshold that ends restarts (m^2)


def _start_poses(model, q0, warm, names, targets, sqrt_w, lo, hi):
    if warm:
        yield q0
    yield _sequential_init(model, names, targets, sqrt_w, lo, hi)
    if not warm:
        yield q0
    mid = model.bounds.mean(axis=1)
    for fraction in (0.5, 1.0):
        yield np.clip(q0 + fraction * (mid - q0), lo, hi)


def _sequential_init(model, names, targets, sqrt_w, lo, hi):
    """Root-to-leaf warm start: fit each segment's own coordinates from the
    markers attached to it, more proximal segments held fixed."""
    by_segment = {}
    for i, name in enumerate(names):
        by_segment.setdefault(model.markers[name][0], []).append(i)
    q = model.zero_pose()
    for seg in model.segments:
        rows = by_segment.get(seg.name)
        cols = model._seg_coord_slices[seg.name]
        if not rows or cols.start == cols.stop:
            continue
        seg_names = [names[i] for i in rows]
        seg_targets = targets[rows]
        seg_sqrt_w = sqrt_w[rows]
        objective = None
        lam = LAMBDA_INIT
        for _ in range(30):
            pos = marker_positions(model, q)
            r = np.concatenate(
                [(pos[n] - seg_targets[k]) * seg_sqrt_w[k] for k, n in enumerate(seg_names)]
            )
            if objective is None:
                objective = float(r @ r)
            jac = marker_jacobian(model, q, seg_names)[:, cols]
            jac = jac * np.repeat(seg_sqrt_w, 3)[:, None]
            jtj = jac.T @ jac
            jtr = jac.T @ r
            accepted = False
            while lam < 1e10:
                step = np.linalg.solve(jtj + lam * np.eye(jtj.shape[0]), -jtr)
                q_new = np.array(q)
                q_new[cols] = np.clip(q[cols] + step, lo[cols], hi[cols])
                pos_new = marker_positions(model, q_new)
                r_new = np.concatenate(
                    [
                        (pos_new[n] - seg_targets[k]) * seg_sqrt_w[k]
                        for k, n in enumerate(seg_names)
                    ]
                )
                objective_new = float(r_new @ r_new)
                if objective_new <= objective:
                    moved = np.linalg.norm(q_new[cols] - q[cols])
                    q = q_new
                    objective = objective_new
                    lam = max(lam / 10.0, 1e-12)
                    accepted = True
                    break
                lam *= 10.0
            if not accepted or moved < STEP_TOL:
                break
    return q


def _descend(model, q, names, targets, sqrt_w, lo, hi):
    """Projected damped Gauss-Newton from one starting pose."""
    q = np.clip(q, lo, hi)
    r = _residual(model, q, names, targets, sqrt_w)
    objective = float(r @ r)
    history = [objective]
    lam = LAMBDA_INIT
    converged = False
    iterations = 0
    for iterations in range(1, MAX_ITERATIONS + 1):
        jac = marker_jacobian(model, q, names)
        jac = jac * np.repeat(sqrt_w, 3)[:, None]
        jtj = jac.T @ jac
        jtr = jac.T @ r
        accepted = False
        while lam < 1e12:
            try:
                raw = np.linalg.solve(jtj + lam * np.eye(len(q)), -jtr)
            except np.linalg.LinAlgError:
                lam *= 10.0
                continue
            q_new = np.clip(q + raw, lo, hi)
            step = q_new - q
            r_new = _residual(model, q_new, names, targets, sqrt_w)
            objective_new = float(r_new @ r_new)
            if objective_new <= objective:
                q = q_new
                r = r_new
                objective = objective_new
                history.append(objective)
                lam = max(lam / 10.0, 1e-12)
                accepted = True
                break
            lam *= 10.0
        if not accepted:
            break
        if np.linalg.norm(step) < STEP_TOL:
            converged = True
            break
    return q, objective, converged, iterations, history


def joint_angles(q, model: SkeletonModel) -> dict:
    """Named angles in degrees (flexion positive, extension negative)."""
    q = np.asarray(q, dtype=float)
    return {
        out: float(np.degrees(q[model.coordinate_index(coord)]))
        for out, coord in model.angle_exports.items()
    }


@dataclass(frozen=True)
class JointAngleSeries:
    """Per-frame named angles (degrees) plus the IK residual (meters)."""

    frames: np.ndarray
    times: np.ndarray
    angles: dict
    residuals: np.ndarray
    flags: tuple

    def __len__(self):
        return len(self.frames)


def solve_sequence(model: SkeletonModel, weights: IkWeights, trajectories: dict) -> JointAngleSeries:
    """Frame-by-frame IK over a marker trajectory set.

    Frame 0 starts from the neutral pose; later frames warm-start from
    the previous solution. Frames that fail (unobservable) reuse the
    previous pose and are flagged; non-converged frames keep their best
    iterate and are flagged as well.
    """
    trajs = list(trajectories.values())
    if not trajs:
        raise Unobservable("empty trajectory set")
    frames = trajs[0].frames
    rate = trajs[0].rate
    for t in trajs[1:]:
        if len(t) != len(frames) or not np.array_equal(t.frames, frames):
            raise ValueError("trajectories must share a common frame range")

    q = model.zero_pose()
    angle_names = list(model.angle_exports)
    angles = {name: np.zeros(len(frames)) for name in angle_names}
    residuals = np.zeros(len(frames))
    flags = []
    for row in range(len(frames)):
        observed = {
            name: (None if traj.gap_mask[row] else traj.xyz[row])
            for name, traj in trajectories.items()
        }
        flag = None
        try:
            result = solve_frame(model, weights, observed, q_init=q)
            q = result.q
            residuals[row] = result.residual
            if not result.converged:
                flag = "non_convergence"
        except Unobservable:
            flag = "unobservable"
            residuals[row] = np.nan
        flags.append(flag)
        for name, value in joint_angles(q, model).items():
            angles[name][row] = value
    return JointAngleSeries(
        frames=frames,
        times=frames / rate,
        angles=angles,
        residuals=residuals,
        flags=tuple(flags),
    )
