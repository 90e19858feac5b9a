"""Body measurements from a landmark-indexed triangle mesh.

Lengths are Euclidean distances (or chains of them) between landmark
vertices. Circumferences slice the mesh with a plane through a landmark,
chain the triangle intersections into closed loops, and sum the segment
lengths of the loop nearest the landmark. Volumes accumulate signed
tetrahedra over the faces (divergence theorem), so they are exact for
watertight surfaces and independent of winding; mesh subsets get their
boundary loops fan-capped first. Whole-body weight applies a BMI-band
correction around a nominal density of 985 kg/m3; segment weights are
raw density * volume.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    NonPositiveInput,
    NoIntersection,
    NotWatertight,
    NoValidFrame,
    OpenLoop,
    UnknownLandmark,
)

BODY_DENSITY = 985.0  # kg/m3

# WHO BMI bands; outer-band medians are documented estimates since the
# open-ended bands have no true median.
WHO_BMI_BANDS = (
    (0.0, 18.5, "underweight"),
    (18.5, 25.0, "normal"),
    (25.0, 30.0, "overweight"),
    (30.0, float("inf"), "obese"),
)

DEFAULT_BMI_MEDIANS = {
    "underweight": 17.0,
    "normal": 21.7,
    "overweight": 27.5,
    "obese": 35.0,
}


@dataclass(frozen=True)
class DensityModel:
    """Uniform body density plus per-BMI-category medians."""

    rho: float = BODY_DENSITY
    bmi_medians: dict = field(default_factory=lambda: dict(DEFAULT_BMI_MEDIANS))

    def __post_init__(self):
        if self.rho <= 0:
            raise ValueError("density must be positive")
        order = [self.bmi_medians[c] for _, _, c in WHO_BMI_BANDS]
        if any(b <= a for a, b in zip(order, order[1:])):
            raise ValueError("BMI medians must increase across categories")


def bmi_category(bmi: float) -> str:
    for lo, hi, name in WHO_BMI_BANDS:
        if lo <= bmi < hi:
            return name
    raise ValueError(f"BMI {bmi} outside all bands")


@dataclass(frozen=True)
class BodyMesh:
    """Indexed triangle mesh with a landmark table and segment vertex sets."""

    vertices: np.ndarray
    faces: np.ndarray
    landmark_table: dict = field(default_factory=dict)
    segment_vertex_sets: dict = field(default_factory=dict)

    def __post_init__(self):
        v = np.array(self.vertices, dtype=float).reshape(-1, 3)
        f = np.array(self.faces, dtype=int).reshape(-1, 3)
        if f.size and (f.min() < 0 or f.max() >= len(v)):
            raise ValueError("face index out of range")
        for name, idx in self.landmark_table.items():
            if not 0 <= idx < len(v):
                raise ValueError(f"landmark {name!r}: vertex index {idx} out of range")
        v.setflags(write=False)
        f.setflags(write=False)
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "faces", f)

    def landmark(self, name: str) -> np.ndarray:
        if name not in self.landmark_table:
            raise UnknownLandmark(f"landmark {name!r} not in the mesh table")
        return self.vertices[self.landmark_table[name]]

    def is_watertight(self, faces=None) -> bool:
        faces = self.faces if faces is None else faces
        edges = np.sort(
            np.concatenate([faces[:, [0, 1]], faces[:, [1, 2]], faces[:, [2, 0]]]), axis=1
        )
        _, counts = np.unique(edges, axis=0, return_counts=True)
        return bool(np.all(counts == 2))


def landmark_distance(mesh: BodyMesh, a: str, b: str) -> float:
    """Euclidean distance between two landmark vertices, meters."""
    return float(np.linalg.norm(mesh.landmark(a) - mesh.landmark(b)))


def _chain_loops(segments):
    """Chain edge-keyed intersection segments into vertex loops."""
    adjacency = {}
    for ka, kb in segments:
        adjacency.setdefault(ka, []).append(kb)
        adjacency.setdefault(kb, []).append(ka)
    visited = set()
    loops = []
    for start in adjacency:
        if start in visited:
            continue
        loop = [start]
        visited.add(start)
        closed = False
        while True:
            nxt = [k for k in adjacency[loop[-1]] if k not in visited]
            if not nxt:
                closed = loop[0] in adjacency[loop[-1]] and len(loop) > 2
                break
            loop.append(nxt[0])
            visited.add(nxt[0])
        loops.append((loop, closed))
    return loops


def circumference(mesh: BodyMesh, landmark: str, axis) -> float:
    """Perimeter of the slice contour through a landmark.

    The slicing plane passes through the landmark vertex with normal
    ``axis``; of all closed contours produced by the cut, the one nearest
    the landmark is measured. Raises NoIntersection when the plane misses
    the mesh and OpenLoop when the nearest contour does not close.
    """
    axis = np.asarray(axis, dtype=float)
    n = np.linalg.norm(axis)
    if n == 0:
        raise ValueError("zero slicing axis")
    axis = axis / n
    origin = mesh.landmark(landmark)

    d = (mesh.vertices - origin) @ axis
    # vertices exactly on the plane (the landmark itself) are nudged to one
    # side so every intersection lies strictly inside an edge
    scale = max(1.0, np.abs(d).max())
    d = np.where(np.abs(d) < 1e-12 * scale, 1e-12 * scale, d)

    tri = d[mesh.faces]
    crossing = ~(np.all(tri > 0, axis=1) | np.all(tri < 0, axis=1))
    if not crossing.any():
        raise NoIntersection(f"slice at {landmark!r} misses the mesh")

    points = {}

    def edge_point(i, j):
        key = (i, j) if i < j else (j, i)
        if key not in points:
            t = d[i] / (d[i] - d[j])
            points[key] = mesh.vertices[i] + t * (mesh.vertices[j] - mesh.vertices[i])
        return key

    segments = []
    for face in mesh.faces[crossing]:
        keys = []
        for i, j in ((face[0], face[1]), (face[1], face[2]), (face[2], face[0])):
            if (d[i] > 0) != (d[j] > 0):
                keys.append(edge_point(i, j))
        if len(keys) == 2:
            segments.append(keys)

    best = None
    for loop, closed in _chain_loops(segments):
        pts = np.array([points[k] for k in loop])
        dist = float(np.min(np.linalg.norm(pts - origin, axis=1)))
        if best is None or dist < best[0]:
            best = (dist, pts, closed)

    _, pts, closed = best
    if not closed:
        raise OpenLoop(f"slice contour at {landmark!r} does not close")
    deltas = np.diff(pts, axis=0, append=pts[:1])
    return float(np.sum(np.linalg.norm(deltas, axis=1)))


def _boundary_caps(faces):
    """Fan triangles closing the boundary loops of an open face set."""
    directed = {}
    for a, b, c in faces:
        for e in ((a, b), (b, c), (c, a)):
            directed[e] = directed.get(e, 0) + 1
    boundary = [e for e in directed if (e[1], e[0]) not in directed]
    if not boundary:
        return [], True
    nxt = {}
    for a, b in boundary:
        if a in nxt:
            return [], False  # non-manifold boundary
        nxt[a] = b
    caps = []
    remaining = dict(nxt)
    while remaining:
        start, cur = next(iter(remaining.items()))
        loop = [start]
        while cur != start:
            loop.append(cur)
            cur = remaining.get(cur)
            if cur is None:
                return [], False
        for v in loop:
            remaining.pop(v)
        caps.append(loop)
    return caps, True


def mesh_volume(mesh: BodyMesh, subset: str | None = None) -> float:
    """Enclosed volume (m3) of the whole mesh or a named vertex subset.

    Subset surfaces are closed by fan-capping their boundary loops before
    the signed-tetrahedron sum. Raises NotWatertight when the surface
    cannot be closed.
    """
    if subset in (None, "whole"):
        if not mesh.is_watertight():
            raise NotWatertight("mesh has boundary or non-manifold edges")
        faces = mesh.faces
        extra = []
    else:
        if subset not in mesh.segment_vertex_sets:
            raise KeyError(f"unknown segment {subset!r}")
        members = np.zeros(len(mesh.vertices), dtype=bool)
        members[np.asarray(mesh.segment_vertex_sets[subset], dtype=int)] = True
        faces = mesh.faces[np.all(members[mesh.faces], axis=1)]
        if not len(faces):
            raise NotWatertight(f"segment {subset!r} selects no faces")
        loops, ok = _boundary_caps(faces)
        if not ok:
            raise NotWatertight(f"segment {subset!r} has a non-manifold boundary")
        extra = []
        for loop in loops:
            centroid = mesh.vertices[loop].mean(axis=0)
            for a, b in zip(loop, loop[1:] + loop[:1]):
                extra.append((mesh.vertices[b], mesh.vertices[a], centroid))

    v = mesh.vertices
    a, b, c = v[faces[:, 0]], v[faces[:, 1]], v[faces[:, 2]]
    total = np.einsum("ij,ij->i", a, np.cross(b, c)).sum()
    for pa, pb, pc in extra:
        total += pa @ np.cross(pb, pc)
    return float(abs(total) / 6.0)


@dataclass(frozen=True)
class WeightEstimate:
    weight: float
    extracted_weight: float
    bmi: float
    category: str


def weight_estimate(volume: float, height: float, density: DensityModel = DensityModel()) -> WeightEstimate:
    """Density-based weight with a BMI-band correction.

    extracted = rho * V; the difference between the implied BMI and the
    median of its WHO category, times height squared, is added back.
    """
    if volume <= 0 or height <= 0:
        raise NonPositiveInput("volume and height must be positive")
    extracted = density.rho * volume
    bmi = extracted / height**2
    category = bmi_category(bmi)
    weight = extracted + (bmi - density.bmi_medians[category]) * height**2
    return WeightEstimate(weight=float(weight), extracted_weight=float(extracted), bmi=float(bmi), category=category)


def select_measurement_frame(
    trajectories: dict,
    hip: str = "MidHip",
    shoulder: str = "Neck",
    ankles: tuple = ("LAnkle", "RAnkle"),
) -> int:
    """Frame index minimizing trunk angle + leg angle from vertical.

    Works on any trajectory set containing the named hip/shoulder/ankle
    markers; ties break to the earliest frame.
    """
    try:
        hip_t = trajectories[hip]
        sho_t = trajectories[shoulder]
        ank_t = [trajectories[a] for a in ankles]
    except KeyError as err:
        raise NoValidFrame(f"marker {err} not in the trajectory set") from err

    vertical = np.array([0.0, 0.0, 1.0])

    def line_angle(vec):
        n = np.linalg.norm(vec)
        if n == 0:
            return np.pi / 2
        return float(np.arccos(min(1.0, abs(vec @ vertical) / n)))

    best = None
    for row in range(len(hip_t)):
        if hip_t.gap_mask[row] or sho_t.gap_mask[row]:
            continue
        ank = [t.xyz[row] for t in ank_t if not t.gap_mask[row]]
        if not ank:
            continue
        trunk = line_angle(sho_t.xyz[row] - hip_t.xyz[row])
        leg = line_angle(np.mean(ank, axis=0) - hip_t.xyz[row])
        score = trunk + leg
        if best is None or score < best[0]:
            best = (score, int(hip_t.frames[row]))
    if best is None:
        raise NoValidFrame("no frame has the hip, shoulder, and ankle markers")
    return best[1]


@dataclass(frozen=True)
class MeasurementReport:
    """Values keyed by measurement code, with units and method provenance."""

    values: dict  # code -> float
    units: dict  # code -> "m" | "kg"
    names: dict  # code -> human-readable name
    provenance: dict  # code -> length | circumference | volume_weight
    missing: dict  # code -> failure reason
    bmi: float | None
    bmi_category: str | None


def _point(mesh, spec):
    if isinstance(spec, str):
        return mesh.landmark(spec)
    return np.mean([mesh.landmark(s) for s in spec], axis=0)


# Measurement table. Lengths give a chain of points (landmark name, or a
# tuple averaged into a midpoint); circumferences give the slice landmark
# plus the axis landmark pair; weights name the vertex subset.
MEASUREMENTS = {
    "A": ("head circumference", "circumference", "HEAD_LEFT_TEMPLE", (("LEFT_HIP", "RIGHT_HIP"), "SHOULDER_TOP")),
    "B": ("neck circumference", "circumference", "NECK_ADAM_APPLE", (("LEFT_HIP", "RIGHT_HIP"), "SHOULDER_TOP")),
    "C": ("full torso length", "length", ("SHOULDER_TOP", ("LEFT_HIP", "RIGHT_HIP"))),
    "D": ("chest circumference", "circumference", "CHEST", (("LEFT_HIP", "RIGHT_HIP"), "SHOULDER_TOP")),
    "E": ("waist circumference", "circumference", "WAIST", (("LEFT_HIP", "RIGHT_HIP"), "SHOULDER_TOP")),
    "F": ("shoulder to shoulder length", "length", ("LEFT_SHOULDER", "RIGHT_SHOULDER")),
    "G": ("wrist circumference", "circumference", "LEFT_WRIST", ("LEFT_ELBOW", "LEFT_WRIST")),
    "H": ("forearm circumference", "circumference", "LEFT_FOREARM", ("LEFT_ELBOW", "LEFT_WRIST")),
    "I": ("arm length", "length", ("LEFT_SHOULDER", "LEFT_ELBOW", "LEFT_WRIST")),
    "J": ("thigh circumference", "circumference", "LEFT_THIGH", ("LEFT_HIP", "LEFT_KNEE")),
    "K": ("calf circumference", "circumference", "LEFT_CALF", ("LEFT_KNEE", "LEFT_ANKLE")),
    "L": ("ankle circumference", "circumference", "LEFT_ANKLE", ("LEFT_KNEE", "LEFT_ANKLE")),
    "M": ("height", "length", ("HEAD_TOP", "LEFT_HEEL")),
    "N": ("weight", "weight_corrected", "whole"),
    "O": ("torso weight", "weight_raw", "torso"),
    "P": ("arm left weight", "weight_raw", "arm_left"),
    "Q": ("arm right weight", "weight_raw", "arm_right"),
}


def measure_all(mesh: BodyMesh, density: DensityModel = DensityModel()) -> MeasurementReport:
    """All 17 measurements (codes A-Q); failures become missing entries."""
    values, units, names, provenance, missing = {}, {}, {}, {}, {}
    category = None

    def record(code, name, value, unit, method):
        values[code] = float(value)
        units[code] = unit
        names[code] = name
        provenance[code] = method

    for code, spec in MEASUREMENTS.items():
        name, method = spec[0], spec[1]
        try:
            if method == "length":
                chain = spec[2]
                pts = [_point(mesh, p) for p in chain]
                total = sum(
                    float(np.linalg.norm(b - a)) for a, b in zip(pts, pts[1:])
                )
                record(code, name, total, "m", "length")
            elif method == "circumference":
                at, axis_pair = spec[2], spec[3]
                axis = _point(mesh, axis_pair[1]) - _point(mesh, axis_pair[0])
                record(code, name, circumference(mesh, at, axis), "m", "circumference")
            elif method == "weight_raw":
                record(code, name, density.rho * mesh_volume(mesh, spec[2]), "kg", "volume_weight")
            else:  # whole-body weight with BMI correction; needs height (M)
                if "M" not in values:
                    raise UnknownLandmark("height (M) unavailable for the BMI correction")
                est = weight_estimate(mesh_volume(mesh, None), values["M"], density)
                record(code, name, est.weight, "kg", "volume_weight")
                category = est.category
        except Exception as err:  # noqa: BLE001 - partial reports are allowed
            missing[code] = f"{type(err).__name__}: {err}"

    # reported BMI uses the corrected weight; the category reflects the
    # density-implied BMI that the correction was based on
    bmi = values["N"] / values["M"] ** 2 if "N" in values and "M" in values else None
    return MeasurementReport(
        values=values,
        units=units,
        names=names,
        provenance=provenance,
        missing=missing,
        bmi=bmi,
        bmi_category=category,
    )
