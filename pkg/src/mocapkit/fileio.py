"""Readers and writers for every on-disk format the pipeline touches.

All structured documents are JSON with a schema_version field; every
writer/reader pair round-trips losslessly (within 1e-6 for TRC, exact
for JSON). Keypoint files follow the common 2D-pose layout: one JSON per
camera per frame named ``{camera}_{frame:06d}.json`` holding
``people[0].pose_keypoints_2d`` as a flat list of 25 (x, y, confidence)
triples.
"""

from __future__ import annotations

import csv
import hashlib
import json
import re
from pathlib import Path

import numpy as np

from . import __version__
from .augmentation import MarkerSetTemplate
from .calibration import CorrespondenceSet
from .camera import CameraModel
from .errors import (
    InconsistentLandmarkCount,
    MalformedDocument,
    RaggedTrajectories,
)
from .filtering import MarkerTrajectory
from .kinematics import Coordinate, JointAngleSeries, Segment, SkeletonModel
from .landmarks import N_LANDMARKS
from .triangulation import ExclusionStats, KeypointFrame

SCHEMA_VERSION = 1

KEYPOINT_FILE_RE = re.compile(r"^(?P<camera>.+)_(?P<frame>\d{6})\.json$")


def _dump_json(obj, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _load_json(path):
    path = Path(path)
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as err:
        raise MalformedDocument(f"{path}: offset {err.pos}: {err.msg}") from err


# --------------------------------------------------------------------------
# keypoints


def write_keypoint_file(path, points):
    points = np.asarray(points, dtype=float).reshape(N_LANDMARKS, 3)
    doc = {
        "schema_version": SCHEMA_VERSION,
        "people": [{"pose_keypoints_2d": [round(float(v), 6) for v in points.ravel()]}],
    }
    _dump_json(doc, path)


def read_keypoint_file(path) -> np.ndarray:
    doc = _load_json(path)
    try:
        people = doc["people"]
        flat = people[0]["pose_keypoints_2d"] if people else []
    except (KeyError, IndexError, TypeError) as err:
        raise MalformedDocument(f"{path}: missing people/pose_keypoints_2d") from err
    if not people:
        return np.zeros((N_LANDMARKS, 3))
    if len(flat) != 3 * N_LANDMARKS:
        raise InconsistentLandmarkCount(
            f"{path}: {len(flat)} values, expected {3 * N_LANDMARKS}"
        )
    return np.asarray(flat, dtype=float).reshape(N_LANDMARKS, 3)


def read_keypoints(directory) -> dict:
    """Per-camera keypoint streams from a directory of frame files.

    Streams are ordered by frame index over the union of frame indices
    seen for any camera; missing files become empty frames (all zeros).
    Returns dict camera_id -> list of KeypointFrame.
    """
    directory = Path(directory)
    found = {}
    for path in directory.iterdir():
        m = KEYPOINT_FILE_RE.match(path.name)
        if not m:
            continue
        found.setdefault(m["camera"], {})[int(m["frame"])] = path
    if not found:
        raise MalformedDocument(f"{directory}: no keypoint files matching camera_######.json")
    all_frames = sorted({f for frames in found.values() for f in frames})
    lo, hi = all_frames[0], all_frames[-1]
    streams = {}
    for camera, frames in sorted(found.items()):
        stream = []
        for idx in range(lo, hi + 1):
            if idx in frames:
                pts = read_keypoint_file(frames[idx])
            else:
                pts = np.zeros((N_LANDMARKS, 3))
            stream.append(KeypointFrame(camera_id=camera, frame_index=idx, points=pts))
        streams[camera] = stream
    return streams


def write_keypoints(directory, camera_id, frames: dict):
    """Write one camera's frames ({frame_index: (25,3) array})."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for idx, points in frames.items():
        write_keypoint_file(directory / f"{camera_id}_{idx:06d}.json", points)


# --------------------------------------------------------------------------
# calibration


def write_calibration(cameras, path):
    docs = []
    for cam in cameras:
        docs.append(
            {
                "id": cam.id,
                "image_size": list(cam.image_size) if cam.image_size else None,
                "K": [float(v) for v in cam.intrinsics.ravel()],
                "R": [float(v) for v in cam.rotation.ravel()],
                "K0": [float(v) for v in cam.center],
                "distortion": [float(v) for v in cam.distortion],
            }
        )
    _dump_json({"schema_version": SCHEMA_VERSION, "cameras": docs}, path)


def read_calibration(path) -> dict:
    doc = _load_json(path)
    cameras = {}
    try:
        for entry in doc["cameras"]:
            cam = CameraModel(
                id=entry["id"],
                intrinsics=np.array(entry["K"]).reshape(3, 3),
                rotation=np.array(entry["R"]).reshape(3, 3),
                center=np.array(entry["K0"]),
                distortion=np.array(entry.get("distortion", [])),
                image_size=tuple(entry["image_size"]) if entry.get("image_size") else None,
            )
            cameras[cam.id] = cam
    except (KeyError, TypeError, ValueError) as err:
        raise MalformedDocument(f"{path}: {err}") from err
    return cameras


# --------------------------------------------------------------------------
# correspondences (plain text: x y z u v per row)


def write_correspondences(path, correspondences: CorrespondenceSet):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [
        "# correspondences v1",
        f"# source: {correspondences.source}",
        "# columns: x y z u v (world meters, pixels)",
    ]
    for w, p in zip(correspondences.world, correspondences.pixels):
        lines.append(f"{w[0]:.9f} {w[1]:.9f} {w[2]:.9f} {p[0]:.6f} {p[1]:.6f}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_correspondences(path) -> CorrespondenceSet:
    path = Path(path)
    world, pixels = [], []
    source = "manual"
    for ln, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.strip()
        if line.startswith("# source:"):
            source = line.split(":", 1)[1].strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 5:
            raise MalformedDocument(f"{path}: line {ln}: expected 5 columns")
        try:
            vals = [float(v) for v in parts]
        except ValueError as err:
            raise MalformedDocument(f"{path}: line {ln}: {err}") from err
        world.append(vals[:3])
        pixels.append(vals[3:])
    if not world:
        raise MalformedDocument(f"{path}: no correspondence rows")
    return CorrespondenceSet(world=np.array(world), pixels=np.array(pixels), source=source)


# --------------------------------------------------------------------------
# marker template


def write_template(template: MarkerSetTemplate, path):
    doc = {
        "schema_version": SCHEMA_VERSION,
        "markers": [
            {
                "name": name,
                "segment": template.segment_of[name],
                "offset": [float(v) for v in template.local_offset[name]],
            }
            for name in template.names
        ],
    }
    _dump_json(doc, path)


def read_template(path) -> MarkerSetTemplate:
    doc = _load_json(path)
    try:
        names = tuple(m["name"] for m in doc["markers"])
        segment_of = {m["name"]: m["segment"] for m in doc["markers"]}
        offsets = {m["name"]: np.array(m["offset"], dtype=float) for m in doc["markers"]}
    except (KeyError, TypeError) as err:
        raise MalformedDocument(f"{path}: {err}") from err
    return MarkerSetTemplate(names=names, segment_of=segment_of, local_offset=offsets)


# --------------------------------------------------------------------------
# skeleton model


def write_skeleton(model: SkeletonModel, path):
    doc = {
        "schema_version": SCHEMA_VERSION,
        "name": model.name,
        "segments": [
            {
                "name": seg.name,
                "parent": seg.parent,
                "offset": [float(v) for v in seg.offset],
                "coordinates": [
                    {
                        "name": c.name,
                        "kind": c.kind,
                        "axis": [float(v) for v in c.axis],
                        "bounds": [float(c.bounds[0]), float(c.bounds[1])],
                    }
                    for c in seg.coordinates
                ],
            }
            for seg in model.segments
        ],
        "markers": {
            name: {"segment": seg, "local": [float(v) for v in local]}
            for name, (seg, local) in model.markers.items()
        },
        "angle_exports": model.angle_exports,
    }
    _dump_json(doc, path)


def read_skeleton(path) -> SkeletonModel:
    doc = _load_json(path)
    try:
        segments = [
            Segment(
                name=s["name"],
                parent=s["parent"],
                offset=tuple(s["offset"]),
                coordinates=tuple(
                    Coordinate(
                        name=c["name"],
                        kind=c["kind"],
                        axis=tuple(c["axis"]),
                        bounds=tuple(c["bounds"]),
                    )
                    for c in s["coordinates"]
                ),
            )
            for s in doc["segments"]
        ]
        markers = {
            name: (m["segment"], np.array(m["local"], dtype=float))
            for name, m in doc["markers"].items()
        }
        return SkeletonModel(
            segments, markers, angle_exports=doc.get("angle_exports"), name=doc.get("name", "skeleton")
        )
    except (KeyError, TypeError) as err:
        raise MalformedDocument(f"{path}: {err}") from err


# --------------------------------------------------------------------------
# TRC marker trajectories


def write_trc(trajectories: dict, path, units: str = "m"):
    """Spec-conformant TRC file; trajectories must be gap-filled and aligned."""
    if units not in ("m", "mm"):
        raise ValueError("units must be 'm' or 'mm'")
    if not trajectories:
        raise RaggedTrajectories("no trajectories to write")
    trajs = list(trajectories.values())
    frames = trajs[0].frames
    rate = trajs[0].rate
    for t in trajs[1:]:
        if len(t) != len(frames) or not np.array_equal(t.frames, frames):
            raise RaggedTrajectories("trajectories do not share a common frame range")
    data = np.stack([t.xyz for t in trajs], axis=1)  # (n, m, 3)
    if not np.all(np.isfinite(data)):
        raise RaggedTrajectories("fill gaps before writing TRC")
    scale = 1000.0 if units == "mm" else 1.0

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    names = list(trajectories)
    n, m = len(frames), len(names)
    lines = [
        f"PathFileType\t4\t(X/Y/Z)\t{path.name}",
        "DataRate\tCameraRate\tNumFrames\tNumMarkers\tUnits\tOrigDataRate\tOrigDataStartFrame\tOrigNumFrames",
        f"{rate:g}\t{rate:g}\t{n}\t{m}\t{units}\t{rate:g}\t1\t{n}",
        "Frame#\tTime\t" + "\t\t\t".join(names) + "\t\t",
        "\t\t" + "\t".join(f"X{i}\tY{i}\tZ{i}" for i in range(1, m + 1)),
        "",
    ]
    for row in range(n):
        cells = [str(row + 1), f"{frames[row] / rate:.6f}"]
        for col in range(m):
            cells.extend(f"{v * scale:.6f}" for v in data[row, col])
        lines.append("\t".join(cells))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_trc(path) -> dict:
    path = Path(path)
    lines = path.read_text(encoding="utf-8").splitlines()
    if len(lines) < 6:
        raise MalformedDocument(f"{path}: truncated TRC header")
    header = lines[2].split("\t")
    try:
        rate = float(header[0])
        n_frames = int(header[2])
        n_markers = int(header[3])
        units = header[4]
    except (ValueError, IndexError) as err:
        raise MalformedDocument(f"{path}: bad TRC header: {err}") from err
    names = [c for c in lines[3].split("\t")[2:] if c]
    if len(names) != n_markers:
        raise MalformedDocument(f"{path}: {len(names)} marker names, header says {n_markers}")
    scale = 0.001 if units == "mm" else 1.0

    rows = [ln for ln in lines[5:] if ln.strip()]
    if len(rows) != n_frames:
        raise MalformedDocument(f"{path}: {len(rows)} data rows, header says {n_frames}")
    frames = np.zeros(n_frames, dtype=int)
    data = np.zeros((n_frames, n_markers, 3))
    for i, row in enumerate(rows):
        cells = row.split("\t")
        if len(cells) != 2 + 3 * n_markers:
            raise MalformedDocument(f"{path}: row {i + 1}: {len(cells)} columns")
        frames[i] = round(float(cells[1]) * rate)
        data[i] = np.asarray(cells[2:], dtype=float).reshape(n_markers, 3) * scale
    gaps = np.zeros(n_frames, dtype=bool)
    return {
        name: MarkerTrajectory(name, frames, data[:, col], gaps, rate)
        for col, name in enumerate(names)
    }


# --------------------------------------------------------------------------
# reports


def write_angles_csv(series: JointAngleSeries, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    columns = list(series.angles)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["frame", "time"] + columns + ["residual"])
        for row in range(len(series)):
            writer.writerow(
                [int(series.frames[row]), f"{series.times[row]:.6f}"]
                + [f"{series.angles[c][row]:.6f}" for c in columns]
                + [f"{series.residuals[row]:.9f}"]
            )


def read_angles_csv(path) -> dict:
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [r for r in reader if r]
    cols = {name: np.array([float(r[i]) for r in rows]) for i, name in enumerate(header)}
    cols["frame"] = cols["frame"].astype(int)
    return cols


def write_anthro_json(report, path, selected_frame=None):
    doc = {
        "schema_version": SCHEMA_VERSION,
        "measurements": {
            code: {
                "name": report.names[code],
                "value": report.values[code],
                "unit": report.units[code],
                "method": report.provenance[code],
            }
            for code in sorted(report.values)
        },
        "missing": dict(sorted(report.missing.items())),
        "bmi": report.bmi,
        "bmi_category": report.bmi_category,
    }
    if selected_frame is not None:
        doc["measurement_frame"] = int(selected_frame)
    _dump_json(doc, path)


def write_stats_json(stats: ExclusionStats, path):
    _dump_json({"schema_version": SCHEMA_VERSION, **stats.as_dict()}, path)


# --------------------------------------------------------------------------
# mesh (OBJ subset: v/f lines) with a JSON sidecar


def write_mesh_obj(mesh, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [f"v {v[0]:.9f} {v[1]:.9f} {v[2]:.9f}" for v in mesh.vertices]
    lines += [f"f {f[0] + 1} {f[1] + 1} {f[2] + 1}" for f in mesh.faces]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_mesh_sidecar(mesh, path):
    _dump_json(
        {
            "schema_version": SCHEMA_VERSION,
            "landmarks": {k: int(v) for k, v in sorted(mesh.landmark_table.items())},
            "segments": {
                k: [int(i) for i in np.asarray(v).tolist()]
                for k, v in sorted(mesh.segment_vertex_sets.items())
            },
        },
        path,
    )


def read_mesh(obj_path, sidecar_path=None):
    from .anthropometry import BodyMesh

    obj_path = Path(obj_path)
    vertices, faces = [], []
    for ln, raw in enumerate(obj_path.read_text(encoding="utf-8").splitlines(), start=1):
        parts = raw.split()
        if not parts or parts[0] not in ("v", "f"):
            continue
        try:
            if parts[0] == "v":
                vertices.append([float(x) for x in parts[1:4]])
            else:
                faces.append([int(x.split("/")[0]) - 1 for x in parts[1:4]])
        except (ValueError, IndexError) as err:
            raise MalformedDocument(f"{obj_path}: line {ln}: {err}") from err
    landmarks, segments = {}, {}
    if sidecar_path is not None:
        doc = _load_json(sidecar_path)
        landmarks = {k: int(v) for k, v in doc.get("landmarks", {}).items()}
        segments = {k: np.array(v, dtype=int) for k, v in doc.get("segments", {}).items()}
    return BodyMesh(
        vertices=np.array(vertices),
        faces=np.array(faces, dtype=int),
        landmark_table=landmarks,
        segment_vertex_sets=segments,
    )


# --------------------------------------------------------------------------
# run manifest


def config_hash(config: dict) -> str:
    return hashlib.sha256(
        json.dumps(config, sort_keys=True, separators=(",", ":")).encode()
    ).hexdigest()


def write_manifest(path, inputs: dict, config: dict):
    import scipy

    doc = {
        "schema_version": SCHEMA_VERSION,
        "inputs": inputs,
        "config": config,
        "config_sha256": config_hash(config),
        "versions": {
            "mocapkit": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
        },
    }
    _dump_json(doc, path)
    return doc
