"""Gap filling and zero-phase low-pass filtering of marker trajectories.

Interior gaps are bridged with a natural cubic spline over the valid
samples; leading and trailing gaps hold the nearest valid value. The
low-pass stage is a Butterworth design (bilinear transform with frequency
pre-warping via scipy) run forward then backward, so the net response is
the squared magnitude with zero phase shift. Edges are handled by
reflective padding of length 3 * order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.signal import butter, filtfilt

from .errors import AllGaps, MocapError, NyquistViolation, TooShort


@dataclass(frozen=True)
class MarkerTrajectory:
    """Time-ordered 3D samples of one named marker with a gap mask.

    ``gap_mask`` is True where the sample is missing/excluded. Non-gap
    samples must be finite; frame indices strictly increasing.
    """

    marker_id: str
    frames: np.ndarray
    xyz: np.ndarray
    gap_mask: np.ndarray
    rate: float = 30.0

    def __post_init__(self):
        frames = np.array(self.frames, dtype=int)
        xyz = np.array(self.xyz, dtype=float).reshape(len(frames), 3)
        gaps = np.array(self.gap_mask, dtype=bool).reshape(len(frames))
        if len(frames) and np.any(np.diff(frames) <= 0):
            raise ValueError(f"{self.marker_id}: frame indices must strictly increase")
        if not np.all(np.isfinite(xyz[~gaps])):
            raise ValueError(f"{self.marker_id}: non-gap samples must be finite")
        if self.rate <= 0:
            raise ValueError("rate must be positive")
        for a in (frames, xyz, gaps):
            a.setflags(write=False)
        object.__setattr__(self, "frames", frames)
        object.__setattr__(self, "xyz", xyz)
        object.__setattr__(self, "gap_mask", gaps)

    def __len__(self):
        return len(self.frames)

    @property
    def times(self) -> np.ndarray:
        return self.frames / self.rate

    def with_xyz(self, xyz) -> "MarkerTrajectory":
        return MarkerTrajectory(self.marker_id, self.frames, xyz, self.gap_mask, self.rate)


@dataclass(frozen=True)
class FilterSpec:
    """Zero-lag low-pass design: even order, cutoff below Nyquist."""

    order: int = 4
    cutoff_hz: float = 6.0

    def __post_init__(self):
        if self.order not in (2, 4, 6, 8):
            raise ValueError("order must be one of 2, 4, 6, 8")
        if self.cutoff_hz <= 0:
            raise ValueError("cutoff must be positive")


def fill_gaps(traj: MarkerTrajectory) -> MarkerTrajectory:
    """Interpolate interior gaps; hold edges at the nearest valid sample.

    The gap mask is preserved so downstream consumers can down-weight
    filled frames. Raises AllGaps when no valid sample exists.
    """
    valid = ~traj.gap_mask
    if not valid.any():
        raise AllGaps(f"{traj.marker_id}: every sample is gapped")
    if valid.all():
        return traj

    t = traj.times
    xyz = np.array(traj.xyz)
    if valid.sum() == 1:
        xyz[:] = traj.xyz[valid][0]
    else:
        spline = CubicSpline(t[valid], traj.xyz[valid], bc_type="natural")
        missing = ~valid
        xyz[missing] = spline(t[missing])
        # edges: hold, don't extrapolate
        first, last = np.flatnonzero(valid)[[0, -1]]
        xyz[:first] = traj.xyz[first]
        xyz[last + 1 :] = traj.xyz[last]
    return traj.with_xyz(xyz)


def butterworth(traj: MarkerTrajectory, spec: FilterSpec = FilterSpec()) -> MarkerTrajectory:
    """Forward-backward Butterworth low-pass on each coordinate.

    Expects gaps to be filled already. Raises NyquistViolation when the
    cutoff reaches half the sampling rate and TooShort below 3 * order
    samples.
    """
    if spec.cutoff_hz >= traj.rate / 2.0:
        raise NyquistViolation(
            f"cutoff {spec.cutoff_hz} Hz >= Nyquist {traj.rate / 2.0} Hz"
        )
    n = len(traj)
    if n < 3 * spec.order:
        raise TooShort(f"{traj.marker_id}: {n} samples < {3 * spec.order}")
    if not np.all(np.isfinite(traj.xyz)):
        raise ValueError(f"{traj.marker_id}: fill gaps before filtering")
    b, a = butter(spec.order, spec.cutoff_hz, btype="low", fs=traj.rate)
    padlen = min(3 * spec.order, n - 1)
    xyz = filtfilt(b, a, traj.xyz, axis=0, padtype="even", padlen=padlen)
    return traj.with_xyz(xyz)


def filter_set(trajectories: dict, spec: FilterSpec = FilterSpec()) -> dict:
    """fill_gaps then butterworth for every marker in the set.

    Per-marker failures are re-raised with the marker id attached.
    """
    out = {}
    for marker_id, traj in trajectories.items():
        try:
            out[marker_id] = butterworth(fill_gaps(traj), spec)
        except MocapError as err:
            raise type(err)(f"marker {marker_id!r}: {err}") from err
    return out
