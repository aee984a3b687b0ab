"""Track geometry: centerline polylines, arc-length bookkeeping, track files.

A track is an open polyline with a corridor half-width, plus landmark
positions given as arc lengths along the centerline (the last landmark is
the finish line). Text file format::

    TRACK v1 <half_width> <M>
    P <x> <y>        one per centerline point, in order
    L <s>            one per landmark arc length, strictly increasing

Lines starting with ``#`` are comments.
"""

from __future__ import annotations

import importlib.resources
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "TrackSpec",
    "load_track",
    "loads_track",
    "save_track",
    "bundled_track",
    "bundled_track_names",
    "straight_track",
    "oval_track",
    "s_curve_track",
    "hairpin_track",
]

BUNDLED = ("oval-small", "s-curve", "hairpin")


class TrackError(ValueError):
    """Malformed track geometry or track file."""


@dataclass
class TrackSpec:
    centerline: np.ndarray  # (N, 2) float64 world points
    half_width: float
    landmarks: np.ndarray  # (M,) strictly increasing arc lengths
    texture_seed: int = 0

    # derived geometry, filled in __post_init__
    seg_start: np.ndarray = field(init=False, repr=False)
    seg_vec: np.ndarray = field(init=False, repr=False)
    seg_len: np.ndarray = field(init=False, repr=False)
    cum_len: np.ndarray = field(init=False, repr=False)
    total_length: float = field(init=False)

    def __post_init__(self):
        pts = np.asarray(self.centerline, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 2:
            raise TrackError(f"centerline must be (N>=2, 2), got {pts.shape}")
        self.centerline = pts
        if not self.half_width > 0:
            raise TrackError(f"half_width must be positive, got {self.half_width}")
        self.seg_start = pts[:-1]
        self.seg_vec = pts[1:] - pts[:-1]
        self.seg_len = np.linalg.norm(self.seg_vec, axis=1)
        if (self.seg_len == 0).any():
            raise TrackError("centerline contains a zero-length segment")
        self.cum_len = np.concatenate([[0.0], np.cumsum(self.seg_len)])
        self.total_length = float(self.cum_len[-1])
        lm = np.asarray(self.landmarks, dtype=np.float64)
        if lm.ndim != 1 or lm.size < 1:
            raise TrackError("at least one landmark (the finish) is required")
        if (np.diff(lm) <= 0).any():
            raise TrackError("landmark positions must be strictly increasing")
        if lm[0] <= 0 or lm[-1] > self.total_length:
            raise TrackError("landmark positions must lie in (0, total_length]")
        self.landmarks = lm

    @property
    def landmark_count(self) -> int:
        return int(self.landmarks.size)

    def project(self, point) -> tuple[float, float]:
        """Arc length and distance of the nearest centerline point.

        Ties resolve to the lowest segment index, so projection is
        deterministic everywhere.
        """
        p = np.asarray(point, dtype=np.float64)
        rel = p[None, :] - self.seg_start
        t = (rel * self.seg_vec).sum(axis=1) / (self.seg_len * self.seg_len)
        t = np.clip(t, 0.0, 1.0)
        closest = self.seg_start + t[:, None] * self.seg_vec
        d2 = ((p[None, :] - closest) ** 2).sum(axis=1)
        i = int(np.argmin(d2))
        arc = float(self.cum_len[i] + t[i] * self.seg_len[i])
        return arc, float(np.sqrt(d2[i]))

    def point_at(self, arc: float) -> tuple[np.ndarray, np.ndarray]:
        """Centerline point and unit tangent at arc length ``arc``."""
        s = float(np.clip(arc, 0.0, self.total_length))
        i = int(np.searchsorted(self.cum_len[1:], s, side="left"))
        i = min(i, len(self.seg_len) - 1)
        t = (s - self.cum_len[i]) / self.seg_len[i]
        point = self.seg_start[i] + t * self.seg_vec[i]
        tangent = self.seg_vec[i] / self.seg_len[i]
        return point, tangent

    def start_pose(self) -> tuple[np.ndarray, float]:
        """Start position and heading (along the first segment)."""
        tangent = self.seg_vec[0] / self.seg_len[0]
        return self.centerline[0].copy(), float(np.arctan2(tangent[1], tangent[0]))


# ---------------------------------------------------------------------------
# file format


def loads_track(text: str, texture_seed: int = 0) -> TrackSpec:
    points = []
    landmarks = []
    header = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if header is None:
            if len(parts) != 4 or parts[0] != "TRACK" or parts[1] != "v1":
                raise TrackError(f"line {lineno}: expected header 'TRACK v1 <half_width> <M>'")
            header = (float(parts[2]), int(parts[3]))
            continue
        if parts[0] == "P" and len(parts) == 3:
            points.append((float(parts[1]), float(parts[2])))
        elif parts[0] == "L" and len(parts) == 2:
            landmarks.append(float(parts[1]))
        else:
            raise TrackError(f"line {lineno}: unrecognized record {line!r}")
    if header is None:
        raise TrackError("missing TRACK header")
    half_width, m = header
    if len(landmarks) != m:
        raise TrackError(f"header declares {m} landmarks but file lists {len(landmarks)}")
    return TrackSpec(np.array(points), half_width, np.array(landmarks), texture_seed)


def load_track(path, texture_seed: int = 0) -> TrackSpec:
    with open(path, "r", encoding="ascii") as fh:
        return loads_track(fh.read(), texture_seed)


def save_track(spec: TrackSpec, path) -> None:
    lines = [f"TRACK v1 {float(spec.half_width)!r} {spec.landmark_count}"]
    for x, y in spec.centerline:
        lines.append(f"P {float(x)!r} {float(y)!r}")
    for s in spec.landmarks:
        lines.append(f"L {float(s)!r}")
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(lines) + "\n")


def bundled_track_names() -> tuple[str, ...]:
    return BUNDLED


def bundled_track(name: str, texture_seed: int = 0) -> TrackSpec:
    if name not in BUNDLED:
        raise TrackError(f"unknown bundled track {name!r}; choose from {BUNDLED}")
    res = importlib.resources.files("trackdrqn") / "tracks" / f"{name}.track"
    return loads_track(res.read_text(encoding="ascii"), texture_seed)


# ---------------------------------------------------------------------------
# geometry builders


def _even_landmarks(total: float, m: int) -> np.ndarray:
    # last landmark is the finish, kept just short of the polyline's end
    finish = total - 2.0
    return np.array([finish * (i + 1) / m for i in range(m)])


def straight_track(length: float = 200.0, half_width: float = 2.0,
                   n_landmarks: int = 4, texture_seed: int = 7,
                   spacing: float = 10.0) -> TrackSpec:
    n = max(2, int(round(length / spacing)) + 1)
    xs = np.linspace(0.0, length, n)
    pts = np.stack([xs, np.zeros_like(xs)], axis=1)
    return TrackSpec(pts, half_width, _even_landmarks(length, n_landmarks), texture_seed)


def _sample_path(waypoints: np.ndarray, spacing: float) -> np.ndarray:
    """Resample a dense waypoint path to roughly uniform spacing."""
    seg = np.linalg.norm(np.diff(waypoints, axis=0), axis=1)
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    total = cum[-1]
    n = max(2, int(round(total / spacing)) + 1)
    targets = np.linspace(0.0, total, n)
    out = np.empty((n, 2))
    out[:, 0] = np.interp(targets, cum, waypoints[:, 0])
    out[:, 1] = np.interp(targets, cum, waypoints[:, 1])
    return out


def _path_length(pts: np.ndarray) -> float:
    return float(np.linalg.norm(np.diff(pts, axis=0), axis=1).sum())


def oval_track(straight: float = 750.0, radius: float = 165.0,
               half_width: float = 3.0, n_landmarks: int = 4,
               texture_seed: int = 11, gap: float = 60.0,
               spacing: float = 8.0) -> TrackSpec:
    """Open rounded-rectangle loop; the lap ends ``gap`` short of closing."""
    dense = []
    # bottom straight, left to right
    for t in np.linspace(0.0, straight, 200):
        dense.append((t, 0.0))
    # right semicircle (center (straight, radius)), counterclockwise
    for a in np.linspace(-np.pi / 2, np.pi / 2, 300)[1:]:
        dense.append((straight + radius * np.cos(a), radius + radius * np.sin(a)))
    # top straight, right to left
    for t in np.linspace(straight, 0.0, 200)[1:]:
        dense.append((t, 2 * radius))
    # left semicircle (center (0, radius)) back toward the start
    for a in np.linspace(np.pi / 2, 3 * np.pi / 2, 300)[1:]:
        dense.append((radius * np.cos(a), radius + radius * np.sin(a)))
    pts = _sample_path(np.array(dense), spacing)
    keep = _path_length(pts) - gap
    pts = _trim_to_length(pts, keep)
    return TrackSpec(pts, half_width, _even_landmarks(keep, n_landmarks), texture_seed)


def _trim_to_length(pts: np.ndarray, keep: float) -> np.ndarray:
    seg = np.linalg.norm(np.diff(pts, axis=0), axis=1)
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    i = int(np.searchsorted(cum, keep))
    out = pts[:i].tolist()
    if i < len(pts):
        t = (keep - cum[i - 1]) / seg[i - 1]
        out.append(pts[i - 1] + t * (pts[i] - pts[i - 1]))
    return np.array(out)


def s_curve_track(length: float = 900.0, amplitude: float = 90.0,
                  periods: float = 2.0, half_width: float = 2.0,
                  n_landmarks: int = 4, texture_seed: int = 23,
                  spacing: float = 8.0) -> TrackSpec:
    xs = np.linspace(0.0, length, 600)
    ys = amplitude * np.sin(2 * np.pi * periods * xs / length)
    pts = _sample_path(np.stack([xs, ys], axis=1), spacing)
    return TrackSpec(pts, half_width,
                     _even_landmarks(_path_length(pts), n_landmarks), texture_seed)


def hairpin_track(approach: float = 160.0, radius: float = 28.0,
                  tail: float = 500.0, half_width: float = 2.5,
                  n_landmarks: int = 4, texture_seed: int = 31,
                  spacing: float = 8.0) -> TrackSpec:
    """Straight out, a tight 180-degree turn, then a long run back."""
    dense = [(t, 0.0) for t in np.linspace(0.0, approach, 120)]
    for a in np.linspace(-np.pi / 2, np.pi / 2, 240)[1:]:
        dense.append((approach + radius * np.cos(a), radius + radius * np.sin(a)))
    for t in np.linspace(approach, approach - tail, 300)[1:]:
        dense.append((t, 2 * radius))
    pts = _sample_path(np.array(dense), spacing)
    return TrackSpec(pts, half_width,
                     _even_landmarks(_path_length(pts), n_landmarks), texture_seed)
