"""Feature kernels: standard distance, relative distance, slope, joint angle,
movement speed and windowed oscillation counting.

Scalar functions take a :class:`SkeletonFrame`; the ``*_array`` kernels work
on stacked coordinates with NaN marking invalid samples and are what the rule
engine runs on. Angles are in degrees throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .skeleton import (
    DEFAULT_EPSILON, L_ELBOW, L_WRIST, R_ELBOW, R_WRIST, FrameWindow, SkeletonFrame, valid,
)

LEFT_FOREARM = "left_forearm"
RIGHT_FOREARM = "right_forearm"

# rel_distance of two coincident points; compares >= every proximity threshold
COINCIDENT = math.inf


class FrameUnusable(ValueError):
    """No forearm yields a nonzero standard distance; drop the frame."""


class InsufficientData(ValueError):
    pass


@dataclass(frozen=True)
class FeatureContext:
    standard_distance: float
    source: str
    frame: SkeletonFrame
    epsilon: float = DEFAULT_EPSILON


@dataclass(frozen=True)
class Oscillation:
    cycle_count: int
    peak_to_peak: float | None = None
    period: float | None = None


@dataclass(frozen=True)
class Speeds:
    """Per consecutive valid pair: time of the later sample, px/s, forearms/s.

    The normalized entry is NaN when the later frame has no standard distance.
    """

    times: tuple[float, ...]
    pixels_per_second: tuple[float, ...]
    forearms_per_second: tuple[float, ...]


def _dist(frame: SkeletonFrame, a: int, b: int) -> float:
    m = frame.matrix
    return math.hypot(m[a, 0] - m[b, 0], m[a, 1] - m[b, 1])


def standard_distance(frame: SkeletonFrame, epsilon: float = DEFAULT_EPSILON) -> FeatureContext:
    """Forearm length used as the unit of every relative distance.

    Left forearm (wrist 7 to elbow 6) when both points are valid, otherwise
    the right forearm (4 to 3).

    Raises:
        FrameUnusable: neither forearm is valid, or the chosen one has zero length.
    """
    for wrist, elbow, source in ((L_WRIST, L_ELBOW, LEFT_FOREARM), (R_WRIST, R_ELBOW, RIGHT_FOREARM)):
        if valid(frame, wrist, epsilon) and valid(frame, elbow, epsilon):
            ls = _dist(frame, wrist, elbow)
            if ls == 0.0:
                raise FrameUnusable(f"frame {frame.frame_index}: zero-length {source}")
            return FeatureContext(ls, source, frame, epsilon)
    raise FrameUnusable(f"frame {frame.frame_index}: no valid forearm")


def rel_distance(ctx: FeatureContext, a: int, b: int) -> float:
    """L_s / |p_a - p_b|: larger means closer; :data:`COINCIDENT` for equal points."""
    if a == b:
        raise ValueError("rel_distance needs two distinct keypoints")
    for i in (a, b):
        if not valid(ctx.frame, i, ctx.epsilon):
            raise ValueError(f"keypoint {i} is not valid in frame {ctx.frame.frame_index}")
    d = _dist(ctx.frame, a, b)
    if d == 0.0:
        return COINCIDENT
    return ctx.standard_distance / d


def slope_deg(frame: SkeletonFrame, a: int, b: int, epsilon: float = DEFAULT_EPSILON) -> float:
    """Slope of the segment a->b in degrees, within (-90, 90]; vertical is 90."""
    if a == b:
        raise ValueError("slope_deg needs two distinct keypoints")
    for i in (a, b):
        if not valid(frame, i, epsilon):
            raise ValueError(f"keypoint {i} is not valid in frame {frame.frame_index}")
    (xa, ya), (xb, yb) = frame.point(a), frame.point(b)
    if xa == xb and ya == yb:
        raise ValueError(f"keypoints {a} and {b} coincide")
    return _slope(xb - xa, yb - ya)


def _slope(dx: float, dy: float) -> float:
    if dx == 0.0:
        return 90.0
    s = math.degrees(math.atan(dy / dx))
    return 90.0 if s == -90.0 else s


def joint_angle_deg(frame: SkeletonFrame, a: int, vertex: int, c: int,
                    epsilon: float = DEFAULT_EPSILON) -> float:
    """Interior angle at ``vertex`` between the rays to ``a`` and ``c``, in [0, 180]."""
    for i in (a, vertex, c):
        if not valid(frame, i, epsilon):
            raise ValueError(f"keypoint {i} is not valid in frame {frame.frame_index}")
    m = frame.matrix
    ux, uy = m[a, 0] - m[vertex, 0], m[a, 1] - m[vertex, 1]
    vx, vy = m[c, 0] - m[vertex, 0], m[c, 1] - m[vertex, 1]
    if (ux == 0 and uy == 0) or (vx == 0 and vy == 0):
        raise ValueError("joint_angle_deg: zero-length ray")
    return math.degrees(math.atan2(abs(ux * vy - uy * vx), ux * vx + uy * vy))


def speed(window: FrameWindow | Sequence[SkeletonFrame], index: int,
          epsilon: float = DEFAULT_EPSILON) -> Speeds:
    """Movement speed of keypoint ``index`` between consecutive valid samples.

    Raises:
        InsufficientData: fewer than two frames with the keypoint valid.
    """
    samples = [f for f in window if valid(f, index, epsilon)]
    if len(samples) < 2:
        raise InsufficientData(f"keypoint {index} valid in {len(samples)} frame(s), need 2")
    times, px, norm = [], [], []
    for prev, cur in zip(samples, samples[1:]):
        dt = cur.timestamp - prev.timestamp
        v = _dist_frames(prev, cur, index) / dt
        try:
            ls = standard_distance(cur, epsilon).standard_distance
            vn = v / ls
        except FrameUnusable:
            vn = math.nan
        times.append(cur.timestamp)
        px.append(v)
        norm.append(vn)
    return Speeds(tuple(times), tuple(px), tuple(norm))


def _dist_frames(f0: SkeletonFrame, f1: SkeletonFrame, i: int) -> float:
    return math.hypot(f1.matrix[i, 0] - f0.matrix[i, 0], f1.matrix[i, 1] - f0.matrix[i, 1])


def detect_oscillation(samples: Sequence[tuple[float, float]], min_amplitude: float,
                       min_cycles: int = 1) -> Oscillation:
    """Count full swings of a signal around its mean.

    A half-cycle counts once its extremum lies at least ``min_amplitude / 2``
    from the mean; consecutive half-cycles must alternate in sign. Returns a
    zero count (no amplitude or period) below ``min_cycles`` cycles or with
    fewer than three samples.
    """
    if min_amplitude <= 0:
        raise ValueError("min_amplitude must be positive")
    if min_cycles < 1:
        raise ValueError("min_cycles must be >= 1")
    if len(samples) < 3:
        return Oscillation(0)
    t = np.array([s[0] for s in samples], dtype=np.float64)
    v = np.array([s[1] for s in samples], dtype=np.float64)
    if np.any(np.diff(t) < 0):
        raise ValueError("samples must be ordered by timestamp")
    cycles, p2p = oscillation_array(v[None, :], np.array([min_amplitude]))
    n = int(cycles[0])
    if n < min_cycles or n == 0:
        return Oscillation(0)
    return Oscillation(n, float(p2p[0]), float((t[-1] - t[0]) / n))


# ---------------------------------------------------------------------------
# array kernels (NaN = invalid sample)

def distance_array(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Euclidean distance of (..., 2) point arrays."""
    return np.hypot(a[..., 0] - b[..., 0], a[..., 1] - b[..., 1])


def relative_array(ls: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    d = distance_array(a, b)
    with np.errstate(divide="ignore", invalid="ignore"):
        r = ls / d
    return np.where(d == 0.0, np.where(np.isnan(ls), np.nan, COINCIDENT), r)


def slope_array(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    dx = b[..., 0] - a[..., 0]
    dy = b[..., 1] - a[..., 1]
    with np.errstate(divide="ignore", invalid="ignore"):
        s = np.degrees(np.arctan(dy / dx))
    s = np.where(dx == 0.0, np.where(dy == 0.0, np.nan, 90.0), s)
    return np.where(s == -90.0, 90.0, s)


def angle_array(a: np.ndarray, vertex: np.ndarray, c: np.ndarray) -> np.ndarray:
    u = a - vertex
    v = c - vertex
    cross = u[..., 0] * v[..., 1] - u[..., 1] * v[..., 0]
    dot = u[..., 0] * v[..., 0] + u[..., 1] * v[..., 1]
    ang = np.degrees(np.arctan2(np.abs(cross), dot))
    degenerate = ((u[..., 0] == 0) & (u[..., 1] == 0)) | ((v[..., 0] == 0) & (v[..., 1] == 0))
    return np.where(degenerate, np.nan, ang)


def band_cycles(values: np.ndarray, low, high) -> np.ndarray:
    """Full cycles of each row between ``<= low`` and ``>= high`` excursions.

    Samples strictly inside the band (and NaNs) are ignored; each maximal run
    of same-side excursions is a half-cycle.
    """
    low = np.asarray(low, dtype=np.float64)
    high = np.asarray(high, dtype=np.float64)
    if low.ndim == 1:
        low = low[:, None]
    if high.ndim == 1:
        high = high[:, None]
    state = np.where(values >= high, 1, np.where(values <= low, -1, 0)).astype(np.int8)
    n, m = state.shape
    if m == 0:
        return np.zeros(n, dtype=np.int64)
    cols = np.broadcast_to(np.arange(m), (n, m))
    last = np.maximum.accumulate(np.where(state != 0, cols, -1), axis=1)
    filled = np.where(last >= 0, np.take_along_axis(state, np.maximum(last, 0), axis=1), 0)
    flips = ((filled[:, 1:] != filled[:, :-1]) & (filled[:, :-1] != 0)).sum(axis=1)
    halves = flips + (state != 0).any(axis=1)
    return halves // 2


def oscillation_array(values: np.ndarray, min_amplitude) -> tuple[np.ndarray, np.ndarray]:
    """Per-row (cycle_count, peak_to_peak) of mean-removed oscillation."""
    amp = np.asarray(min_amplitude, dtype=np.float64)
    ok = ~np.isnan(values)
    count = ok.sum(axis=1)
    filled = np.where(ok, values, 0.0)
    mean = filled.sum(axis=1) / np.maximum(count, 1)
    hi = np.where(ok, values, -np.inf).max(axis=1)
    lo = np.where(ok, values, np.inf).min(axis=1)
    p2p = np.where(count > 0, hi - lo, np.nan)
    half = amp / 2.0
    cycles = band_cycles(values, mean - half, mean + half)
    cycles = np.where((count >= 3) & ~np.isnan(half), cycles, 0)
    return cycles, p2p


def trailing_run(flags: np.ndarray) -> np.ndarray:
    """Length of the run of True values ending at each row's last column."""
    n, m = flags.shape
    rev = flags[:, ::-1]
    first_false = np.argmin(rev, axis=1)
    return np.where(rev.all(axis=1), m, first_false)


def consecutive_pairs(valid_mask: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """For each column, the column of the previous valid sample in the row.

    Returns ``(prev, has_prev)``; ``has_prev`` is False where the column itself
    is invalid or no earlier sample is valid.
    """
    n, m = valid_mask.shape
    cols = np.broadcast_to(np.arange(m), (n, m))
    last = np.maximum.accumulate(np.where(valid_mask, cols, -1), axis=1)
    prev = np.empty_like(last)
    prev[:, 0] = -1
    prev[:, 1:] = last[:, :-1]
    has_prev = valid_mask & (prev >= 0)
    return np.maximum(prev, 0), has_prev
