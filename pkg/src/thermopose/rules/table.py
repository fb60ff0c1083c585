"""Per-frame feature table and sliding windows over it.

Frames are laid out densely by frame index; missing indices become empty
slots. Keypoints below the confidence threshold are NaN, and a frame without a
usable standard distance is blanked entirely, so every downstream feature is
NaN there. Windows are ``(n, capacity)`` copies padded at the front with empty
slots, which lets one window and a whole sequence go through the same code.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..geometry import angle_array, distance_array, relative_array, slope_array
from ..skeleton import (
    L_ELBOW, L_EYE, L_HIP, L_WRIST, NECK, NOSE, NUM_KEYPOINTS, R_ELBOW, R_EYE, R_HIP, R_WRIST,
    SkeletonFrame,
)

# derived anchor points
FOREHEAD = "forehead"
HEAD_TOP = "head_top"
CHEST = "chest"
HIP_MID = "hip_mid"
L_FOREARM_MID = "l_forearm_mid"
R_FOREARM_MID = "r_forearm_mid"


class FrameTable:
    """Feature arrays of one person's frames, one row per dense slot.

    Args:
        keypoints: (T, 18, 3) array of ``(x, y, confidence)``.
        times: (T,) timestamps, NaN for empty slots.
        present: (T,) bool, False for empty slots.
        epsilon: confidence threshold.
    """

    def __init__(self, keypoints: np.ndarray, times: np.ndarray, present: np.ndarray, epsilon: float):
        kp = np.asarray(keypoints, dtype=np.float64)
        ok = (kp[..., 2] >= epsilon) & present[:, None]
        xy = np.where(ok[..., None], kp[..., :2], np.nan)
        left = distance_array(xy[:, L_WRIST], xy[:, L_ELBOW])
        right = distance_array(xy[:, R_WRIST], xy[:, R_ELBOW])
        left_ok = ~np.isnan(left)
        ls = np.where(left_ok, left, right)
        ls = np.where(ls == 0.0, np.nan, ls)
        self.usable = ~np.isnan(ls)
        xy[~self.usable] = np.nan
        self.xy = xy
        self.ls = ls
        self.times = np.where(self.usable, times, np.nan)
        self.length = len(ls)
        self._cache: dict = {}

    # -- points ------------------------------------------------------------
    def point(self, p) -> np.ndarray:
        """(T, 2) coordinates of keypoint index ``p`` or a named anchor."""
        if isinstance(p, (int, np.integer)):
            return self.xy[:, p]
        key = ("point", p)
        if key not in self._cache:
            self._cache[key] = self._anchor(p)
        return self._cache[key]

    def _anchor(self, name: str) -> np.ndarray:
        xy, ls = self.xy, self.ls
        up = np.zeros_like(xy[:, NOSE])
        if name == FOREHEAD:
            eyes = (xy[:, R_EYE] + xy[:, L_EYE]) / 2.0
            up[:, 1] = 0.5 * ls
            nose = xy[:, NOSE] - up
            return np.where(np.isnan(eyes).any(axis=1, keepdims=True), nose, eyes)
        if name == HEAD_TOP:
            up[:, 1] = ls
            return xy[:, NOSE] - up
        if name == HIP_MID:
            return (xy[:, R_HIP] + xy[:, L_HIP]) / 2.0
        if name == CHEST:
            return (xy[:, NECK] + self.point(HIP_MID)) / 2.0
        if name == L_FOREARM_MID:
            return (xy[:, L_ELBOW] + xy[:, L_WRIST]) / 2.0
        if name == R_FOREARM_MID:
            return (xy[:, R_ELBOW] + xy[:, R_WRIST]) / 2.0
        raise KeyError(f"unknown anchor {name!r}")

    # -- features ----------------------------------------------------------
    def lr(self, a, b) -> np.ndarray:
        """Relative distance ``L_s / |a - b|`` per slot."""
        key = ("lr",) + tuple(sorted((str(a), str(b))))
        if key not in self._cache:
            self._cache[key] = relative_array(self.ls, self.point(a), self.point(b))
        return self._cache[key]

    def angle(self, a, vertex, c) -> np.ndarray:
        key = ("angle", a, vertex, c)
        if key not in self._cache:
            self._cache[key] = angle_array(self.point(a), self.point(vertex), self.point(c))
        return self._cache[key]

    def slope(self, a, b) -> np.ndarray:
        key = ("slope", a, b)
        if key not in self._cache:
            self._cache[key] = slope_array(self.point(a), self.point(b))
        return self._cache[key]

    def x(self, p) -> np.ndarray:
        return self.point(p)[:, 0]

    def y(self, p) -> np.ndarray:
        return self.point(p)[:, 1]

    def dist(self, a, b) -> np.ndarray:
        return distance_array(self.point(a), self.point(b))


class Windows:
    """Slices ``(T, ...)`` per-slot arrays into ``(n, capacity, ...)`` windows.

    Row ``k`` covers slots ``ends[k] - capacity + 1 .. ends[k]``; slots before
    the start of the table read as NaN (or False).
    """

    def __init__(self, table: FrameTable, ends: np.ndarray, capacity: int):
        self.table = table
        self.ends = np.asarray(ends, dtype=np.int64)
        self.capacity = int(capacity)
        self.n = len(self.ends)

    def __call__(self, values: np.ndarray) -> np.ndarray:
        values = np.asarray(values)
        fill = False if values.dtype == bool else np.nan
        pad = np.full((self.capacity - 1,) + values.shape[1:], fill, dtype=values.dtype)
        padded = np.concatenate([pad, values])
        view = sliding_window_view(padded, self.capacity, axis=0)[self.ends]
        # sliding_window_view appends the window axis last
        return np.ascontiguousarray(np.moveaxis(view, -1, 1))


def dense_layout(frames: Sequence[SkeletonFrame], first_index: int | None = None,
                 last_index: int | None = None):
    """Lay frames out by frame index from ``first_index`` to ``last_index``.

    Returns ``(keypoints, times, present, positions)`` where ``positions[i]``
    is the slot of ``frames[i]`` (frames outside the range are dropped and get
    -1).
    """
    if first_index is None:
        first_index = frames[0].frame_index if frames else 0
    if last_index is None:
        last_index = frames[-1].frame_index if frames else first_index - 1
    size = max(0, last_index - first_index + 1)
    kp = np.zeros((size, NUM_KEYPOINTS, 3))
    times = np.full(size, np.nan)
    present = np.zeros(size, dtype=bool)
    positions = np.full(len(frames), -1, dtype=np.int64)
    for i, f in enumerate(frames):
        slot = f.frame_index - first_index
        if 0 <= slot < size:
            kp[slot] = f.matrix
            times[slot] = f.timestamp
            present[slot] = True
            positions[i] = slot
    return kp, times, present, positions
