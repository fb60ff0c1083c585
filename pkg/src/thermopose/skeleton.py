"""COCO-18 skeleton data model.

Keypoints follow the OpenPose COCO layout (index 18, the background channel,
is never stored). Image coordinates: x grows to the right, y grows downward.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

import numpy as np

NUM_KEYPOINTS = 18

NOSE = 0
NECK = 1
R_SHOULDER = 2
R_ELBOW = 3
R_WRIST = 4
L_SHOULDER = 5
L_ELBOW = 6
L_WRIST = 7
R_HIP = 8
R_KNEE = 9
R_ANKLE = 10
L_HIP = 11
L_KNEE = 12
L_ANKLE = 13
R_EYE = 14
L_EYE = 15
R_EAR = 16
L_EAR = 17

KEYPOINT_NAMES = (
    "Nose", "Neck", "RShoulder", "RElbow", "RWrist", "LShoulder", "LElbow",
    "LWrist", "RHip", "RKnee", "RAnkle", "LHip", "LKnee", "LAnkle", "REye",
    "LEye", "REar", "LEar",
)

DEFAULT_EPSILON = 0.5


class FormatError(ValueError):
    """Input does not have the expected shape or layout."""


class ConfigError(ValueError):
    """A configuration value is out of range."""


@dataclass(frozen=True)
class Keypoint:
    x: float
    y: float
    confidence: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"keypoint coordinates must be finite, got ({self.x}, {self.y})")
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence must lie in [0, 1], got {self.confidence}")


@dataclass(frozen=True, eq=False)
class SkeletonFrame:
    """One person's 18 keypoints at one frame.

    The coordinates live in an immutable (18, 3) float64 array of
    ``(x, y, confidence)`` rows; :attr:`keypoints` exposes them as
    :class:`Keypoint` values.
    """

    matrix: np.ndarray
    frame_index: int
    timestamp: float
    person_id: int = 0

    @property
    def keypoints(self) -> tuple[Keypoint, ...]:
        return tuple(Keypoint(float(r[0]), float(r[1]), float(r[2])) for r in self.matrix)

    def point(self, index: int) -> tuple[float, float]:
        _check_index(index)
        return float(self.matrix[index, 0]), float(self.matrix[index, 1])

    def confidence(self, index: int) -> float:
        _check_index(index)
        return float(self.matrix[index, 2])

    def with_matrix(self, matrix: np.ndarray) -> "SkeletonFrame":
        """Copy of this frame with replaced keypoint data (same indices and time)."""
        return frame_from_matrix(matrix, self.frame_index, timestamp=self.timestamp,
                                 person_id=self.person_id)

    def __eq__(self, other):
        if not isinstance(other, SkeletonFrame):
            return NotImplemented
        return (self.frame_index == other.frame_index
                and self.person_id == other.person_id
                and self.timestamp == other.timestamp
                and np.array_equal(self.matrix, other.matrix))

    def __hash__(self):
        return hash((self.frame_index, self.person_id, self.timestamp, self.matrix.tobytes()))


def _check_index(index: int) -> None:
    if not 0 <= index < NUM_KEYPOINTS:
        raise IndexError(f"keypoint index {index} outside 0..{NUM_KEYPOINTS - 1}")


def frame_from_matrix(matrix, frame_index: int, fps: float | None = None, person_id: int = 0,
                      timestamp: float | None = None) -> SkeletonFrame:
    """Build a :class:`SkeletonFrame` from an 18x3 ``(x, y, confidence)`` matrix.

    The timestamp defaults to ``frame_index / fps``.

    Raises:
        FormatError: the matrix is not 18x3.
        ValueError: a row holds a non-finite value or a confidence outside [0, 1].
    """
    m = np.array(matrix, dtype=np.float64)
    if m.shape != (NUM_KEYPOINTS, 3):
        raise FormatError(f"expected an 18x3 keypoint matrix, got shape {m.shape}")
    if frame_index < 0:
        raise ValueError(f"frame_index must be nonnegative, got {frame_index}")
    if person_id < 0:
        raise ValueError(f"person_id must be nonnegative, got {person_id}")
    finite = np.isfinite(m).all(axis=1)
    conf_ok = (m[:, 2] >= 0.0) & (m[:, 2] <= 1.0)
    bad = np.flatnonzero(~(finite & conf_ok))
    if bad.size:
        row = int(bad[0])
        raise ValueError(f"row {row} ({KEYPOINT_NAMES[row]}) has invalid values {m[row].tolist()}")
    if timestamp is None:
        if fps is None or fps <= 0:
            raise ConfigError("fps must be positive when no timestamp is given")
        timestamp = frame_index / fps
    m.setflags(write=False)
    return SkeletonFrame(m, int(frame_index), float(timestamp), int(person_id))


def valid(frame: SkeletonFrame, index: int, epsilon: float = DEFAULT_EPSILON) -> bool:
    """True iff keypoint ``index`` has confidence >= epsilon (boundary inclusive)."""
    _check_index(index)
    if not 0.0 <= epsilon <= 1.0:
        raise ValueError(f"epsilon must lie in [0, 1], got {epsilon}")
    return bool(frame.matrix[index, 2] >= epsilon)


def required_valid(frame: SkeletonFrame, indices: Iterable[int],
                   epsilon: float = DEFAULT_EPSILON) -> bool:
    indices = list(indices)
    if not indices:
        raise ValueError("required_valid needs at least one keypoint index")
    return all(valid(frame, i, epsilon) for i in indices)


class FrameWindow:
    """The most recent ``window_seconds`` of one person's frames.

    Holds at most ``ceil(window_seconds * fps)`` frames and also drops frames
    whose index falls out of that many slots behind the newest one, so a
    detector dropout shows up as missing slots rather than stretching the
    window back in time. Single writer.
    """

    def __init__(self, window_seconds: float, fps: float):
        if fps <= 0:
            raise ConfigError(f"fps must be positive, got {fps}")
        if window_seconds <= 0:
            raise ConfigError(f"window_seconds must be positive, got {window_seconds}")
        self.window_seconds = float(window_seconds)
        self.fps = float(fps)
        self.capacity = window_capacity(window_seconds, fps)
        self._frames: deque[SkeletonFrame] = deque()

    def push(self, frame: SkeletonFrame) -> None:
        if self._frames:
            last = self._frames[-1]
            if frame.person_id != last.person_id:
                raise ValueError(f"window holds person {last.person_id}, got person {frame.person_id}")
            if frame.frame_index <= last.frame_index:
                raise ValueError(f"frame_index must increase: {frame.frame_index} after {last.frame_index}")
        self._frames.append(frame)
        oldest_kept = frame.frame_index - self.capacity + 1
        while self._frames and (len(self._frames) > self.capacity
                                or self._frames[0].frame_index < oldest_kept):
            self._frames.popleft()

    def extend(self, frames: Iterable[SkeletonFrame]) -> None:
        for f in frames:
            self.push(f)

    @property
    def frames(self) -> tuple[SkeletonFrame, ...]:
        return tuple(self._frames)

    @property
    def person_id(self) -> int | None:
        return self._frames[0].person_id if self._frames else None

    def __len__(self) -> int:
        return len(self._frames)

    def __iter__(self) -> Iterator[SkeletonFrame]:
        return iter(self._frames)

    def __getitem__(self, i: int) -> SkeletonFrame:
        return self._frames[i]

    @classmethod
    def of(cls, frames: Sequence[SkeletonFrame], window_seconds: float, fps: float) -> "FrameWindow":
        w = cls(window_seconds, fps)
        w.extend(frames)
        return w


def window_capacity(window_seconds: float, fps: float) -> int:
    # round first so that e.g. 2.0 * 30 does not become 61 through float noise
    return max(1, math.ceil(round(window_seconds * fps, 9)))


def stack_frames(frames: Sequence[SkeletonFrame]) -> np.ndarray:
    """(T, 18, 3) array of the frames' keypoint matrices."""
    if not frames:
        return np.zeros((0, NUM_KEYPOINTS, 3))
    return np.stack([f.matrix for f in frames])
