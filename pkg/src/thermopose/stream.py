"""Per-person streaming classification and detection events.

Raw per-frame labels flicker around transitions, so detections are grouped
into episodes: a category starts once it is the raw label for
``hysteresis_frames`` consecutive frames, and ends once that many consecutive
frames carry some other label (or the stream ends). Each episode becomes one
:class:`DetectionRecord`, emitted when it ends.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Sequence

from .rules import (
    Detection, NoUsableFrames, PoseCategory, RuleConfig, classify, classify_sequence, detection_for,
)
from .skeleton import FrameWindow, SkeletonFrame


@dataclass(frozen=True)
class DetectionRecord:
    stream: str
    person_id: int
    onset_frame: int
    last_frame: int
    onset_timestamp: float
    category: str
    score: int | None
    preference: int | None
    evidence: tuple = ()

    def to_dict(self) -> dict:
        return {
            "stream": self.stream,
            "person_id": self.person_id,
            "onset_frame": self.onset_frame,
            "last_frame": self.last_frame,
            "onset_timestamp": self.onset_timestamp,
            "category": self.category,
            "score": self.score,
            "preference": self.preference,
            "evidence": [{"feature": n, "value": v, "threshold": t} for n, v, t in self.evidence],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), separators=(",", ":"))

    @classmethod
    def from_dict(cls, d: dict) -> "DetectionRecord":
        ev = tuple((e["feature"], e["value"], e["threshold"]) for e in d.get("evidence", ()))
        return cls(d["stream"], d["person_id"], d["onset_frame"], d["last_frame"],
                   d["onset_timestamp"], d["category"], d["score"], d["preference"], ev)

    @classmethod
    def from_json(cls, line: str) -> "DetectionRecord":
        return cls.from_dict(json.loads(line))


def record_from_detection(det: Detection, frame: SkeletonFrame, last_frame: int,
                          stream: str) -> DetectionRecord:
    evidence = tuple((n, None if v != v else v, t) for n, v, t in det.evidence)
    return DetectionRecord(stream, frame.person_id, frame.frame_index, last_frame, frame.timestamp,
                           det.category.value, det.score, det.preference, evidence)


class EpisodeTracker:
    """Hysteresis state machine over raw labels (``PoseCategory.None_`` = nothing).

    ``step`` returns the episodes closed by the new label as
    ``(category, onset_position, last_position)`` tuples; ``finish`` closes
    the open one.
    """

    def __init__(self, hysteresis_frames: int):
        if hysteresis_frames < 1:
            raise ValueError("hysteresis_frames must be >= 1")
        self.h = int(hysteresis_frames)
        self.active = None
        self.onset = self.last = -1
        self.cand = None
        self.cand_start = -1
        self.cand_len = 0
        self.miss = 0

    def step(self, pos: int, label: PoseCategory) -> list:
        closed = []
        if self.active is not None and label is self.active:
            self.last = pos
            self.miss = 0
            self.cand, self.cand_len = None, 0
            return closed
        if label is self.cand:
            self.cand_len += 1
        else:
            self.cand, self.cand_start, self.cand_len = label, pos, 1
        if self.active is not None:
            self.miss += 1
        if label is not PoseCategory.None_ and self.cand_len >= self.h:
            if self.active is not None:
                closed.append((self.active, self.onset, self.last))
            self.active, self.onset, self.last, self.miss = label, self.cand_start, pos, 0
            self.cand, self.cand_len = None, 0
        elif self.active is not None and self.miss >= self.h:
            closed.append((self.active, self.onset, self.last))
            self.active = None
        return closed

    def finish(self) -> list:
        closed = []
        if self.active is not None:
            closed.append((self.active, self.onset, self.last))
        self.active = None
        return closed

    @property
    def onset_pending(self) -> int | None:
        """Position where the current candidate run started, if any."""
        return self.cand_start if self.cand is not None else None


class StreamClassifier:
    """Single-writer classifier for one (stream, person).

    Push frames in increasing frame order; every call returns the records of
    episodes that ended.
    """

    def __init__(self, fps: float, config: RuleConfig | None = None, stream: str = "-",
                 person_id: int = 0):
        self.config = config or RuleConfig()
        self.fps = fps
        self.stream = stream
        self.person_id = person_id
        self.window = FrameWindow(self.config.window_seconds, fps)
        self.tracker = EpisodeTracker(self.config.hysteresis_frames)
        self._frames: dict[int, tuple[SkeletonFrame, Detection]] = {}
        self._pos = 0
        self.usable_frames = 0
        self.labels: list = []

    def classify_frame(self, frame: SkeletonFrame) -> Detection | None:
        """Push ``frame`` into the window and classify; None if nothing usable."""
        self.window.push(frame)
        try:
            return classify(self.window, self.config)
        except NoUsableFrames:
            return None

    def push(self, frame: SkeletonFrame) -> list[DetectionRecord]:
        det = self.classify_frame(frame)
        label = det.category if det is not None else PoseCategory.None_
        if det is not None:
            self.usable_frames += 1
        self.labels.append(det.category if det is not None else None)
        pos = self._pos
        self._pos += 1
        self._frames[pos] = (frame, det)
        closed = self.tracker.step(pos, label)
        out = [self._record(c) for c in closed]
        self._prune()
        return out

    def flush(self) -> list[DetectionRecord]:
        out = [self._record(c) for c in self.tracker.finish()]
        self._frames.clear()
        return out

    def _record(self, closed) -> DetectionRecord:
        _, onset, last = closed
        frame, det = self._frames[onset]
        return record_from_detection(det, frame, self._frames[last][0].frame_index, self.stream)

    def _prune(self) -> None:
        keep = [p for p in (self.tracker.onset if self.tracker.active is not None else None,
                            self.tracker.last if self.tracker.active is not None else None,
                            self.tracker.onset_pending) if p is not None]
        floor = min(keep + [self._pos - 1])
        for p in [p for p in self._frames if p < floor]:
            del self._frames[p]


@dataclass
class SequenceResult:
    records: list
    labels: list          # raw PoseCategory per frame, None where nothing usable
    usable_frames: int


def classify_frames(frames: Sequence[SkeletonFrame], fps: float, config: RuleConfig | None = None,
                    stream: str = "-") -> SequenceResult:
    """Batch equivalent of pushing every frame through a :class:`StreamClassifier`."""
    config = config or RuleConfig()
    frames = list(frames)
    if not frames:
        return SequenceResult([], [], 0)
    labels = classify_sequence(frames, fps, config)
    tracker = EpisodeTracker(config.hysteresis_frames)
    closed = []
    cats = labels.categories
    for pos, cat in enumerate(cats):
        closed.extend(tracker.step(pos, cat if cat is not None else PoseCategory.None_))
    closed.extend(tracker.finish())
    records = []
    for _, onset, last in closed:
        det = labels.detection(onset)
        records.append(record_from_detection(det, frames[onset], frames[last].frame_index, stream))
    usable = sum(c is not None for c in cats)
    return SequenceResult(records, cats, usable)


def summarize(records: Iterable[DetectionRecord]) -> dict:
    """Per-category record counts, mean score and modal preference."""
    records = list(records)
    counts = Counter(r.category for r in records)
    scores = [r.score for r in records if r.score is not None]
    prefs = Counter(r.preference for r in records if r.preference is not None)
    modal = None
    if prefs:
        best = max(prefs.values())
        modal = min(p for p, c in prefs.items() if c == best)
    return {
        "records": len(records),
        "counts": dict(sorted(counts.items())),
        "mean_score": (sum(scores) / len(scores)) if scores else None,
        "modal_preference": modal,
    }


def per_frame_record(frame: SkeletonFrame, det: Detection | None, stream: str) -> DetectionRecord:
    if det is None:
        det = detection_for(PoseCategory.None_, onset_frame=frame.frame_index,
                            last_frame=frame.frame_index)
    return record_from_detection(det, frame, frame.frame_index, stream)
