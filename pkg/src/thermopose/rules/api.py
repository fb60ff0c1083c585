"""Single-window rule entry points, the priority classifier and its batch form."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from ..skeleton import FrameWindow, SkeletonFrame, window_capacity
from . import detectors as d
from .categories import PoseCategory, preference_of, score_of
from .config import RuleConfig
from .table import FrameTable, Windows, dense_layout

UNUSABLE = -2  # batch code for a window without any usable frame


class NoUsableFrames(ValueError):
    """Every frame in the window lacks a standard distance."""


@dataclass(frozen=True)
class Detection:
    """Classifier verdict for one window.

    ``score`` and ``preference`` are None for :attr:`PoseCategory.None_`.
    ``onset_frame`` is where the deciding evidence starts (the start of a held
    contact, or the first usable frame for oscillation rules).
    """

    category: PoseCategory
    score: int | None
    preference: int | None
    onset_frame: int
    last_frame: int
    evidence: tuple = ()
    rule: str | None = None
    keypoints: tuple = ()

    def to_dict(self) -> dict:
        return {
            "category": self.category.value,
            "score": self.score,
            "preference": self.preference,
            "onset_frame": self.onset_frame,
            "last_frame": self.last_frame,
            "rule": self.rule,
            "keypoints": list(self.keypoints),
            "evidence": [{"feature": n, "value": _num(v), "threshold": t} for n, v, t in self.evidence],
        }


@dataclass(frozen=True)
class RuleResult:
    """Boolean verdict of one sub-algorithm plus the values that decided it."""

    fired: bool
    category: PoseCategory
    evidence: tuple
    keypoints: tuple
    onset_frame: int | None = None
    last_frame: int | None = None
    insufficient: bool = False

    def __bool__(self) -> bool:
        return self.fired


def _num(v: float):
    return None if isinstance(v, float) and math.isnan(v) else v


def detection_for(category: PoseCategory, **kw) -> Detection:
    if category is PoseCategory.None_:
        return Detection(category, None, None, **kw)
    s = score_of(category)
    return Detection(category, s, preference_of(s), **kw)


# ---------------------------------------------------------------------------
# context construction

@dataclass
class _Segment:
    """Dense slots of a frame run; ``first_index`` is the frame index of slot 0."""

    table: FrameTable
    first_index: int
    capacity: int

    def context(self, ends: np.ndarray, config: RuleConfig) -> d.Ctx:
        return d.Ctx(self.table, Windows(self.table, ends, self.capacity), config)

    def frame_at(self, end: int, col) -> int:
        return int(self.first_index + end - self.capacity + 1 + col)


def _window_segment(window: FrameWindow, config: RuleConfig) -> _Segment:
    frames = list(window)
    if not frames:
        raise ValueError("window is empty")
    cap = window.capacity
    last = frames[-1].frame_index
    first = last - cap + 1
    kp, times, present, _ = dense_layout(frames, first, last)
    return _Segment(FrameTable(kp, times, present, config.epsilon), first, cap)


def _row_result(seg: _Segment, ctx: d.Ctx, out: d.RuleOutput, row: int, end: int,
                category: PoseCategory) -> RuleResult:
    evidence = tuple((name, float(vals[row]), float(thr)) for name, vals, thr in out.evidence)
    kps = out.keypoint_sets[int(out.side[row])]
    onset = seg.frame_at(end, min(int(out.onset_col[row]), seg.capacity - 1))
    return RuleResult(bool(out.fired[row]), category, evidence, tuple(kps), onset,
                      seg.frame_at(end, seg.capacity - 1), not bool(ctx.enough[row]))


def _single(rule: Callable, window: FrameWindow, config: RuleConfig | None) -> RuleResult:
    config = config or RuleConfig()
    seg = _window_segment(window, config)
    end = seg.capacity - 1
    ctx = seg.context(np.array([end]), config)
    out = rule(ctx)
    code = int(out.category[0])
    cat = d.CATEGORIES[code] if code != d.NO_CODE else PoseCategory.None_
    return _row_result(seg, ctx, out, 0, end, cat)


def detect_wiping_sweat(window: FrameWindow, config: RuleConfig | None = None) -> RuleResult:
    """Either wrist held at the forehead while sweeping sideways."""
    return _single(d.rule_wiping_sweat, window, config)


def detect_fanning(window: FrameWindow, config: RuleConfig | None = None) -> RuleResult:
    """Elbow angle pumping across the flexed/extended band with the hand raised."""
    return _single(d.rule_fanning, window, config)


def detect_shaking_tshirt(window: FrameWindow, config: RuleConfig | None = None) -> RuleResult:
    """A wrist gripping at the chest while that elbow pumps across the band."""
    return _single(d.rule_shaking_tshirt, window, config)


def detect_scratch_head(window: FrameWindow, config: RuleConfig | None = None) -> RuleResult:
    """A slow wrist held at an ear or the top of the head."""
    return _single(d.rule_scratch_head, window, config)


def detect_roll_sleeves(window: FrameWindow, config: RuleConfig | None = None) -> RuleResult:
    """A wrist on the opposite forearm, travelling along it."""
    return _single(d.rule_roll_sleeves, window, config)


def detect_walk_or_stamp(window: FrameWindow, config: RuleConfig | None = None) -> RuleResult:
    """Leg activity split by hip travel; ``category`` is Walking, StampingFeet or None."""
    return _single(d.rule_walk_or_stamp, window, config)


def detect_shoulder_shaking(window: FrameWindow, config: RuleConfig | None = None) -> RuleResult:
    return _single(d.rule_shoulder_shaking, window, config)


def detect_folded_arm(window: FrameWindow, config: RuleConfig | None = None) -> RuleResult:
    return _single(d.rule_folded_arm, window, config)


def detect_leg_cross(window: FrameWindow, config: RuleConfig | None = None) -> RuleResult:
    return _single(d.rule_leg_cross, window, config)


def detect_hands_neck_or_breath(window: FrameWindow, config: RuleConfig | None = None) -> RuleResult:
    """Both wrists held at the nose (WarmHandsWithBreath) or the neck (HandsAroundNeck)."""
    return _single(d.rule_hands_neck_or_breath, window, config)


def _detection(seg: _Segment, ctx: d.Ctx, codes: np.ndarray, outputs: dict, row: int,
               end: int) -> Detection:
    cat = d.CATEGORIES[int(codes[row])]
    last = seg.frame_at(end, seg.capacity - 1)
    if cat is PoseCategory.None_:
        return detection_for(cat, onset_frame=seg.frame_at(end, int(ctx.first_col[row])),
                             last_frame=last)
    res = _row_result(seg, ctx, outputs[d.RULE_FOR[cat]], row, end, cat)
    return detection_for(cat, onset_frame=res.onset_frame, last_frame=last,
                         evidence=res.evidence, rule=d.RULE_FOR[cat].__name__[5:],
                         keypoints=res.keypoints)


def classify(window: FrameWindow, config: RuleConfig | None = None) -> Detection:
    """Evaluate the sub-algorithms in priority order on the window's latest state.

    Raises:
        NoUsableFrames: no frame in the window has a standard distance.
    """
    config = config or RuleConfig()
    seg = _window_segment(window, config)
    end = seg.capacity - 1
    ctx = seg.context(np.array([end]), config)
    if not ctx.usable[0].any():
        raise NoUsableFrames("no usable frames in window")
    codes, outputs = d.evaluate(ctx)
    return _detection(seg, ctx, codes, outputs, 0, end)


# ---------------------------------------------------------------------------
# batch

@dataclass
class SequenceLabels:
    """Per-frame classification of one person's frame sequence.

    ``codes[i]`` is the category code of the window ending at ``frames[i]``
    (index into ``PoseCategory``), or ``UNUSABLE``.
    """

    frames: Sequence[SkeletonFrame]
    codes: np.ndarray
    config: RuleConfig
    _segments: list = field(default_factory=list, repr=False)
    _where: list = field(default_factory=list, repr=False)

    def category(self, i: int) -> PoseCategory | None:
        c = int(self.codes[i])
        return None if c == UNUSABLE else d.CATEGORIES[c]

    @property
    def categories(self) -> list:
        return [self.category(i) for i in range(len(self.codes))]

    @property
    def any_usable(self) -> bool:
        return bool((self.codes != UNUSABLE).any())

    def detection(self, i: int) -> Detection:
        """Full :class:`Detection` for the window ending at frame ``i``."""
        seg_no, slot = self._where[i]
        seg = self._segments[seg_no]
        ctx = seg.context(np.array([slot]), self.config)
        if not ctx.usable[0].any():
            raise NoUsableFrames(f"no usable frames in window ending at frame {self.frames[i].frame_index}")
        codes, outputs = d.evaluate(ctx)
        return _detection(seg, ctx, codes, outputs, 0, slot)


def classify_sequence(frames: Sequence[SkeletonFrame], fps: float, config: RuleConfig | None = None,
                      chunk: int = 2048) -> SequenceLabels:
    """Classify the window ending at every frame, as a stream would see it.

    Equivalent to pushing the frames one by one into a ``FrameWindow`` of
    ``config.window_seconds`` and calling :func:`classify` after each push,
    but vectorized.
    """
    config = config or RuleConfig()
    cap = window_capacity(config.window_seconds, fps)
    frames = list(frames)
    codes = np.full(len(frames), UNUSABLE, dtype=np.int64)
    result = SequenceLabels(frames, codes, config)
    start = 0
    while start < len(frames):
        stop = start + 1
        while stop < len(frames) and frames[stop].frame_index - frames[stop - 1].frame_index < cap:
            stop += 1
        part = frames[start:stop]
        kp, times, present, pos = dense_layout(part)
        seg = _Segment(FrameTable(kp, times, present, config.epsilon), part[0].frame_index, cap)
        seg_no = len(result._segments)
        result._segments.append(seg)
        result._where.extend((seg_no, int(p)) for p in pos)
        for lo in range(0, len(pos), chunk):
            ends = pos[lo:lo + chunk]
            ctx = seg.context(ends, config)
            got, _ = d.evaluate(ctx)
            got = np.where(ctx.usable.any(axis=1), got, UNUSABLE)
            codes[start + lo:start + lo + len(ends)] = got
        start = stop
    return result
