"""Parametric skeleton animations for every pose category.

Bodies are built in forearm units (the forearm is 1.0 long) with the origin at
the hip midpoint and y pointing down, then placed in the image as
``origin + scale * body`` plus uniform pixel jitter. The canonical body faces
the camera with its left side at larger x and acts with its left arm;
``side="right"`` mirrors it (x flipped, left/right keypoints swapped).

Proportions: upper arm 1.2, forearm 1.0, thigh 2.0, shank 2.0, shoulder width
2.0, hip width 1.4, neck 1.0 above the shoulders' line to the nose.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .ingest import document_from_frames, write_csv, write_json_dir
from .rules.categories import PoseCategory
from .skeleton import (
    L_ANKLE, L_EAR, L_ELBOW, L_EYE, L_HIP, L_KNEE, L_SHOULDER, L_WRIST, NECK, NOSE, NUM_KEYPOINTS,
    R_ANKLE, R_EAR, R_ELBOW, R_EYE, R_HIP, R_KNEE, R_SHOULDER, R_WRIST, SkeletonFrame,
    frame_from_matrix,
)

UPPER_ARM = 1.2
FOREARM = 1.0
THIGH = 2.0
SHANK = 2.0

MIRROR = (0, 1, 5, 6, 7, 2, 3, 4, 11, 12, 13, 8, 9, 10, 15, 14, 17, 16)

NEUTRAL = "Neutral"

# categories that make sense sitting down as well as standing
SEDENTARY = frozenset({
    PoseCategory.WipingSweat, PoseCategory.FanningWithHands, PoseCategory.ShakingTShirt,
    PoseCategory.ScratchHead, PoseCategory.RollUpSleeves, PoseCategory.ShoulderShaking,
    PoseCategory.FoldedArm, PoseCategory.HandsAroundNeck, PoseCategory.WarmHandsWithBreath,
    NEUTRAL,
})

DEFAULTS = {
    PoseCategory.WipingSweat: {"half_width": 0.4, "frequency": 1.5, "height": 0.05},
    PoseCategory.FanningWithHands: {"angle_min": 68.0, "angle_max": 132.0, "frequency": 2.0,
                                    "abduction": 60.0},
    PoseCategory.ShakingTShirt: {"angle_min": 69.0, "angle_max": 131.0, "frequency": 2.0},
    PoseCategory.ScratchHead: {"amplitude": 0.15, "frequency": 3.0, "lateral": 0.0},
    PoseCategory.RollUpSleeves: {"travel": 0.8, "frequency": 1.0, "offset": 0.15},
    PoseCategory.Walking: {"hip_speed": 4.0, "frequency": 1.0, "thigh_swing": 20.0,
                           "shank_swing": 25.0, "knee_raise": 0.0},
    PoseCategory.StampingFeet: {"frequency": 1.5, "shank_tilt": 45.0, "lift": 1.0, "sway": 0.0},
    PoseCategory.ShoulderShaking: {"amplitude": 1.0, "frequency": 2.5},
    PoseCategory.FoldedArm: {},
    PoseCategory.LegCross: {"gap": 0.6},
    PoseCategory.HandsAroundNeck: {},
    PoseCategory.WarmHandsWithBreath: {"approach": 0.5},
    NEUTRAL: {"sway": 0.02, "frequency": 0.25},
}

VARIANTS = {
    PoseCategory.ScratchHead: ("ear", "top", "temple"),
    PoseCategory.Walking: ("stride", "marching"),
}


@dataclass(frozen=True)
class SynthScript:
    """Recipe for one clip.

    Attributes:
        category: a ``PoseCategory`` (not ``None_``) or ``"Neutral"``.
        scale: forearm length in pixels.
        origin: starting hip-midpoint position in pixels.
        jitter: half-width of the uniform pixel noise added to every coordinate.
        params: per-category overrides of :data:`DEFAULTS`.
    """

    category: object
    duration: float = 3.0
    fps: float = 30.0
    scale: float = 60.0
    origin: tuple = (640.0, 500.0)
    jitter: float = 0.5
    seed: int = 0
    side: str = "left"
    posture: str = "standing"
    variant: str = ""
    phase: float = 0.0
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.category not in DEFAULTS:
            raise ValueError(f"unknown synth category {self.category!r}")
        if not self.duration > 0 or not self.fps > 0 or not self.scale > 0:
            raise ValueError("duration, fps and scale must be positive")
        if self.jitter < 0:
            raise ValueError("jitter must be nonnegative")
        if self.side not in ("left", "right"):
            raise ValueError(f"side must be left or right, got {self.side!r}")
        if self.posture not in ("standing", "seated"):
            raise ValueError(f"posture must be standing or seated, got {self.posture!r}")
        if self.posture == "seated" and self.category not in SEDENTARY and self.category is not PoseCategory.LegCross:
            raise ValueError(f"{_label(self.category)} is generated standing only")
        if self.category is PoseCategory.LegCross and self.posture != "seated":
            raise ValueError("LegCross is generated seated only")
        allowed = VARIANTS.get(self.category, ("",))
        if self.variant and self.variant not in allowed:
            raise ValueError(f"variant {self.variant!r} not in {allowed}")
        unknown = set(self.params) - set(DEFAULTS[self.category])
        if unknown:
            raise ValueError(f"unknown params for {_label(self.category)}: {sorted(unknown)}")

    @property
    def label(self) -> str:
        return _label(self.category)

    def param(self, name: str) -> float:
        return float(self.params.get(name, DEFAULTS[self.category][name]))

    def describe(self) -> dict:
        return {
            "category": self.label, "duration": self.duration, "fps": self.fps, "scale": self.scale,
            "origin": list(self.origin), "jitter": self.jitter, "seed": self.seed, "side": self.side,
            "posture": self.posture, "variant": self.variant, "phase": self.phase,
            "params": {k: self.param(k) for k in DEFAULTS[self.category]},
        }


def _label(category) -> str:
    return category.value if isinstance(category, PoseCategory) else str(category)


def expected_category(script: SynthScript) -> PoseCategory:
    return PoseCategory.None_ if script.category == NEUTRAL else script.category


# ---------------------------------------------------------------------------
# body geometry (forearm units, y down)

def _rest_pose(n: int, seated: bool) -> np.ndarray:
    b = np.zeros((n, NUM_KEYPOINTS, 2))
    pts = {
        NOSE: (0.0, -3.6), NECK: (0.0, -2.6),
        R_SHOULDER: (-1.0, -2.5), L_SHOULDER: (1.0, -2.5),
        R_HIP: (-0.7, 0.0), L_HIP: (0.7, 0.0),
        R_KNEE: (-0.7, 2.0), L_KNEE: (0.7, 2.0),
        R_ANKLE: (-0.7, 4.0), L_ANKLE: (0.7, 4.0),
        R_EYE: (-0.15, -3.75), L_EYE: (0.15, -3.75),
        R_EAR: (-0.6, -3.75), L_EAR: (0.6, -3.75),
    }
    if seated:
        pts.update({R_KNEE: (-0.7, 0.4), L_KNEE: (0.7, 0.4), R_ANKLE: (-0.7, 2.4), L_ANKLE: (0.7, 2.4)})
    for k, v in pts.items():
        b[:, k] = v
    for out, s, e, w in ((-1.0, R_SHOULDER, R_ELBOW, R_WRIST), (1.0, L_SHOULDER, L_ELBOW, L_WRIST)):
        elbow, wrist = _arm_fk(b[:, s], np.full(n, 8.0), np.full(n, 165.0), out, flex_up=False)
        b[:, e], b[:, w] = elbow, wrist
    return b


def _rotate(v: np.ndarray, deg) -> np.ndarray:
    a = np.radians(deg)
    c, s = np.cos(a), np.sin(a)
    return np.stack([v[..., 0] * c - v[..., 1] * s, v[..., 0] * s + v[..., 1] * c], axis=-1)


def _arm_fk(shoulder: np.ndarray, abduction, elbow_angle, out: float, flex_up: bool = True):
    """Elbow and wrist from the upper arm's angle off vertical and the elbow angle.

    ``flex_up`` folds the forearm upward (toward the head); otherwise toward
    the body midline.
    """
    abduction = np.asarray(abduction, dtype=np.float64)
    d1 = np.stack([out * np.sin(np.radians(abduction)), np.cos(np.radians(abduction))], axis=-1)
    sign = -out if flex_up else out
    d2 = _rotate(d1, sign * (180.0 - np.asarray(elbow_angle, dtype=np.float64)))
    elbow = shoulder + UPPER_ARM * d1
    return elbow, elbow + FOREARM * d2


def _arm_ik(shoulder: np.ndarray, wrist: np.ndarray, out: float) -> np.ndarray:
    """Elbow placing the wrist at ``wrist``, bending outward and down."""
    v = wrist - shoulder
    d = np.hypot(v[:, 0], v[:, 1])
    if np.any(d > UPPER_ARM + FOREARM) or np.any(d < UPPER_ARM - FOREARM):
        raise ValueError("wrist target out of reach")
    u = v / d[:, None]
    a = (UPPER_ARM ** 2 - FOREARM ** 2 + d ** 2) / (2 * d)
    h = np.sqrt(np.maximum(UPPER_ARM ** 2 - a ** 2, 0.0))
    perp = np.stack([-u[:, 1], u[:, 0]], axis=1)
    flip = perp[:, 0] * out + perp[:, 1] * 0.5 < 0
    perp[flip] *= -1
    return shoulder + a[:, None] * u + h[:, None] * perp


def _place_left_wrist(b: np.ndarray, wrist: np.ndarray) -> None:
    b[:, L_ELBOW] = _arm_ik(b[:, L_SHOULDER], wrist, 1.0)
    b[:, L_WRIST] = wrist


def _place_right_wrist(b: np.ndarray, wrist: np.ndarray) -> None:
    b[:, R_ELBOW] = _arm_ik(b[:, R_SHOULDER], wrist, -1.0)
    b[:, R_WRIST] = wrist


def _chest(b: np.ndarray) -> np.ndarray:
    return (b[:, NECK] + (b[:, R_HIP] + b[:, L_HIP]) / 2.0) / 2.0


def _wave(t, freq, phase):
    return np.sin(2 * np.pi * freq * t + phase)


def _const(n: int, x: float, y: float) -> np.ndarray:
    return np.tile(np.array([x, y]), (n, 1))


# ---------------------------------------------------------------------------
# animations; each returns the canonical body for times t

def _neutral(s: SynthScript, t: np.ndarray, b: np.ndarray) -> None:
    sway = s.param("sway") * _wave(t, s.param("frequency"), s.phase)
    upper = [NOSE, NECK, R_SHOULDER, R_ELBOW, R_WRIST, L_SHOULDER, L_ELBOW, L_WRIST,
             R_EYE, L_EYE, R_EAR, L_EAR]
    b[:, upper, 1] += sway[:, None]


def _wiping(s: SynthScript, t: np.ndarray, b: np.ndarray) -> None:
    x = s.param("half_width") * _wave(t, s.param("frequency"), s.phase)
    w = np.stack([x, np.full_like(t, -3.75 + s.param("height"))], axis=1)
    _place_left_wrist(b, w)


def _elbow_sweep(s: SynthScript, t: np.ndarray) -> np.ndarray:
    lo, hi = s.param("angle_min"), s.param("angle_max")
    return (lo + hi) / 2 + (hi - lo) / 2 * _wave(t, s.param("frequency"), s.phase)


def _fanning(s: SynthScript, t: np.ndarray, b: np.ndarray) -> None:
    elbow, wrist = _arm_fk(b[:, L_SHOULDER], np.full(len(t), s.param("abduction")),
                           _elbow_sweep(s, t), 1.0, flex_up=True)
    b[:, L_ELBOW], b[:, L_WRIST] = elbow, wrist


def _shaking(s: SynthScript, t: np.ndarray, b: np.ndarray) -> None:
    # wrist slides along the shoulder->chest line so the elbow angle follows the sweep
    ang = np.radians(_elbow_sweep(s, t))
    reach = np.sqrt(UPPER_ARM ** 2 + FOREARM ** 2 - 2 * UPPER_ARM * FOREARM * np.cos(ang))
    sh = b[:, L_SHOULDER]
    line = _chest(b) - sh
    line /= np.hypot(line[:, 0], line[:, 1])[:, None]
    _place_left_wrist(b, sh + reach[:, None] * line)


def _scratch(s: SynthScript, t: np.ndarray, b: np.ndarray) -> None:
    n = len(t)
    wob = s.param("amplitude") * _wave(t, s.param("frequency"), s.phase)
    lat = s.param("lateral") * _wave(t, s.param("frequency"), s.phase + 1.0)
    nose = b[:, NOSE]
    if s.variant == "top":
        # just below the crown toward the shoulder: the crown itself is out of reach
        top = nose + _const(n, 0.0, -1.0)
        toward = b[:, L_SHOULDER] - top
        base = top + 0.28 * toward / np.hypot(toward[:, 0], toward[:, 1])[:, None]
    elif s.variant == "temple":
        base = nose + _const(n, 0.4, -0.2)
    else:
        base = b[:, L_EAR] + _const(n, 0.1, 0.0)
    _place_left_wrist(b, base + np.stack([lat, wob], axis=1))


def _roll_sleeves(s: SynthScript, t: np.ndarray, b: np.ndarray) -> None:
    n = len(t)
    # passive right forearm held across the belly
    r_elbow, r_wrist = _arm_fk(b[:, R_SHOULDER], np.full(n, -10.0), np.full(n, 140.0), -1.0,
                               flex_up=False)
    b[:, R_ELBOW], b[:, R_WRIST] = r_elbow, r_wrist
    axis = r_wrist - r_elbow
    normal = np.stack([axis[:, 1], -axis[:, 0]], axis=1)
    normal[normal[:, 1] > 0] *= -1  # pointing up
    travel = s.param("travel")
    along = 0.5 + travel / 2 * _wave(t, s.param("frequency"), s.phase)
    w = r_elbow + along[:, None] * axis + s.param("offset") * normal
    _place_left_wrist(b, w)


def _walking(s: SynthScript, t: np.ndarray, b: np.ndarray) -> None:
    # profile view, walking toward +x with the left side nearer the camera
    n = len(t)
    hx = s.param("hip_speed") * t
    w = 2 * np.pi * s.param("frequency") * t + s.phase
    marching = s.variant == "marching"
    body = np.zeros((n, NUM_KEYPOINTS, 2))
    hip = np.stack([hx, np.zeros(n)], axis=1)
    body[:, R_HIP] = hip + [-0.05, 0.0]
    body[:, L_HIP] = hip + [0.05, 0.0]
    body[:, NECK] = hip + [0.1, -2.6]
    body[:, NOSE] = hip + [0.4, -3.6]
    body[:, R_EYE] = hip + [0.45, -3.72]
    body[:, L_EYE] = hip + [0.5, -3.75]
    body[:, R_EAR] = hip + [0.03, -3.7]
    body[:, L_EAR] = hip + [0.07, -3.72]
    body[:, R_SHOULDER] = hip + [-0.1, -2.5]
    body[:, L_SHOULDER] = hip + [0.1, -2.5]
    swing = 5.0 * np.sin(w)
    # near arm forward and bent, far arm back and straight; they never cross
    e = body[:, L_SHOULDER] + UPPER_ARM * np.stack(
        [np.sin(np.radians(20.0 + swing)), np.cos(np.radians(20.0 + swing))], axis=1)
    fore = np.radians(60.0 + swing)
    body[:, L_ELBOW], body[:, L_WRIST] = e, e + FOREARM * np.stack([np.sin(fore), np.cos(fore)], axis=1)
    back = np.radians(-20.0 - swing)
    e = body[:, R_SHOULDER] + UPPER_ARM * np.stack([np.sin(back), np.cos(back)], axis=1)
    fore = np.radians(-15.0 - swing)
    body[:, R_ELBOW], body[:, R_WRIST] = e, e + FOREARM * np.stack([np.sin(fore), np.cos(fore)], axis=1)
    for hip_k, knee_k, ankle_k, lag in ((R_HIP, R_KNEE, R_ANKLE, 0.0), (L_HIP, L_KNEE, L_ANKLE, np.pi)):
        if marching:
            raise_ = np.maximum(0.0, np.sin(w + lag))
            thigh = np.radians(s.param("knee_raise") * raise_)
            shank = 0.4 * thigh
        else:
            thigh = np.radians(s.param("thigh_swing") * np.sin(w + lag))
            shank = np.radians(s.param("shank_swing") * np.sin(w + lag - 0.5))
        knee = body[:, hip_k] + THIGH * np.stack([np.sin(thigh), np.cos(thigh)], axis=1)
        body[:, knee_k] = knee
        body[:, ankle_k] = knee + SHANK * np.stack([np.sin(shank), np.cos(shank)], axis=1)
    b[:] = body


def _stamping(s: SynthScript, t: np.ndarray, b: np.ndarray) -> None:
    n = len(t)
    w = 2 * np.pi * s.param("frequency") * t + s.phase
    sway = s.param("sway") * np.sin(w / 3.0)
    for hip_k, knee_k, ankle_k, out, lag in ((R_HIP, R_KNEE, R_ANKLE, -1.0, 0.0),
                                             (L_HIP, L_KNEE, L_ANKLE, 1.0, np.pi)):
        p = np.maximum(0.0, np.sin(w + lag))
        knee = b[:, hip_k] + np.stack([np.zeros(n), THIGH - s.param("lift") * p], axis=1)
        tilt = np.radians(s.param("shank_tilt") * p)
        b[:, knee_k] = knee
        b[:, ankle_k] = knee + SHANK * np.stack([out * np.sin(tilt), np.cos(tilt)], axis=1)
    b[:, :, 0] += sway[:, None]


def _shoulder_shaking(s: SynthScript, t: np.ndarray, b: np.ndarray) -> None:
    dy = s.param("amplitude") / 2 * _wave(t, s.param("frequency"), s.phase)
    b[:, [R_SHOULDER, R_ELBOW, R_WRIST, L_SHOULDER, L_ELBOW, L_WRIST], 1] += dy[:, None]


def _folded_arm(s: SynthScript, t: np.ndarray, b: np.ndarray) -> None:
    n = len(t)
    breath = 0.02 * _wave(t, 0.25, s.phase)
    for sh, el, wr, ex, direction in ((R_SHOULDER, R_ELBOW, R_WRIST, -0.6, 1.0),
                                      (L_SHOULDER, L_ELBOW, L_WRIST, 0.5, -1.0)):
        dx = ex - b[0, sh, 0]
        elbow = b[:, sh] + np.stack([np.full(n, dx), np.full(n, math.sqrt(UPPER_ARM ** 2 - dx ** 2))], axis=1)
        elbow[:, 1] += breath
        b[:, el] = elbow
        b[:, wr] = elbow + [direction * FOREARM, 0.0]


def _leg_cross(s: SynthScript, t: np.ndarray, b: np.ndarray) -> None:
    gap = s.param("gap")
    d = np.array([0.5, math.sqrt(3) / 2]) * gap
    b[:, L_KNEE] = [0.0, 0.25]
    b[:, L_ANKLE] = b[:, R_KNEE] + d
    b[:, [NOSE, NECK, R_EYE, L_EYE, R_EAR, L_EAR], 1] += 0.02 * _wave(t, 0.25, s.phase)[:, None]


def _warm_hands(s: SynthScript, t: np.ndarray, b: np.ndarray) -> None:
    n = len(t)
    k = np.clip(t / s.param("approach"), 0.0, 1.0)[:, None]
    rub = 0.03 * _wave(t, 2.0, s.phase)
    for place, ox in ((_place_left_wrist, 1.0), (_place_right_wrist, -1.0)):
        start = _const(n, 0.9 * ox, -0.4)
        end = b[:, NOSE] + np.stack([0.08 * ox + rub, np.full(n, 0.2)], axis=1)
        place(b, (1 - k) * start + k * end)


def _hands_neck(s: SynthScript, t: np.ndarray, b: np.ndarray) -> None:
    n = len(t)
    rub = 0.02 * _wave(t, 0.5, s.phase)
    _place_left_wrist(b, b[:, NECK] + np.stack([0.2 + rub, np.full(n, -0.1)], axis=1))
    _place_right_wrist(b, b[:, NECK] + np.stack([-0.2 - rub, np.full(n, -0.1)], axis=1))


ANIMATIONS = {
    NEUTRAL: _neutral,
    PoseCategory.WipingSweat: _wiping,
    PoseCategory.FanningWithHands: _fanning,
    PoseCategory.ShakingTShirt: _shaking,
    PoseCategory.ScratchHead: _scratch,
    PoseCategory.RollUpSleeves: _roll_sleeves,
    PoseCategory.Walking: _walking,
    PoseCategory.StampingFeet: _stamping,
    PoseCategory.ShoulderShaking: _shoulder_shaking,
    PoseCategory.FoldedArm: _folded_arm,
    PoseCategory.LegCross: _leg_cross,
    PoseCategory.WarmHandsWithBreath: _warm_hands,
    PoseCategory.HandsAroundNeck: _hands_neck,
}


def body_units(script: SynthScript) -> np.ndarray:
    """(T, 18, 2) noise-free body coordinates in forearm units, hip midpoint at 0."""
    n = max(1, int(round(script.duration * script.fps)))
    t = np.arange(n) / script.fps
    b = _rest_pose(n, script.posture == "seated")
    ANIMATIONS[script.category](script, t, b)
    if script.side == "right":
        b = b[:, MIRROR]
        b[..., 0] *= -1.0
    return b


def generate(script: SynthScript) -> list[SkeletonFrame]:
    """Frames of the scripted clip, all confidences 1.0. Pure in ``script``."""
    b = body_units(script)
    xy = np.asarray(script.origin, dtype=np.float64) + script.scale * b
    if script.jitter > 0:
        rng = np.random.default_rng(script.seed)
        xy = xy + rng.uniform(-script.jitter, script.jitter, size=xy.shape)
    m = np.concatenate([xy, np.ones(xy.shape[:2] + (1,))], axis=2)
    return [frame_from_matrix(m[i], i, fps=script.fps) for i in range(len(m))]


# ---------------------------------------------------------------------------
# perturbations

def drop_confidence(frames: Sequence[SkeletonFrame], index: int, value: float) -> list[SkeletonFrame]:
    """Set keypoint ``index``'s confidence to ``value`` in every frame."""
    if not 0.0 <= value <= 1.0:
        raise ValueError("confidence must lie in [0, 1]")
    out = []
    for f in frames:
        m = f.matrix.copy()
        m[index, 2] = value
        out.append(f.with_matrix(m))
    return out


def jitter(frames: Sequence[SkeletonFrame], half_width: float, seed: int) -> list[SkeletonFrame]:
    """Add uniform noise in ``[-half_width, half_width]`` to every x and y."""
    if half_width < 0:
        raise ValueError("half_width must be nonnegative")
    rng = np.random.default_rng(seed)
    out = []
    for f in frames:
        m = f.matrix.copy()
        m[:, :2] += rng.uniform(-half_width, half_width, size=(NUM_KEYPOINTS, 2))
        out.append(f.with_matrix(m))
    return out


def occlude_span(frames: Sequence[SkeletonFrame], index: int, first: int, last: int) -> list[SkeletonFrame]:
    """Blank keypoint ``index`` to ``(0, 0, 0)`` on frames ``first..last`` inclusive."""
    if first > last:
        raise ValueError("empty occlusion span")
    out = []
    for f in frames:
        if first <= f.frame_index <= last:
            m = f.matrix.copy()
            m[index] = 0.0
            f = f.with_matrix(m)
        out.append(f)
    return out


def perturb(frames: Sequence[SkeletonFrame], kind: str, **kw) -> list[SkeletonFrame]:
    """Dispatch to ``drop_confidence``, ``jitter`` or ``occlude_span`` by name."""
    fns = {"drop_confidence": drop_confidence, "jitter": jitter, "occlude_span": occlude_span}
    if kind not in fns:
        raise ValueError(f"unknown perturbation {kind!r}")
    return fns[kind](frames, **kw)


def transform(frames: Sequence[SkeletonFrame], scale: float, offset=(0.0, 0.0)) -> list[SkeletonFrame]:
    """Uniformly scale then translate every keypoint; confidences unchanged."""
    if not scale > 0:
        raise ValueError("scale must be positive")
    off = np.asarray(offset, dtype=np.float64)
    out = []
    for f in frames:
        m = f.matrix.copy()
        m[:, :2] = m[:, :2] * scale + off
        out.append(f.with_matrix(m))
    return out


# ---------------------------------------------------------------------------
# corpus

@dataclass(frozen=True)
class Clip:
    name: str
    script: SynthScript
    expected: PoseCategory
    frames: tuple
    # keypoints the expected rule cannot do without (after mirroring)
    required: frozenset = frozenset()
    confuser: bool = False


# canonical (left-acting) keypoints each positive clip's rule depends on
_REQUIRED = {
    PoseCategory.WipingSweat: {L_WRIST},
    PoseCategory.FanningWithHands: {L_SHOULDER, L_ELBOW, L_WRIST},
    PoseCategory.ShakingTShirt: {L_SHOULDER, L_ELBOW, L_WRIST, NECK, R_HIP, L_HIP},
    # both wrists: the rule also fires with the roles swapped (the passive wrist
    # slides along the acting forearm), so neither elbow alone is indispensable
    PoseCategory.RollUpSleeves: {L_WRIST, R_WRIST},
    PoseCategory.Walking: {R_HIP, L_HIP, R_KNEE, R_ANKLE, L_KNEE, L_ANKLE},
    PoseCategory.StampingFeet: {R_HIP, L_HIP, R_ANKLE, L_ANKLE},
    PoseCategory.ShoulderShaking: set(),
    PoseCategory.FoldedArm: {R_SHOULDER, R_ELBOW, R_WRIST, L_SHOULDER, L_ELBOW, L_WRIST},
    PoseCategory.LegCross: {L_ANKLE, R_KNEE},
    PoseCategory.WarmHandsWithBreath: {R_WRIST, L_WRIST, NOSE},
    PoseCategory.HandsAroundNeck: {R_WRIST, L_WRIST, NECK},
    NEUTRAL: set(),
}


def required_keypoints(script: SynthScript) -> frozenset:
    if script.category is PoseCategory.ScratchHead:
        req = {L_WRIST, NOSE} if script.variant == "top" else {L_WRIST, L_EAR}
    else:
        req = _REQUIRED[script.category]
    if script.side == "right":
        req = {MIRROR[i] for i in req}
    return frozenset(req)


def random_script(category, seed: int, **overrides) -> SynthScript:
    """Script with seed-derived scale, placement, phase, tempo, side and posture."""
    key = list(DEFAULTS).index(category)
    rng = np.random.default_rng([seed, key])
    scale = float(rng.uniform(50.0, 90.0))
    origin = (float(rng.uniform(200.0, 1000.0)), float(rng.uniform(450.0, 600.0)))
    side = "left" if rng.random() < 0.5 else "right"
    seated = bool(rng.random() < 0.5)
    if category is PoseCategory.LegCross:
        posture = "seated"
    elif category in SEDENTARY:
        posture = "seated" if seated else "standing"
    else:
        posture = "standing"
    phase = float(rng.uniform(0.0, 2 * np.pi))
    tempo = float(rng.uniform(0.9, 1.1))
    params = {}
    if "frequency" in DEFAULTS[category]:
        params["frequency"] = DEFAULTS[category]["frequency"] * tempo
    variant = ""
    if category is PoseCategory.ScratchHead:
        variant = "top" if rng.random() < 0.5 else "ear"
    kw = dict(category=category, scale=scale, origin=origin, side=side, posture=posture,
              phase=phase, params=params, variant=variant,
              seed=int(rng.integers(0, 2 ** 31)))
    kw.update(overrides)
    if "params" in overrides:
        kw["params"] = {**params, **overrides["params"]}
    return SynthScript(**kw)


def _clip(name: str, script: SynthScript, confuser: bool = False) -> Clip:
    return Clip(name, script, expected_category(script), tuple(generate(script)),
                required_keypoints(script) if not confuser else frozenset(), confuser)


def corpus(seed: int) -> list[Clip]:
    """12 positive clips, a neutral clip and 4 confusers, all derived from ``seed``."""
    clips = [_clip(_slug(c), random_script(c, seed)) for c in DEFAULTS if c != NEUTRAL]
    clips.append(_clip("neutral", random_script(NEUTRAL, seed)))
    s = seed + 7919
    clips.append(_clip("walking_marching", random_script(
        PoseCategory.Walking, s, variant="marching",
        params={"hip_speed": 3.0, "knee_raise": 70.0, "frequency": 1.5}), True))
    clips.append(_clip("stamping_sway", random_script(
        PoseCategory.StampingFeet, s, params={"sway": 0.15}), True))
    clips.append(_clip("scratch_temple_slow", random_script(
        PoseCategory.ScratchHead, s, variant="temple",
        params={"amplitude": 0.05, "lateral": 0.1, "frequency": 1.0}), True))
    clips.append(_clip("wiping_near_speed_gate", random_script(
        PoseCategory.WipingSweat, s, params={"half_width": 0.3, "frequency": 1.7}), True))
    return clips


def _slug(category) -> str:
    return category.slug if isinstance(category, PoseCategory) else "neutral"


def category_from_name(name: str):
    if name.lower() == "neutral":
        return NEUTRAL
    return PoseCategory.from_name(name)


# ---------------------------------------------------------------------------
# emitters

def write_clip(frames: Sequence[SkeletonFrame], path, fmt: str = "json") -> None:
    """Write a clip as an OpenPose JSON directory or as CSV replay."""
    if fmt == "json":
        write_json_dir([document_from_frames([f]) for f in frames], path)
    elif fmt == "csv":
        with open(path, "w", encoding="utf-8", newline="") as fh:
            write_csv({0: list(frames)}, fh)
    else:
        raise ValueError(f"unknown format {fmt!r}")
