"""The ten pose sub-algorithms, vectorized over windows.

Every ``_rule_*`` function takes a :class:`Ctx` holding ``n`` windows and
returns a :class:`RuleOutput` with one entry per window. The public
``detect_*`` wrappers in :mod:`thermopose.rules.api` run them on a single
:class:`FrameWindow`.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..geometry import band_cycles, consecutive_pairs, oscillation_array, trailing_run
from ..skeleton import (
    L_ANKLE, L_EAR, L_ELBOW, L_HIP, L_KNEE, L_SHOULDER, L_WRIST, NECK, NOSE, R_ANKLE, R_EAR,
    R_ELBOW, R_HIP, R_KNEE, R_SHOULDER, R_WRIST,
)
from .categories import PoseCategory
from .config import RuleConfig
from .table import CHEST, FOREHEAD, HEAD_TOP, HIP_MID, L_FOREARM_MID, R_FOREARM_MID, FrameTable, Windows

CATEGORIES = tuple(PoseCategory)
CODE = {c: i for i, c in enumerate(CATEGORIES)}
NO_CODE = -1

# (shoulder, elbow, wrist) per arm, left first
ARMS = ((L_SHOULDER, L_ELBOW, L_WRIST), (R_SHOULDER, R_ELBOW, R_WRIST))


@dataclass
class Ctx:
    table: FrameTable
    win: Windows
    cfg: RuleConfig
    usable: np.ndarray = field(init=False)
    enough: np.ndarray = field(init=False)
    ls: np.ndarray = field(init=False)
    t: np.ndarray = field(init=False)
    ls_median: np.ndarray = field(init=False)

    def __post_init__(self):
        self.h = int(self.cfg.hysteresis_frames)
        self.usable = self.win(self.table.usable)
        self.enough = self.usable.sum(axis=1) >= self.h
        self.ls = self.win(self.table.ls)
        self.t = self.win(self.table.times)
        self.ls_median = _row_median(self.ls)
        self.first_col = np.argmax(self.usable, axis=1)
        self._cache = {}

    @property
    def n(self) -> int:
        return self.win.n

    @property
    def width(self) -> int:
        return self.win.capacity

    def lr(self, a, b) -> np.ndarray:
        key = ("lr", a, b)
        if key not in self._cache:
            self._cache[key] = self.win(self.table.lr(a, b))
        return self._cache[key]

    def angle(self, a, v, c) -> np.ndarray:
        key = ("angle", a, v, c)
        if key not in self._cache:
            self._cache[key] = self.win(self.table.angle(a, v, c))
        return self._cache[key]

    def lateral_speed(self, p) -> np.ndarray:
        """Mean of |dx| / dt / L_s over consecutive valid samples of ``p``."""
        key = ("lat", p)
        if key not in self._cache:
            x = self.win(self.table.x(p))
            ok = ~np.isnan(x)
            prev, has = consecutive_pairs(ok)
            xp = np.take_along_axis(x, prev, axis=1)
            tp = np.take_along_axis(self.t, prev, axis=1)
            with np.errstate(invalid="ignore", divide="ignore"):
                v = np.abs(x - xp) / (self.t - tp) / self.ls
            v = np.where(has, v, 0.0)
            cnt = has.sum(axis=1)
            with np.errstate(invalid="ignore"):
                self._cache[key] = np.where(cnt > 0, v.sum(axis=1) / cnt, np.nan)
        return self._cache[key]


@dataclass
class RuleOutput:
    """Per-window outcome of one sub-algorithm.

    ``category`` holds a category code where the rule fired and ``NO_CODE``
    elsewhere; ``side`` indexes ``keypoint_sets``; ``onset_col`` is the
    window column where the deciding evidence starts.
    """

    name: str
    category: np.ndarray
    side: np.ndarray
    keypoint_sets: tuple
    onset_col: np.ndarray
    evidence: list = field(default_factory=list)

    @property
    def fired(self) -> np.ndarray:
        return self.category != NO_CODE


def _row_median(a: np.ndarray) -> np.ndarray:
    ok = ~np.isnan(a)
    out = np.full(a.shape[0], np.nan)
    rows = ok.any(axis=1)
    if rows.any():
        out[rows] = np.nanmedian(a[rows], axis=1)
    return out


def _nanrange(a: np.ndarray) -> np.ndarray:
    ok = ~np.isnan(a)
    hi = np.where(ok, a, -np.inf).max(axis=1)
    lo = np.where(ok, a, np.inf).min(axis=1)
    return np.where(ok.any(axis=1), hi - lo, np.nan)


def _ge(a: np.ndarray, threshold) -> np.ndarray:
    with np.errstate(invalid="ignore"):
        return np.asarray(a >= threshold) & ~np.isnan(a)


def _last(a: np.ndarray) -> np.ndarray:
    return a[:, -1]


def _code(mask: np.ndarray, category: PoseCategory) -> np.ndarray:
    return np.where(mask, CODE[category], NO_CODE)


def _choose(fired_sides: list[np.ndarray], fallback: np.ndarray | None = None) -> np.ndarray:
    """Index of the first firing side per window, else ``fallback`` (default 0)."""
    side = np.zeros(len(fired_sides[0]), dtype=np.int64) if fallback is None else fallback.copy()
    for k in range(len(fired_sides) - 1, -1, -1):
        side = np.where(fired_sides[k], k, side)
    return side


def _select(side: np.ndarray, per_side: list[np.ndarray]) -> np.ndarray:
    return np.choose(side, per_side)


def _better(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Fallback side: 1 where ``b`` beats ``a`` (NaN loses)."""
    a = np.where(np.isnan(a), -np.inf, a)
    b = np.where(np.isnan(b), -np.inf, b)
    return (b > a).astype(np.int64)


# ---------------------------------------------------------------------------
# contact + sweep rules

def rule_wiping_sweat(ctx: Ctx) -> RuleOutput:
    cfg, h = ctx.cfg, ctx.h
    runs, speeds, lrs, fired = [], [], [], []
    for wrist in (L_WRIST, R_WRIST):
        lr = ctx.lr(wrist, FOREHEAD)
        run = trailing_run(_ge(lr, cfg.wiping_sweat_lr))
        spd = ctx.lateral_speed(wrist)
        fired.append(ctx.enough & (run >= h) & _ge(spd, cfg.sweep_speed_min))
        runs.append(run)
        speeds.append(spd)
        lrs.append(_last(lr))
    side = _choose(fired, _better(*lrs))
    run = _select(side, runs)
    return RuleOutput(
        "wiping_sweat", _code(fired[0] | fired[1], PoseCategory.WipingSweat), side,
        ((L_WRIST, L_ELBOW, 14, 15, NOSE), (R_WRIST, R_ELBOW, 14, 15, NOSE)), ctx.width - run,
        [("wrist_forehead_lr", _select(side, lrs), cfg.wiping_sweat_lr),
         ("contact_frames", run.astype(np.float64), float(h)),
         ("lateral_speed", _select(side, speeds), cfg.sweep_speed_min)])


def rule_scratch_head(ctx: Ctx) -> RuleOutput:
    cfg, h = ctx.cfg, ctx.h
    runs, speeds, lrs, fired = [], [], [], []
    for wrist in (L_WRIST, R_WRIST):
        lr = np.fmax(np.fmax(ctx.lr(wrist, R_EAR), ctx.lr(wrist, L_EAR)), ctx.lr(wrist, HEAD_TOP))
        run = trailing_run(_ge(lr, cfg.scratch_head_lr))
        spd = ctx.lateral_speed(wrist)
        with np.errstate(invalid="ignore"):
            slow = (spd < cfg.sweep_speed_min) & ~np.isnan(spd)
        fired.append(ctx.enough & (run >= h) & slow)
        runs.append(run)
        speeds.append(spd)
        lrs.append(_last(lr))
    side = _choose(fired, _better(*lrs))
    run = _select(side, runs)
    return RuleOutput(
        "scratch_head", _code(fired[0] | fired[1], PoseCategory.ScratchHead), side,
        ((L_WRIST, L_ELBOW, R_EAR, L_EAR, NOSE), (R_WRIST, R_ELBOW, R_EAR, L_EAR, NOSE)),
        ctx.width - run,
        [("wrist_head_lr", _select(side, lrs), cfg.scratch_head_lr),
         ("contact_frames", run.astype(np.float64), float(h)),
         ("lateral_speed", _select(side, speeds), cfg.sweep_speed_min)])


# ---------------------------------------------------------------------------
# elbow-band oscillation rules

def _elbow_cycles(ctx: Ctx, arm) -> tuple[np.ndarray, np.ndarray]:
    ang = ctx.angle(*arm)
    return ang, band_cycles(ang, ctx.cfg.fanning_angle_min_deg, ctx.cfg.fanning_angle_max_deg)


def rule_fanning(ctx: Ctx) -> RuleOutput:
    cfg = ctx.cfg
    cycles, fired, lows, highs = [], [], [], []
    for arm in ARMS:
        _, elbow, wrist = arm
        ang, cyc = _elbow_cycles(ctx, arm)
        with np.errstate(invalid="ignore"):
            flexed = ang <= cfg.fanning_angle_min_deg
        with np.errstate(invalid="ignore"):
            raised = ctx.win(ctx.table.y(wrist)) < ctx.win(ctx.table.y(elbow))
        hand_up = flexed.any(axis=1) & ~(flexed & ~raised).any(axis=1)
        fired.append(ctx.enough & (cyc >= cfg.min_cycles) & hand_up)
        cycles.append(cyc.astype(np.float64))
        lows.append(np.where(np.isnan(ang), np.inf, ang).min(axis=1))
        highs.append(np.where(np.isnan(ang), -np.inf, ang).max(axis=1))
    side = _choose(fired, _better(*cycles))
    return RuleOutput(
        "fanning", _code(fired[0] | fired[1], PoseCategory.FanningWithHands), side, ARMS,
        ctx.first_col,
        [("elbow_cycles", _select(side, cycles), float(cfg.min_cycles)),
         ("elbow_angle_min", _select(side, lows), cfg.fanning_angle_min_deg),
         ("elbow_angle_max", _select(side, highs), cfg.fanning_angle_max_deg)])


def rule_shaking_tshirt(ctx: Ctx) -> RuleOutput:
    cfg, h = ctx.cfg, ctx.h
    cycles, fired, runs, lrs = [], [], [], []
    for arm in ARMS:
        wrist = arm[2]
        lr = ctx.lr(wrist, CHEST)
        run = trailing_run(_ge(lr, cfg.shaking_tshirt_lr))
        _, cyc = _elbow_cycles(ctx, arm)
        fired.append(ctx.enough & (run >= h) & (cyc >= cfg.min_cycles))
        cycles.append(cyc.astype(np.float64))
        runs.append(run)
        lrs.append(_last(lr))
    side = _choose(fired, _better(*lrs))
    return RuleOutput(
        "shaking_tshirt", _code(fired[0] | fired[1], PoseCategory.ShakingTShirt), side,
        tuple(arm + (NECK, R_HIP, L_HIP) for arm in ARMS), ctx.first_col,
        [("wrist_chest_lr", _select(side, lrs), cfg.shaking_tshirt_lr),
         ("grip_frames", _select(side, runs).astype(np.float64), float(h)),
         ("elbow_cycles", _select(side, cycles), float(cfg.min_cycles))])


# ---------------------------------------------------------------------------
# arm contact postures

def rule_roll_sleeves(ctx: Ctx) -> RuleOutput:
    cfg, h, t = ctx.cfg, ctx.h, ctx.table
    fired, runs, travels, lrs = [], [], [], []
    cols = np.arange(ctx.width)
    pairs = ((L_WRIST, R_ELBOW, R_WRIST, R_FOREARM_MID), (R_WRIST, L_ELBOW, L_WRIST, L_FOREARM_MID))
    for wrist, elbow, other, mid in pairs:
        lr = ctx.lr(wrist, mid)
        run = trailing_run(_ge(lr, cfg.roll_sleeves_lr))
        e = t.point(elbow)
        axis = t.point(other) - e
        rel = t.point(wrist) - e
        with np.errstate(invalid="ignore", divide="ignore"):
            proj = (rel[:, 0] * axis[:, 0] + rel[:, 1] * axis[:, 1]) / np.hypot(axis[:, 0], axis[:, 1]) / t.ls
        proj = ctx.win(proj)
        in_run = cols[None, :] >= (ctx.width - run)[:, None]
        travel = _nanrange(np.where(in_run, proj, np.nan))
        fired.append(ctx.enough & (run >= h) & _ge(travel, cfg.roll_travel_min))
        runs.append(run)
        travels.append(travel)
        lrs.append(_last(lr))
    side = _choose(fired, _better(*lrs))
    run = _select(side, runs)
    return RuleOutput(
        "roll_sleeves", _code(fired[0] | fired[1], PoseCategory.RollUpSleeves), side,
        ((L_WRIST, R_ELBOW, R_WRIST), (R_WRIST, L_ELBOW, L_WRIST)), ctx.width - run,
        [("wrist_forearm_lr", _select(side, lrs), cfg.roll_sleeves_lr),
         ("contact_frames", run.astype(np.float64), float(h)),
         ("axial_travel", _select(side, travels), cfg.roll_travel_min)])


def rule_folded_arm(ctx: Ctx) -> RuleOutput:
    cfg, h, t = ctx.cfg, ctx.h, ctx.table
    lo = np.fmin(t.x(R_SHOULDER), t.x(L_SHOULDER))
    hi = np.fmax(t.x(R_SHOULDER), t.x(L_SHOULDER))
    both_shoulders = ~np.isnan(t.x(R_SHOULDER)) & ~np.isnan(t.x(L_SHOULDER))
    with np.errstate(invalid="ignore"):
        inside = both_shoulders & (lo < t.x(L_WRIST)) & (t.x(L_WRIST) < hi) \
            & (lo < t.x(R_WRIST)) & (t.x(R_WRIST) < hi)
    lr_l = ctx.lr(L_WRIST, R_ELBOW)
    lr_r = ctx.lr(R_WRIST, L_ELBOW)
    run = trailing_run(_ge(lr_l, cfg.folded_arm_lr) & _ge(lr_r, cfg.folded_arm_lr) & ctx.win(inside))
    fired = ctx.enough & (run >= h)
    return RuleOutput(
        "folded_arm", _code(fired, PoseCategory.FoldedArm), np.zeros(ctx.n, dtype=np.int64),
        ((R_SHOULDER, R_ELBOW, R_WRIST, L_SHOULDER, L_ELBOW, L_WRIST),), ctx.width - run,
        [("left_wrist_right_elbow_lr", _last(lr_l), cfg.folded_arm_lr),
         ("right_wrist_left_elbow_lr", _last(lr_r), cfg.folded_arm_lr),
         ("hold_frames", run.astype(np.float64), float(h))])


# ---------------------------------------------------------------------------
# trunk and legs

def rule_shoulder_shaking(ctx: Ctx) -> RuleOutput:
    cfg, t = ctx.cfg, ctx.table
    y2, y5 = t.y(R_SHOULDER), t.y(L_SHOULDER)
    signal = np.where(np.isnan(y2), y5, np.where(np.isnan(y5), y2, (y2 + y5) / 2.0))
    need = ctx.ls_median / cfg.shoulder_shake_lr
    cycles, p2p = oscillation_array(ctx.win(signal), need)
    fired = ctx.enough & (cycles >= cfg.min_cycles) & _ge(p2p - need, 0.0)
    with np.errstate(invalid="ignore", divide="ignore"):
        p2p_lr = p2p / ctx.ls_median
    return RuleOutput(
        "shoulder_shaking", _code(fired, PoseCategory.ShoulderShaking),
        np.zeros(ctx.n, dtype=np.int64), ((R_SHOULDER, L_SHOULDER),), ctx.first_col,
        [("shoulder_cycles", cycles.astype(np.float64), float(cfg.min_cycles)),
         ("shoulder_peak_to_peak_ls", p2p_lr, 1.0 / cfg.shoulder_shake_lr)])


def rule_leg_cross(ctx: Ctx) -> RuleOutput:
    cfg, h = ctx.cfg, ctx.h
    fired, runs, lrs = [], [], []
    for ankle, knee in ((R_ANKLE, L_KNEE), (L_ANKLE, R_KNEE)):
        lr = ctx.lr(ankle, knee)
        run = trailing_run(_ge(lr, cfg.leg_cross_lr))
        fired.append(ctx.enough & (run >= 2 * h))
        runs.append(run)
        lrs.append(_last(lr))
    side = _choose(fired, _better(*lrs))
    run = _select(side, runs)
    return RuleOutput(
        "leg_cross", _code(fired[0] | fired[1], PoseCategory.LegCross), side,
        ((R_ANKLE, L_KNEE), (L_ANKLE, R_KNEE)), ctx.width - run,
        [("ankle_knee_lr", _select(side, lrs), cfg.leg_cross_lr),
         ("hold_frames", run.astype(np.float64), float(2 * h))])


def _wrapped_range(slopes: np.ndarray) -> np.ndarray:
    """max-min of slope angles taken modulo 180 around each row's first sample."""
    ok = ~np.isnan(slopes)
    first = np.argmax(ok, axis=1)
    ref = np.take_along_axis(slopes, first[:, None], axis=1)
    d = np.mod(slopes - ref + 90.0, 180.0) - 90.0
    return _nanrange(d)


def rule_walk_or_stamp(ctx: Ctx) -> RuleOutput:
    cfg, t = ctx.cfg, ctx.table
    swing = []
    active = np.ones(ctx.n, dtype=bool)
    lift_need = ctx.ls_median / cfg.ankle_lift_lr
    lifts = []
    for knee, ankle in ((R_KNEE, R_ANKLE), (L_KNEE, L_ANKLE)):
        rng = _wrapped_range(ctx.win(t.slope(knee, ankle)))
        lift, _ = oscillation_array(ctx.win(t.y(ankle)), lift_need)
        active &= _ge(rng, cfg.stamp_slope_delta_deg) | (lift >= cfg.min_cycles)
        swing.append(rng)
        lifts.append(lift.astype(np.float64))
    active &= ctx.enough
    with np.errstate(invalid="ignore", divide="ignore"):
        travel = _nanrange(ctx.win(t.x(HIP_MID))) / ctx.ls_median
        stride = ctx.ls / np.abs(ctx.win(t.x(R_ANKLE)) - ctx.win(t.x(L_ANKLE)))
    stride = np.where(np.isnan(stride), np.inf, stride).min(axis=1)
    moving = _ge(travel, 1.0 / cfg.hip_travel_max_lr)
    with np.errstate(invalid="ignore"):
        walking = active & moving & (stride <= cfg.walk_lr)
        stamping = active & ~moving & ~np.isnan(travel)
    category = np.where(walking, CODE[PoseCategory.Walking],
                        np.where(stamping, CODE[PoseCategory.StampingFeet], NO_CODE))
    return RuleOutput(
        "walk_or_stamp", category, np.zeros(ctx.n, dtype=np.int64),
        ((R_HIP, R_KNEE, R_ANKLE, L_HIP, L_KNEE, L_ANKLE),), ctx.first_col,
        [("right_shank_slope_range", swing[0], cfg.stamp_slope_delta_deg),
         ("left_shank_slope_range", swing[1], cfg.stamp_slope_delta_deg),
         ("right_ankle_lift_cycles", lifts[0], float(cfg.min_cycles)),
         ("left_ankle_lift_cycles", lifts[1], float(cfg.min_cycles)),
         ("hip_travel_ls", travel, 1.0 / cfg.hip_travel_max_lr),
         ("ankle_stride_lr", stride, cfg.walk_lr)])


def rule_hands_neck_or_breath(ctx: Ctx) -> RuleOutput:
    cfg, h = ctx.cfg, ctx.h
    runs, sums = [], []
    for target in (NOSE, NECK):
        a, b = ctx.lr(R_WRIST, target), ctx.lr(L_WRIST, target)
        runs.append(trailing_run(_ge(a, cfg.neck_breath_lr) & _ge(b, cfg.neck_breath_lr)))
        sums.append(_last(a) + _last(b))
    nose_ok = ctx.enough & (runs[0] >= h)
    neck_ok = ctx.enough & (runs[1] >= h)
    with np.errstate(invalid="ignore"):
        nose_wins = nose_ok & (~neck_ok | (sums[0] >= sums[1]))
    neck_wins = neck_ok & ~nose_wins
    category = np.where(nose_wins, CODE[PoseCategory.WarmHandsWithBreath],
                        np.where(neck_wins, CODE[PoseCategory.HandsAroundNeck], NO_CODE))
    side = np.where(nose_wins | neck_wins, neck_wins.astype(np.int64),
                    _better(runs[0].astype(np.float64), runs[1].astype(np.float64)))
    run = _select(side, runs)
    return RuleOutput(
        "hands_neck_or_breath", category, side,
        ((R_WRIST, L_WRIST, NOSE), (R_WRIST, L_WRIST, NECK)), ctx.width - run,
        [("wrists_nose_lr_sum", sums[0], 2 * cfg.neck_breath_lr),
         ("wrists_neck_lr_sum", sums[1], 2 * cfg.neck_breath_lr),
         ("hold_frames", run.astype(np.float64), float(h))])


RULES = (
    rule_wiping_sweat, rule_fanning, rule_shaking_tshirt, rule_scratch_head, rule_roll_sleeves,
    rule_walk_or_stamp, rule_shoulder_shaking, rule_folded_arm, rule_leg_cross,
    rule_hands_neck_or_breath,
)

RULE_FOR = {
    PoseCategory.WipingSweat: rule_wiping_sweat,
    PoseCategory.FanningWithHands: rule_fanning,
    PoseCategory.ShakingTShirt: rule_shaking_tshirt,
    PoseCategory.ScratchHead: rule_scratch_head,
    PoseCategory.RollUpSleeves: rule_roll_sleeves,
    PoseCategory.Walking: rule_walk_or_stamp,
    PoseCategory.StampingFeet: rule_walk_or_stamp,
    PoseCategory.ShoulderShaking: rule_shoulder_shaking,
    PoseCategory.FoldedArm: rule_folded_arm,
    PoseCategory.LegCross: rule_leg_cross,
    PoseCategory.HandsAroundNeck: rule_hands_neck_or_breath,
    PoseCategory.WarmHandsWithBreath: rule_hands_neck_or_breath,
}

# Shaking T-shirt sits ahead of fanning: a gripping, pumping arm also
# satisfies the fanning band in 2D, while the grip itself rules out fanning.
PRIORITY = (
    PoseCategory.WipingSweat,
    PoseCategory.ShakingTShirt,
    PoseCategory.FanningWithHands,
    PoseCategory.WarmHandsWithBreath,
    PoseCategory.HandsAroundNeck,
    PoseCategory.ScratchHead,
    PoseCategory.FoldedArm,
    PoseCategory.RollUpSleeves,
    PoseCategory.ShoulderShaking,
    PoseCategory.LegCross,
    PoseCategory.StampingFeet,
    PoseCategory.Walking,
)


def evaluate(ctx: Ctx) -> tuple[np.ndarray, dict]:
    """Run every rule; return per-window category codes and the rule outputs."""
    outputs = {rule: rule(ctx) for rule in RULES}
    codes = np.full(ctx.n, NO_CODE, dtype=np.int64)
    for cat in PRIORITY:
        hit = (outputs[RULE_FOR[cat]].category == CODE[cat]) & (codes == NO_CODE)
        codes[hit] = CODE[cat]
    codes[(codes == NO_CODE)] = CODE[PoseCategory.None_]
    return codes, outputs
