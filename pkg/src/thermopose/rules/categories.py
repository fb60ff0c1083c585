"""Macro-pose categories and their thermal sensation scores (seven-point scale)."""

from __future__ import annotations

from enum import Enum


class PoseCategory(Enum):
    WipingSweat = "WipingSweat"
    FanningWithHands = "FanningWithHands"
    ShakingTShirt = "ShakingTShirt"
    ScratchHead = "ScratchHead"
    RollUpSleeves = "RollUpSleeves"
    Walking = "Walking"
    ShoulderShaking = "ShoulderShaking"
    FoldedArm = "FoldedArm"
    LegCross = "LegCross"
    HandsAroundNeck = "HandsAroundNeck"
    WarmHandsWithBreath = "WarmHandsWithBreath"
    StampingFeet = "StampingFeet"
    None_ = "None"

    @property
    def slug(self) -> str:
        return _SLUGS[self]

    @classmethod
    def from_name(cls, name: str) -> "PoseCategory":
        """Accept the enum value (``FoldedArm``) or the slug (``folded_arm``)."""
        for c in cls:
            if name in (c.value, c.slug):
                return c
        raise ValueError(f"unknown pose category {name!r}")


SCORES = {
    PoseCategory.WipingSweat: 3,
    PoseCategory.FanningWithHands: 3,
    PoseCategory.ShakingTShirt: 2,
    PoseCategory.ScratchHead: 2,
    PoseCategory.RollUpSleeves: 1,
    PoseCategory.Walking: 0,
    PoseCategory.ShoulderShaking: -1,
    PoseCategory.FoldedArm: -2,
    PoseCategory.LegCross: -2,
    PoseCategory.HandsAroundNeck: -2,
    PoseCategory.WarmHandsWithBreath: -3,
    PoseCategory.StampingFeet: -3,
}

POSES = tuple(SCORES)

_SLUGS = {
    PoseCategory.WipingSweat: "wiping_sweat",
    PoseCategory.FanningWithHands: "fanning",
    PoseCategory.ShakingTShirt: "shaking_tshirt",
    PoseCategory.ScratchHead: "scratch_head",
    PoseCategory.RollUpSleeves: "roll_sleeves",
    PoseCategory.Walking: "walking",
    PoseCategory.ShoulderShaking: "shoulder_shaking",
    PoseCategory.FoldedArm: "folded_arm",
    PoseCategory.LegCross: "leg_cross",
    PoseCategory.HandsAroundNeck: "hands_around_neck",
    PoseCategory.WarmHandsWithBreath: "warm_hands_breath",
    PoseCategory.StampingFeet: "stamping",
    PoseCategory.None_: "none",
}


def score_of(category: PoseCategory) -> int:
    if category is PoseCategory.None_:
        raise ValueError("PoseCategory.None_ carries no thermal score")
    return SCORES[category]


def preference_of(score: int) -> int:
    """Thermal preference: +1 runs hot (wants cooling), -1 runs cold, 0 neutral."""
    if score not in range(-3, 4):
        raise ValueError(f"score must be in -3..3, got {score}")
    return (score > 0) - (score < 0)
