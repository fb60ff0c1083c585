"""Pose sub-algorithms, priority classification and thermal scores."""

from .api import (
    UNUSABLE, Detection, NoUsableFrames, RuleResult, SequenceLabels, classify, classify_sequence,
    detect_fanning, detect_folded_arm, detect_hands_neck_or_breath, detect_leg_cross,
    detect_roll_sleeves, detect_scratch_head, detect_shaking_tshirt, detect_shoulder_shaking,
    detect_walk_or_stamp, detect_wiping_sweat, detection_for,
)
from .categories import POSES, SCORES, PoseCategory, preference_of, score_of
from .config import RuleConfig
from .detectors import PRIORITY

DETECTORS = (
    detect_wiping_sweat, detect_fanning, detect_shaking_tshirt, detect_scratch_head,
    detect_roll_sleeves, detect_walk_or_stamp, detect_shoulder_shaking, detect_folded_arm,
    detect_leg_cross, detect_hands_neck_or_breath,
)

__all__ = [
    "DETECTORS", "Detection", "NoUsableFrames", "POSES", "PRIORITY", "PoseCategory", "RuleConfig",
    "RuleResult", "SCORES", "SequenceLabels", "UNUSABLE", "classify", "classify_sequence",
    "detect_fanning", "detect_folded_arm", "detect_hands_neck_or_breath", "detect_leg_cross",
    "detect_roll_sleeves", "detect_scratch_head", "detect_shaking_tshirt",
    "detect_shoulder_shaking", "detect_walk_or_stamp", "detect_wiping_sweat", "detection_for",
    "preference_of", "score_of",
]
