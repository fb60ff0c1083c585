"""Thermal-comfort macro-pose recognition from COCO-18 skeleton keypoints."""

from .rules import Detection, PoseCategory, RuleConfig, classify, preference_of, score_of
from .skeleton import FrameWindow, SkeletonFrame, frame_from_matrix

__version__ = "0.1.0"

__all__ = [
    "Detection", "FrameWindow", "PoseCategory", "RuleConfig", "SkeletonFrame", "classify",
    "frame_from_matrix", "preference_of", "score_of",
]
