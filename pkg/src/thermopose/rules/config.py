"""Rule thresholds. Relative-distance thresholds (``*_lr``) are in reciprocal
forearm units: a rule fires when ``forearm / distance >= threshold``."""

from __future__ import annotations

import dataclasses
import json
import os
from dataclasses import dataclass, fields

from ..skeleton import ConfigError


@dataclass(frozen=True)
class RuleConfig:
    epsilon: float = 0.5
    tau: float = 1.5
    wiping_sweat_lr: float = 1.8
    fanning_angle_max_deg: float = 120.0
    fanning_angle_min_deg: float = 80.0
    shaking_tshirt_lr: float = 1.8
    scratch_head_lr: float = 1.8
    roll_sleeves_lr: float = 0.9
    walk_lr: float = 1.8
    stamp_slope_delta_deg: float = 30.0
    shoulder_shake_lr: float = 1.5
    folded_arm_lr: float = 2.0
    leg_cross_lr: float = 1.0
    neck_breath_lr: float = 3.0
    window_seconds: float = 2.0
    hysteresis_frames: int = 5
    min_cycles: int = 2
    sweep_speed_min: float = 1.5       # forearms / second, lateral wrist speed
    hip_travel_max_lr: float = 2.0     # walking iff hip travel >= forearm / this
    roll_travel_min: float = 0.5       # forearms of travel along the rolled forearm
    ankle_lift_lr: float = 2.0         # ankle-y swing counts when >= forearm / this

    def __post_init__(self):
        if not 0.0 <= self.epsilon <= 1.0:
            raise ConfigError(f"epsilon must lie in [0, 1], got {self.epsilon}")
        for f in fields(self):
            v = getattr(self, f.name)
            if f.name in ("epsilon", "sweep_speed_min"):
                if v < 0:
                    raise ConfigError(f"{f.name} must be >= 0, got {v}")
            elif not v > 0:
                raise ConfigError(f"{f.name} must be > 0, got {v}")
        if not self.fanning_angle_min_deg < self.fanning_angle_max_deg:
            raise ConfigError("fanning_angle_min_deg must be below fanning_angle_max_deg")
        if self.hysteresis_frames != int(self.hysteresis_frames) or self.min_cycles != int(self.min_cycles):
            raise ConfigError("hysteresis_frames and min_cycles must be integers")

    def replace(self, **changes) -> "RuleConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "RuleConfig":
        known = {f.name: f for f in fields(cls)}
        unknown = set(data) - set(known)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
        values = {}
        for k, v in data.items():
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                raise ConfigError(f"config key {k} must be numeric, got {v!r}")
            values[k] = int(v) if known[k].type in (int, "int") else float(v)
        return cls(**values)

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    @classmethod
    def load(cls, path: str | os.PathLike, base: "RuleConfig | None" = None) -> "RuleConfig":
        """Read a flat JSON object of field names; missing keys keep ``base`` values."""
        try:
            with open(path, encoding="utf-8") as fh:
                data = json.load(fh)
        except json.JSONDecodeError as e:
            raise ConfigError(f"{path}: malformed JSON ({e.msg} at char {e.pos})") from None
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: config must be a JSON object")
        merged = (base or cls()).to_dict()
        merged.update(data)
        return cls.from_dict(merged)
