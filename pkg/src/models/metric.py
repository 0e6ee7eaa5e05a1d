"""
Metric configuration and result types
"""
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Tuple

import numpy as np

from .errors import ConfigError, PipelineWarning


@dataclass(frozen=True)
class PassConfig:
    """Kinematic and scaling parameters of the metric"""
    a1: float = 1.5
    a2: float = -1.5
    k1: float = -0.417
    k2: float = 0.700
    free_lane_horizon: float = 30.0
    gap_epsilon: float = 0.01
    speed_epsilon: float = 0.01
    dt: float = 0.05
    clamp_speeding: bool = False

    def __post_init__(self):
        if not self.a1 > 0:
            raise ConfigError(f"must be > 0, got {self.a1}", key="pass.a1")
        if not self.a2 < 0:
            raise ConfigError(f"must be < 0, got {self.a2}", key="pass.a2")
        if not self.k1 < 0 < self.k2:
            raise ConfigError(f"require k1 < 0 < k2, got k1={self.k1}, k2={self.k2}", key="pass.k")
        if not self.free_lane_horizon > 0:
            raise ConfigError(f"must be > 0, got {self.free_lane_horizon}", key="pass.free_lane_horizon")
        if self.gap_epsilon < 0 or self.speed_epsilon < 0:
            raise ConfigError("epsilons must be non-negative", key="pass.epsilon")
        if not self.dt > 0:
            raise ConfigError(f"must be > 0, got {self.dt}", key="pass.dt")

    def with_k(self, k1: float, k2: float) -> "PassConfig":
        return PassConfig(
            a1=self.a1, a2=self.a2, k1=k1, k2=k2,
            free_lane_horizon=self.free_lane_horizon,
            gap_epsilon=self.gap_epsilon, speed_epsilon=self.speed_epsilon,
            dt=self.dt, clamp_speeding=self.clamp_speeding,
        )


class ManeuverPhase(Enum):
    """Which branch of the catch-up kinematics produced a result"""
    TWO_PHASE = "two-phase"
    LIMIT_CAPPED = "limit-capped"
    DECEL_ONLY = "decel-only"
    FREE_LANE = "free-lane"
    DEGENERATE = "degenerate"


@dataclass(frozen=True)
class ManeuverResult:
    """Idealized catch-up maneuver in one lane"""
    duration: float
    distance: float
    v_proj: float
    phase_tag: ManeuverPhase
    v_post: float
    peak_speed: float
    decel_used: float
    speeding: bool = False

    def __post_init__(self):
        if self.duration < 0 or self.distance < 0 or self.v_proj < 0:
            raise ValueError(f"invalid maneuver result {self}")


@dataclass(frozen=True)
class LaneChoice:
    """Multi-lane projected attainable speed and its per-lane breakdown"""
    v_proj: float
    per_lane: Tuple[Tuple[int, float], ...]
    chosen_lane: int
    horizon: float
    speeding: bool = False


@dataclass
class PassSeries:
    """Per-tick metric arrays aligned to ego ticks"""
    vehicle_id: str
    time: np.ndarray
    lane_id: np.ndarray
    v0: np.ndarray
    v_proj: np.ndarray
    chosen_lane: np.ndarray
    available_space: np.ndarray
    delta: np.ndarray
    delta_scaled: np.ndarray
    pass_values: np.ndarray
    warnings: List[PipelineWarning] = field(default_factory=list)

    def __post_init__(self):
        n = self.time.size
        arrays = (self.lane_id, self.v0, self.v_proj, self.chosen_lane, self.available_space,
                  self.delta, self.delta_scaled, self.pass_values)
        if any(a.size != n for a in arrays):
            raise ValueError("PassSeries arrays must have equal length")

    def __len__(self) -> int:
        return int(self.time.size)

    @property
    def aggregate(self) -> float:
        """Time-aggregated PASS (arithmetic mean over ticks)"""
        return float(np.mean(self.pass_values))


@dataclass(frozen=True)
class BaselineConfig:
    """Parameters of the reference inefficiency score"""
    kind: str = "gap-decay"
    d_ref: float = 50.0

    def __post_init__(self):
        if not self.d_ref > 0:
            raise ConfigError(f"must be > 0, got {self.d_ref}", key="baseline.d_ref")


@dataclass(frozen=True)
class SceneConfig:
    """Scene construction parameters"""
    vehicle_length: float = 4.5
    sensing_range: float = 300.0
    lateral_tolerance: float = 10.0
    resample: bool = True

    def __post_init__(self):
        if not self.vehicle_length > 0:
            raise ConfigError(f"must be > 0, got {self.vehicle_length}", key="scene.vehicle_length")
        if not self.sensing_range > 0:
            raise ConfigError(f"must be > 0, got {self.sensing_range}", key="scene.sensing_range")
        if not self.lateral_tolerance > 0:
            raise ConfigError(f"must be > 0, got {self.lateral_tolerance}", key="scene.lateral_tolerance")
