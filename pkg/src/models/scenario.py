"""
Scenario, platoon and ego-policy descriptions for the lane-change simulator
"""
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Tuple

from .errors import ConfigError
from .trajectory import EventWindow, RouteMeta

# Lane layout shared by every scenario: target lane 0, ego lane 1
TARGET_LANE = 0
EGO_LANE = 1

SPAWN_HEADWAY_RANGE = (1.0, 2.0)

# Length of target lane open to the ego before the stop point: the on-ramp
# acceleration lane, and the off-ramp lane from its diverge point
ACCELERATION_LANE_LENGTH = 250.0
DIVERGE_LANE_LENGTH = 400.0


@dataclass(frozen=True)
class IdmParams:
    """Intelligent Driver Model parameters"""
    desired_speed: float = 11.11
    min_gap: float = 2.0
    time_headway: float = 1.5
    max_accel: float = 1.5
    comfortable_decel: float = 2.0
    delta: float = 4.0

    def __post_init__(self):
        for name in ("desired_speed", "min_gap", "time_headway", "max_accel", "comfortable_decel", "delta"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"must be > 0, got {getattr(self, name)}", key=f"idm.{name}")


@dataclass(frozen=True)
class LeadProfile:
    """Sinusoidally modulated platoon-leader speed"""
    base_speed: float = 8.33
    amplitude: float = 1.5
    period: float = 40.0

    def __post_init__(self):
        if not self.base_speed - self.amplitude > 0:
            raise ConfigError(
                f"base speed {self.base_speed} must exceed amplitude {self.amplitude}", key="lead_profile"
            )
        if not self.period > 0:
            raise ConfigError(f"must be > 0, got {self.period}", key="lead_profile.period")


@dataclass(frozen=True)
class MergeResistance:
    """Chance that the gap follower closes up on a merge attempt"""
    probability: float = 0.3
    reduced_headway: float = 0.5
    detection_range: float = 30.0

    def __post_init__(self):
        if not 0.0 <= self.probability <= 1.0:
            raise ConfigError(f"must be in [0, 1], got {self.probability}", key="merge_resistance.probability")
        if not self.reduced_headway > 0:
            raise ConfigError(f"must be > 0, got {self.reduced_headway}", key="merge_resistance.reduced_headway")
        if not self.detection_range > 0:
            raise ConfigError(f"must be > 0, got {self.detection_range}", key="merge_resistance.detection_range")


class ScenarioKind(Enum):
    INCIDENT = "A"
    OFF_RAMP = "B"
    ON_RAMP = "C"

    @property
    def label(self) -> str:
        return {"A": "incident avoidance", "B": "off-ramp entry", "C": "on-ramp entry"}[self.value]

    @property
    def lead_speed(self) -> float:
        """Default mean leader speed: queueing toward an exit in B, merging traffic in C"""
        return {"A": 8.33, "B": 6.94, "C": 10.0}[self.value]

    @property
    def ego_start_speed(self) -> float:
        """The ego enters an on-ramp slower than main-line traffic"""
        return {"A": 18.0, "B": 18.0, "C": 12.0}[self.value]

    @property
    def merge_lane_length(self) -> Optional[float]:
        """How far before the stop point the ego may start to merge; None is unrestricted"""
        return {"A": None, "B": DIVERGE_LANE_LENGTH, "C": ACCELERATION_LANE_LENGTH}[self.value]


@dataclass(frozen=True)
class ScenarioSpec:
    """
    One mandatory-lane-change event.

    The ego starts in lane 1 and must reach lane 0 before constraint_s: a stopped
    vehicle (A), the last point to leave for the off-ramp (B) or the end of the
    acceleration lane (C). All three are modelled as a stop point in lane 1.

    Unset lead_profile and ego_start_speed take the kind's defaults. The ego may
    not start a merge before merge_start_s, which defaults to the diverge point
    of the off-ramp (B) or the nose of the acceleration lane (C).
    """
    event_id: str
    kind: ScenarioKind
    route_length: float
    constraint_s: float
    window: EventWindow
    speed_limit: float = 22.22
    platoon_size: int = 12
    platoon_head_s: float = 300.0
    lead_profile: Optional[LeadProfile] = None
    merge_resistance: MergeResistance = field(default_factory=MergeResistance)
    follower_idm: Optional[IdmParams] = None
    headway_range: Tuple[float, float] = SPAWN_HEADWAY_RANGE
    ego_start_s: float = -30.0
    ego_start_speed: Optional[float] = None
    merge_start_s: Optional[float] = None
    platoon_seed: int = 0

    def __post_init__(self):
        key = f"scenarios.{self.event_id}"
        if not 0 < self.constraint_s < self.route_length:
            raise ConfigError(f"constraint_s {self.constraint_s} outside route (0, {self.route_length})", key=key)
        if not (self.window.start_s > self.ego_start_s and self.window.end_s <= self.route_length):
            raise ConfigError("event window must lie inside the route ahead of the ego spawn point", key=key)
        if self.platoon_size < 0:
            raise ConfigError(f"negative platoon size {self.platoon_size}", key=key)
        lo, hi = self.headway_range
        if not SPAWN_HEADWAY_RANGE[0] <= lo <= hi <= SPAWN_HEADWAY_RANGE[1]:
            raise ConfigError(f"headway range {self.headway_range} outside [1.0, 2.0] s", key=key)
        if not self.speed_limit > 0:
            raise ConfigError(f"speed limit must be > 0, got {self.speed_limit}", key=key)
        if self.follower_idm is None:
            # followers default to the speed limit
            object.__setattr__(self, "follower_idm", IdmParams(desired_speed=self.speed_limit))
        if self.lead_profile is None:
            object.__setattr__(self, "lead_profile", LeadProfile(base_speed=self.kind.lead_speed))
        if self.ego_start_speed is None:
            object.__setattr__(self, "ego_start_speed", self.kind.ego_start_speed)
        if self.merge_start_s is None and self.kind.merge_lane_length is not None:
            opens = max(self.constraint_s - self.kind.merge_lane_length, self.ego_start_s)
            object.__setattr__(self, "merge_start_s", opens)
        if self.merge_start_s is not None and not self.merge_start_s < self.constraint_s:
            raise ConfigError(f"merge start {self.merge_start_s} must lie before constraint_s", key=key)
        if self.ego_start_speed < 0:
            raise ConfigError(f"negative ego start speed {self.ego_start_speed}", key=key)
        peak = self.lead_profile.base_speed + self.lead_profile.amplitude
        if not self.follower_idm.desired_speed > peak:
            raise ConfigError(
                f"follower desired speed {self.follower_idm.desired_speed} must exceed leader peak {peak}", key=key
            )

    def to_dict(self) -> Dict:
        return {
            "event_id": self.event_id,
            "kind": self.kind.value,
            "label": self.kind.label,
            "route_length": self.route_length,
            "constraint_s": self.constraint_s,
            "speed_limit": self.speed_limit,
            "platoon_size": self.platoon_size,
            "platoon_seed": self.platoon_seed,
            "ego_start_speed": self.ego_start_speed,
            "merge_start_s": self.merge_start_s,
            "lead_profile": {
                "base_speed": self.lead_profile.base_speed,
                "amplitude": self.lead_profile.amplitude,
                "period": self.lead_profile.period,
            },
            "merge_resistance": {
                "probability": self.merge_resistance.probability,
                "reduced_headway": self.merge_resistance.reduced_headway,
                "detection_range": self.merge_resistance.detection_range,
            },
        }

    @property
    def route_meta(self) -> RouteMeta:
        return RouteMeta(
            speed_limit=self.speed_limit,
            adjacency={TARGET_LANE: (EGO_LANE,), EGO_LANE: (TARGET_LANE,)},
            lane_blocks={EGO_LANE: self.constraint_s},
            lane_opens={} if self.merge_start_s is None else {TARGET_LANE: self.merge_start_s},
            obstacles=((EGO_LANE, self.constraint_s),),
        )


class PolicyKind(Enum):
    EARLY_MERGE = "early-merge"
    LATE_MERGE = "late-merge"
    TARGET_GAP = "target-gap-index"
    HESITANT = "hesitant"


# Documented parameter ranges of EgoPolicy
SPEED_MULTIPLIER_RANGE = (0.4, 1.0)
GAP_ACCEPTANCE_RANGE = (0.1, 1.5)
COMMIT_DISTANCE_RANGE = (10.0, 2000.0)


@dataclass(frozen=True)
class EgoPolicy:
    """
    Scripted ego behavior.

    speed_multiplier scales the speed limit into the ego's desired speed;
    commit_distance is how far before the stop point the ego starts seeking a
    gap; gap_acceptance is the time headway it needs to the gap follower.
    """
    policy_id: str
    kind: PolicyKind
    speed_multiplier: float = 0.9
    commit_distance: float = 200.0
    gap_acceptance: float = 0.5
    gap_index: int = 0
    patience: float = 6.0

    def __post_init__(self):
        key = f"policies.{self.policy_id}"
        lo, hi = SPEED_MULTIPLIER_RANGE
        if not lo <= self.speed_multiplier <= hi:
            raise ConfigError(f"speed multiplier {self.speed_multiplier} outside [{lo}, {hi}]", key=key)
        lo, hi = COMMIT_DISTANCE_RANGE
        if not lo <= self.commit_distance <= hi:
            raise ConfigError(f"commit distance {self.commit_distance} outside [{lo}, {hi}]", key=key)
        lo, hi = GAP_ACCEPTANCE_RANGE
        if not lo <= self.gap_acceptance <= hi:
            raise ConfigError(f"gap acceptance {self.gap_acceptance} outside [{lo}, {hi}]", key=key)
        if self.gap_index < 0:
            raise ConfigError(f"negative gap index {self.gap_index}", key=key)
        if not self.patience > 0:
            raise ConfigError(f"patience must be > 0, got {self.patience}", key=key)

    def to_dict(self) -> Dict:
        return {
            "policy_id": self.policy_id,
            "kind": self.kind.value,
            "speed_multiplier": self.speed_multiplier,
            "commit_distance": self.commit_distance,
            "gap_acceptance": self.gap_acceptance,
            "gap_index": self.gap_index,
            "patience": self.patience,
        }

    @classmethod
    def from_dict(cls, data: Dict) -> "EgoPolicy":
        try:
            kind = PolicyKind(data["kind"])
        except (KeyError, ValueError) as e:
            raise ConfigError(f"invalid policy kind: {e}", key="policies") from e
        return cls(
            policy_id=str(data["policy_id"]),
            kind=kind,
            speed_multiplier=float(data.get("speed_multiplier", 0.9)),
            commit_distance=float(data.get("commit_distance", 200.0)),
            gap_acceptance=float(data.get("gap_acceptance", 0.5)),
            gap_index=int(data.get("gap_index", 0)),
            patience=float(data.get("patience", 6.0)),
        )


@dataclass(frozen=True)
class SimConfig:
    """Integration and ego-controller settings shared by all runs"""
    dt: float = 0.05
    max_duration: float = 300.0
    commit_delay: float = 2.0
    hard_decel_floor: float = -8.0
    vehicle_length: float = 4.5
    ego_time_headway: float = 1.0
    ego_max_accel: float = 1.5
    ego_comfortable_decel: float = 2.0
    align_decel: float = 3.0
    acceptance_min_gap: float = 1.0
    acceptance_decel: float = 4.0
    coordinates: str = "s"
    lane_width: float = 3.5
    workers: int = 1

    def __post_init__(self):
        if not self.dt > 0:
            raise ConfigError(f"must be > 0, got {self.dt}", key="simulation.dt")
        if not self.max_duration > self.dt:
            raise ConfigError(f"must exceed dt, got {self.max_duration}", key="simulation.max_duration")
        if not self.commit_delay >= 0:
            raise ConfigError(f"must be >= 0, got {self.commit_delay}", key="simulation.commit_delay")
        if not self.hard_decel_floor < 0:
            raise ConfigError(f"must be < 0, got {self.hard_decel_floor}", key="simulation.hard_decel_floor")
        if self.coordinates not in ("s", "xy"):
            raise ConfigError(f"expected 's' or 'xy', got {self.coordinates!r}", key="simulation.coordinates")
        if self.workers < 1:
            raise ConfigError(f"must be >= 1, got {self.workers}", key="simulation.workers")

    @property
    def max_steps(self) -> int:
        return int(round(self.max_duration / self.dt))


@dataclass
class RunResult:
    """Trajectories of one ego run and its surrounding platoon"""
    event_id: str
    policy_id: str
    ego_id: str
    tracks: List = field(default_factory=list)
    completed: bool = True
    collision: Optional[str] = None
    merge_time: Optional[float] = None

    @property
    def ego_track(self):
        for track in self.tracks:
            if track.vehicle_id == self.ego_id:
                return track
        return None
