"""
Trajectory and scene data model
"""
from dataclasses import dataclass, field
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from .errors import ConfigError, InputError

# Nominal recording rate of 20 Hz
DEFAULT_DT = 0.05


@dataclass(frozen=True)
class TrajectoryRecord:
    """One per-tick vehicle state sample"""
    vehicle_id: str
    time: float
    lane_id: int
    s: float
    speed: float
    acceleration: float


def _frozen(values, dtype) -> np.ndarray:
    array = np.array(values, dtype=dtype)
    array.setflags(write=False)
    return array


class VehicleTrack:
    """
    Time-ordered samples of one vehicle, stored column-wise.

    Records are materialized on demand; the arrays are read-only.
    """

    __slots__ = ("vehicle_id", "time", "lane_id", "s", "speed", "acceleration")

    def __init__(
        self,
        vehicle_id: str,
        time: Sequence[float],
        lane_id: Sequence[int],
        s: Sequence[float],
        speed: Sequence[float],
        acceleration: Sequence[float],
    ):
        self.vehicle_id = str(vehicle_id)
        self.time = _frozen(time, np.float64)
        self.lane_id = _frozen(lane_id, np.int64)
        self.s = _frozen(s, np.float64)
        self.speed = _frozen(speed, np.float64)
        self.acceleration = _frozen(acceleration, np.float64)

        n = self.time.size
        if n == 0:
            raise InputError(f"track {self.vehicle_id} is empty")
        if not (self.lane_id.size == self.s.size == self.speed.size == self.acceleration.size == n):
            raise InputError(f"track {self.vehicle_id} has columns of unequal length")
        if n > 1 and np.any(np.diff(self.time) <= 0):
            raise InputError(f"track {self.vehicle_id} time is not strictly increasing")
        if np.any(self.speed < 0):
            raise InputError(f"track {self.vehicle_id} has negative speed")

    @classmethod
    def from_records(cls, records: Sequence[TrajectoryRecord]) -> "VehicleTrack":
        """Build a track from records of a single vehicle"""
        if not records:
            raise InputError("cannot build a track from zero records")
        ids = {r.vehicle_id for r in records}
        if len(ids) != 1:
            raise InputError(f"records mix vehicle ids: {sorted(ids)}")
        return cls(
            vehicle_id=records[0].vehicle_id,
            time=[r.time for r in records],
            lane_id=[r.lane_id for r in records],
            s=[r.s for r in records],
            speed=[r.speed for r in records],
            acceleration=[r.acceleration for r in records],
        )

    def __len__(self) -> int:
        return int(self.time.size)

    def __iter__(self) -> Iterator[TrajectoryRecord]:
        return iter(self.records)

    @property
    def records(self) -> List[TrajectoryRecord]:
        return [
            TrajectoryRecord(
                vehicle_id=self.vehicle_id,
                time=float(t),
                lane_id=int(lane),
                s=float(s),
                speed=float(v),
                acceleration=float(a),
            )
            for t, lane, s, v, a in zip(self.time, self.lane_id, self.s, self.speed, self.acceleration)
        ]

    def shifted(self, dt: float) -> "VehicleTrack":
        """Same track translated in time by dt seconds"""
        return VehicleTrack(self.vehicle_id, self.time + dt, self.lane_id, self.s, self.speed, self.acceleration)

    def __repr__(self) -> str:
        return f"VehicleTrack({self.vehicle_id!r}, n={len(self)}, t=[{self.time[0]:.2f}, {self.time[-1]:.2f}])"


@dataclass(frozen=True)
class LaneContext:
    """Leader and static-obstacle state of one candidate lane"""
    lane_id: int
    leader_speed: Optional[float] = None
    leader_gap: Optional[float] = None
    static_obstacle_gap: Optional[float] = None

    def __post_init__(self):
        if (self.leader_speed is None) != (self.leader_gap is None):
            raise InputError(f"lane {self.lane_id}: leader speed and gap must be given together")
        if self.leader_gap is not None and self.leader_gap < 0:
            raise InputError(f"lane {self.lane_id}: negative leader gap {self.leader_gap}")
        if self.static_obstacle_gap is not None and self.static_obstacle_gap < 0:
            raise InputError(f"lane {self.lane_id}: negative obstacle gap {self.static_obstacle_gap}")

    @property
    def has_leader(self) -> bool:
        return self.leader_gap is not None

    @property
    def has_obstacle(self) -> bool:
        return self.static_obstacle_gap is not None


MAX_CANDIDATE_LANES = 3


@dataclass(frozen=True)
class SceneSnapshot:
    """Ego state plus per-candidate-lane context at one instant"""
    time: float
    ego_speed: float
    ego_lane: int
    candidate_lanes: Tuple[LaneContext, ...]
    speed_limit: float
    ego_s: float = 0.0

    def __post_init__(self):
        n = len(self.candidate_lanes)
        if not 1 <= n <= MAX_CANDIDATE_LANES:
            raise InputError(f"snapshot at t={self.time} has {n} candidate lanes (1..3 allowed)")
        if self.speed_limit <= 0:
            raise InputError(f"speed limit must be positive, got {self.speed_limit}")
        if self.lane(self.ego_lane) is None:
            raise InputError(f"ego lane {self.ego_lane} missing from candidate lanes")

    def lane(self, lane_id: int) -> Optional[LaneContext]:
        for context in self.candidate_lanes:
            if context.lane_id == lane_id:
                return context
        return None

    @property
    def current_lane(self) -> LaneContext:
        return self.lane(self.ego_lane)


@dataclass(frozen=True)
class EventWindow:
    """Stretch of route whose crossing time defines travel time"""
    event_id: str
    start_s: float
    end_s: float
    vehicle_ids: Tuple[str, ...] = ()

    def __post_init__(self):
        if not self.end_s > self.start_s:
            raise InputError(f"event {self.event_id}: end_s {self.end_s} must exceed start_s {self.start_s}")

    @property
    def length(self) -> float:
        return self.end_s - self.start_s

    def to_dict(self) -> Dict:
        return {
            "event_id": self.event_id,
            "start_s": self.start_s,
            "end_s": self.end_s,
            "vehicle_ids": list(self.vehicle_ids),
        }

    @classmethod
    def from_dict(cls, data: Dict) -> "EventWindow":
        return cls(
            event_id=str(data["event_id"]),
            start_s=float(data["start_s"]),
            end_s=float(data["end_s"]),
            vehicle_ids=tuple(str(v) for v in data.get("vehicle_ids", [])),
        )


@dataclass(frozen=True)
class RouteMeta:
    """
    Road metadata needed to build scenes.

    adjacency maps a lane to its physically adjacent lanes; lane_blocks marks a
    lane unavailable from the given s onward and lane_opens marks it unavailable
    before the given s; obstacles are static objects (or route-end points) as
    (lane_id, s) pairs.
    """
    speed_limit: float
    adjacency: Dict[int, Tuple[int, ...]]
    lane_blocks: Dict[int, float] = field(default_factory=dict)
    lane_opens: Dict[int, float] = field(default_factory=dict)
    obstacles: Tuple[Tuple[int, float], ...] = ()

    def __post_init__(self):
        if self.speed_limit is None or self.speed_limit <= 0:
            raise ConfigError("speed limit must be positive", key="route_meta.speed_limit")
        if not self.adjacency:
            raise ConfigError("lane adjacency is required", key="route_meta.adjacency")

    def is_blocked(self, lane_id: int, s: float) -> bool:
        block_from = self.lane_blocks.get(lane_id)
        if block_from is not None and s >= block_from:
            return True
        opens_at = self.lane_opens.get(lane_id)
        return opens_at is not None and s < opens_at

    def candidate_lanes(self, ego_lane: int, s: float) -> Tuple[int, ...]:
        """Ego lane plus adjacent lanes that are open at s, at most three"""
        neighbours = sorted(
            lane for lane in self.adjacency.get(ego_lane, ())
            if lane != ego_lane and not self.is_blocked(lane, s)
        )
        return tuple(sorted([ego_lane] + neighbours[: MAX_CANDIDATE_LANES - 1]))

    @property
    def lanes(self) -> Tuple[int, ...]:
        lanes = set(self.adjacency)
        for neighbours in self.adjacency.values():
            lanes.update(neighbours)
        return tuple(sorted(lanes))

    def to_dict(self) -> Dict:
        return {
            "speed_limit": self.speed_limit,
            "adjacency": {str(k): list(v) for k, v in self.adjacency.items()},
            "lane_blocks": {str(k): v for k, v in self.lane_blocks.items()},
            "lane_opens": {str(k): v for k, v in self.lane_opens.items()},
            "obstacles": [[lane, s] for lane, s in self.obstacles],
        }

    @classmethod
    def from_dict(cls, data: Optional[Dict]) -> "RouteMeta":
        if not data:
            raise ConfigError("route metadata is missing", key="route_meta")
        try:
            return cls(
                speed_limit=float(data["speed_limit"]),
                adjacency={int(k): tuple(int(x) for x in v) for k, v in data["adjacency"].items()},
                lane_blocks={int(k): float(v) for k, v in (data.get("lane_blocks") or {}).items()},
                lane_opens={int(k): float(v) for k, v in (data.get("lane_opens") or {}).items()},
                obstacles=tuple((int(lane), float(s)) for lane, s in (data.get("obstacles") or [])),
            )
        except KeyError as e:
            raise ConfigError(f"missing field {e}", key="route_meta") from e


class Route:
    """
    Planar polyline the longitudinal coordinate s is measured along.

    start_s is the arc length assigned to the first point, so a route can
    begin upstream of s = 0 where vehicles spawn.
    """

    __slots__ = ("points", "segment_lengths", "cumulative", "start_s")

    def __init__(self, points: Sequence[Sequence[float]], start_s: float = 0.0):
        points = np.asarray(points, dtype=np.float64)
        if points.ndim != 2 or points.shape[1] != 2 or points.shape[0] < 2:
            raise ConfigError("route needs at least two (x, y) points", key="route.points")
        lengths = np.hypot(*np.diff(points, axis=0).T)
        if np.any(lengths <= 0):
            raise ConfigError("route has repeated consecutive points", key="route.points")
        self.points = points
        self.segment_lengths = lengths
        self.start_s = float(start_s)
        self.cumulative = self.start_s + np.concatenate([[0.0], np.cumsum(lengths)])

    @classmethod
    def from_config(cls, value) -> "Route":
        """A bare point list starts at s = 0; a mapping may set start_s"""
        if isinstance(value, dict):
            if "points" not in value:
                raise ConfigError("route mapping needs points", key="route.points")
            return cls(value["points"], value.get("start_s", 0.0))
        return cls(value)

    @property
    def length(self) -> float:
        return float(self.cumulative[-1] - self.start_s)

    @property
    def end_s(self) -> float:
        return float(self.cumulative[-1])

    def to_dict(self) -> Dict:
        return {"points": self.points.tolist(), "start_s": self.start_s}
