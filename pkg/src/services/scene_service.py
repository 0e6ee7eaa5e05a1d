"""
Scene Service
Builds per-tick scene snapshots around an ego vehicle and measures travel time
"""
import logging
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..models.errors import ConfigError, IncompleteTravelError, ResamplingError
from ..models.metric import SceneConfig
from ..models.trajectory import (
    EventWindow,
    LaneContext,
    RouteMeta,
    SceneSnapshot,
    VehicleTrack,
)

LOG = logging.getLogger(__name__)

# Relative tolerance when deciding whether two time grids coincide
GRID_TOLERANCE = 1e-6


def resample_track(track: VehicleTrack, times: np.ndarray) -> Dict[str, np.ndarray]:
    """
    Linearly interpolate a track onto the given time grid.

    Lane id is carried from the latest sample at or before each tick. Ticks
    outside the track's time span come back as NaN (vehicle absent).

    Returns:
        dict of arrays: s, speed, acceleration, lane_id (float, NaN when absent)
    """
    times = np.asarray(times, dtype=np.float64)
    inside = (times >= track.time[0] - GRID_TOLERANCE) & (times <= track.time[-1] + GRID_TOLERANCE)

    out = {key: np.full(times.size, np.nan) for key in ("s", "speed", "acceleration", "lane_id")}
    if not inside.any():
        return out

    t = times[inside]
    out["s"][inside] = np.interp(t, track.time, track.s)
    out["speed"][inside] = np.interp(t, track.time, track.speed)
    out["acceleration"][inside] = np.interp(t, track.time, track.acceleration)
    idx = np.clip(np.searchsorted(track.time, t + GRID_TOLERANCE, side="right") - 1, 0, len(track) - 1)
    out["lane_id"][inside] = track.lane_id[idx]
    return out


def _on_grid(track: VehicleTrack, times: np.ndarray) -> Optional[np.ndarray]:
    """Positions of the track's samples in times, or None if the grids differ"""
    idx = np.searchsorted(times, track.time - GRID_TOLERANCE)
    if np.any(idx >= times.size):
        return None
    if not np.allclose(times[idx], track.time, rtol=0.0, atol=GRID_TOLERANCE * max(1.0, float(abs(times[-1])))):
        return None
    return idx


def _align(track: VehicleTrack, times: np.ndarray, resample: bool) -> Dict[str, np.ndarray]:
    idx = _on_grid(track, times)
    if idx is not None:
        out = {key: np.full(times.size, np.nan) for key in ("s", "speed", "acceleration", "lane_id")}
        out["s"][idx] = track.s
        out["speed"][idx] = track.speed
        out["acceleration"][idx] = track.acceleration
        out["lane_id"][idx] = track.lane_id
        return out
    if not resample:
        raise ResamplingError(f"track {track.vehicle_id} is not sampled on the ego time grid")
    LOG.debug("Resampling %s onto ego grid", track.vehicle_id)
    return resample_track(track, times)


def _nearest_ahead(
    ego_s: np.ndarray,
    positions: np.ndarray,
    speeds: np.ndarray,
    vehicle_length: float,
    sensing_range: float,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Minimum bumper-to-bumper gap (and the matching speed) over rows strictly ahead.

    positions/speeds are (rows, ticks) with NaN where a row does not apply.
    """
    n = ego_s.size
    if positions.shape[0] == 0:
        return np.full(n, np.inf), np.full(n, np.nan)
    with np.errstate(invalid="ignore"):
        ahead = positions > ego_s[None, :]
        gaps = np.where(ahead, np.maximum(positions - ego_s[None, :] - vehicle_length, 0.0), np.inf)
    gaps = np.where(gaps <= sensing_range, gaps, np.inf)
    best = np.argmin(gaps, axis=0)
    cols = np.arange(n)
    return gaps[best, cols], speeds[best, cols]


def build_snapshots(
    ego: VehicleTrack,
    others: Sequence[VehicleTrack],
    obstacles: Sequence[Tuple[int, float]],
    route_meta: Optional[RouteMeta],
    scene: SceneConfig = SceneConfig(),
    window: Optional[EventWindow] = None,
) -> List[SceneSnapshot]:
    """
    One SceneSnapshot per ego tick (restricted to the event window when given).

    Candidate lanes are the ego lane plus adjacent lanes open at the ego position.
    Per lane the leader is the closest vehicle strictly ahead within sensing range;
    static obstacles are handled the same way.

    Raises:
        ConfigError: route metadata missing
        ResamplingError: a track is off the ego grid and resampling is disabled
    """
    if route_meta is None:
        raise ConfigError("route metadata is required to build scenes", key="route_meta")

    keep = np.ones(len(ego), dtype=bool)
    if window is not None:
        keep = (ego.s >= window.start_s) & (ego.s <= window.end_s)

    times = ego.time[keep]
    ego_s = ego.s[keep]
    ego_v = ego.speed[keep]
    ego_lane = ego.lane_id[keep]
    if times.size == 0:
        return []

    aligned = [_align(track, times, scene.resample) for track in others if track.vehicle_id != ego.vehicle_id]
    if aligned:
        pos = np.vstack([a["s"] for a in aligned])
        spd = np.vstack([a["speed"] for a in aligned])
        lanes = np.vstack([a["lane_id"] for a in aligned])
    else:
        pos = spd = lanes = np.zeros((0, times.size))

    lane_ids = set(route_meta.lanes) | set(int(x) for x in np.unique(ego_lane))
    leader_gap: Dict[int, np.ndarray] = {}
    leader_speed: Dict[int, np.ndarray] = {}
    obstacle_gap: Dict[int, np.ndarray] = {}
    all_obstacles = list(obstacles)
    for lane in sorted(lane_ids):
        in_lane = lanes == lane
        gap, speed = _nearest_ahead(
            ego_s,
            np.where(in_lane, pos, np.nan),
            np.where(in_lane, spd, np.nan),
            scene.vehicle_length,
            scene.sensing_range,
        )
        leader_gap[lane] = gap
        leader_speed[lane] = speed

        lane_obstacles = np.array([s for obs_lane, s in all_obstacles if obs_lane == lane], dtype=np.float64)
        obs_pos = np.repeat(lane_obstacles[:, None], times.size, axis=1)
        obstacle_gap[lane], _ = _nearest_ahead(
            ego_s, obs_pos, np.zeros_like(obs_pos), scene.vehicle_length, scene.sensing_range
        )

    snapshots = []
    limit = route_meta.speed_limit
    for i in range(times.size):
        current = int(ego_lane[i])
        contexts = []
        for lane in route_meta.candidate_lanes(current, float(ego_s[i])):
            gap = leader_gap[lane][i] if lane in leader_gap else np.inf
            obs = obstacle_gap[lane][i] if lane in obstacle_gap else np.inf
            has_leader = np.isfinite(gap)
            contexts.append(LaneContext(
                lane_id=lane,
                leader_speed=float(leader_speed[lane][i]) if has_leader else None,
                leader_gap=float(gap) if has_leader else None,
                static_obstacle_gap=float(obs) if np.isfinite(obs) else None,
            ))
        snapshots.append(SceneSnapshot(
            time=float(times[i]),
            ego_speed=float(ego_v[i]),
            ego_lane=current,
            candidate_lanes=tuple(contexts),
            speed_limit=limit,
            ego_s=float(ego_s[i]),
        ))
    return snapshots


def _crossing_time(track: VehicleTrack, s_mark: float, label: str) -> float:
    reached = track.s >= s_mark
    if not reached.any():
        raise IncompleteTravelError(track.vehicle_id, f"never reaches {label} s={s_mark:.2f}")
    i = int(np.argmax(reached))
    if i == 0:
        if track.s[0] == s_mark:
            return float(track.time[0])
        raise IncompleteTravelError(track.vehicle_id, f"starts past {label} s={s_mark:.2f}")
    s0, s1 = track.s[i - 1], track.s[i]
    t0, t1 = track.time[i - 1], track.time[i]
    return float(t0 + (s_mark - s0) / (s1 - s0) * (t1 - t0))


def travel_time(track: VehicleTrack, window: EventWindow) -> float:
    """
    Time between crossing window.start_s and window.end_s, linearly interpolated

    Raises:
        IncompleteTravelError: the track does not cover the window
    """
    t_start = _crossing_time(track, window.start_s, "window start")
    t_end = _crossing_time(track, window.end_s, "window end")
    return t_end - t_start
