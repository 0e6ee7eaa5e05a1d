"""
Maneuver Service
Idealized catch-up kinematics and multi-lane projected attainable speed
"""
import logging
import math
from typing import List, Tuple

from ..models.errors import InputError
from ..models.metric import LaneChoice, ManeuverPhase, ManeuverResult, PassConfig
from ..models.trajectory import LaneContext, SceneSnapshot

LOG = logging.getLogger(__name__)


def free_lane_maneuver(v0: float, config: PassConfig, v_limit: float) -> ManeuverResult:
    """
    Accelerate to the limit with nothing ahead.

    Standalone v_proj averages over max(T, free_lane_horizon) with cruising
    at the limit after the acceleration phase.
    """
    if v0 < 0:
        raise InputError(f"negative ego speed {v0}")
    speeding = v0 > v_limit
    duration = max(v_limit - v0, 0.0) / config.a1
    distance = (v_limit ** 2 - v0 ** 2) / (2.0 * config.a1) if v0 < v_limit else 0.0
    horizon = max(duration, config.free_lane_horizon)
    v_proj = (distance + v_limit * (horizon - duration)) / horizon
    return ManeuverResult(
        duration=duration,
        distance=distance,
        v_proj=v_proj,
        phase_tag=ManeuverPhase.FREE_LANE,
        v_post=v_limit,
        peak_speed=max(v0, v_limit),
        decel_used=config.a2,
        speeding=speeding,
    )


def _closing_time(v0: float, v_lead: float, d: float, a1: float, a2: float, v_limit: float) -> Tuple[float, float, ManeuverPhase]:
    """Duration and peak speed of the accelerate-then-decelerate catch-up"""
    u_peak = math.sqrt(a2 / (a2 - a1) * (2.0 * a1 * d + (v_lead - v0) ** 2))
    peak = v_lead + u_peak
    if peak <= v_limit:
        duration = ((a2 - a1) * u_peak - a2 * (v0 - v_lead)) / (a1 * a2)
        return duration, peak, ManeuverPhase.TWO_PHASE

    # accelerate to the limit, cruise, decelerate to the leader speed
    rel_limit = v_limit - v_lead
    t_accel = (v_limit - v0) / a1
    r_accel = (rel_limit ** 2 - (v0 - v_lead) ** 2) / (2.0 * a1)
    t_decel = rel_limit / -a2
    r_decel = rel_limit ** 2 / (2.0 * -a2)
    t_cruise = (d - r_accel - r_decel) / rel_limit
    return t_accel + t_cruise + t_decel, v_limit, ManeuverPhase.LIMIT_CAPPED


def catch_up_maneuver(
    v0: float,
    v_lead: float,
    d: float,
    config: PassConfig,
    v_limit: float,
) -> ManeuverResult:
    """
    Close a gap d to a leader at constant speed v_lead and end matching its speed.

    Branches:
        degenerate   already at the leader with matched speed, T = 0
        decel-only   braking at a2 overshoots, so brake at exactly the rate that
                     closes the gap: v_proj = (v0 + v_lead) / 2
        two-phase    accelerate at a1 then decelerate at a2
        limit-capped the two-phase peak would exceed v_limit, cruise at the limit
    A leader at or above the limit that cannot be caught is treated as a free lane.

    Raises:
        InputError: negative gap or speed
    """
    if d < 0:
        raise InputError(f"negative gap {d}")
    if v0 < 0 or v_lead < 0:
        raise InputError(f"negative speed v0={v0} v_lead={v_lead}")

    speeding = v0 > v_limit
    if speeding and config.clamp_speeding:
        v0 = v_limit
    a1, a2 = config.a1, config.a2
    closing = v0 - v_lead

    if d <= config.gap_epsilon and abs(closing) <= config.speed_epsilon:
        return ManeuverResult(
            duration=0.0, distance=d, v_proj=v_lead, phase_tag=ManeuverPhase.DEGENERATE,
            v_post=v_lead, peak_speed=max(v0, v_lead), decel_used=a2, speeding=speeding,
        )

    if closing > 0 and closing ** 2 / (2.0 * -a2) >= d:
        duration = 2.0 * d / closing
        decel = -closing ** 2 / (2.0 * d) if d > 0 else -math.inf
        return ManeuverResult(
            duration=duration, distance=d + v_lead * duration, v_proj=0.5 * (v0 + v_lead),
            phase_tag=ManeuverPhase.DECEL_ONLY, v_post=v_lead, peak_speed=v0,
            decel_used=decel, speeding=speeding,
        )

    if v_lead >= v_limit - config.speed_epsilon:
        result = free_lane_maneuver(v0, config, v_limit)
        LOG.debug("Leader at %.2f m/s cannot be caught below the limit, free lane used", v_lead)
        return result

    duration, peak, phase = _closing_time(v0, v_lead, d, a1, a2, v_limit)
    if duration <= 0 and speeding:
        # speeding ego far above the limit, evaluate from the limit instead
        duration, peak, phase = _closing_time(v_limit, v_lead, d, a1, a2, v_limit)
    if duration <= 0:
        raise InputError(f"non-positive maneuver duration for v0={v0} v_lead={v_lead} d={d}")

    return ManeuverResult(
        duration=duration,
        distance=d + v_lead * duration,
        v_proj=v_lead + d / duration,
        phase_tag=phase,
        v_post=v_lead,
        peak_speed=max(peak, v0),
        decel_used=a2,
        speeding=speeding,
    )


def lane_maneuver(lane: LaneContext, v0: float, config: PassConfig, v_limit: float) -> ManeuverResult:
    """Binding maneuver in one lane: the smaller v_proj of leader and obstacle constraints"""
    results: List[ManeuverResult] = []
    if lane.has_leader:
        results.append(catch_up_maneuver(v0, lane.leader_speed, lane.leader_gap, config, v_limit))
    if lane.has_obstacle:
        results.append(catch_up_maneuver(v0, 0.0, lane.static_obstacle_gap, config, v_limit))
    if not results:
        return free_lane_maneuver(v0, config, v_limit)
    return min(results, key=lambda r: r.v_proj)


def v_proj_multi(snapshot: SceneSnapshot, config: PassConfig) -> LaneChoice:
    """
    Projected attainable speed over all candidate lanes.

    Every lane is projected to the common horizon T_max = max_i T_i, cruising at
    its post-maneuver speed after its own maneuver ends. A single candidate lane
    reduces to that lane's standalone v_proj. Ties go to the ego lane, then to
    the lowest lane id.
    """
    lanes = snapshot.candidate_lanes
    if not lanes:
        raise InputError(f"snapshot at t={snapshot.time} has no candidate lanes")

    maneuvers = [
        (lane.lane_id, lane_maneuver(lane, snapshot.ego_speed, config, snapshot.speed_limit))
        for lane in lanes
    ]
    speeding = any(m.speeding for _, m in maneuvers)

    if len(maneuvers) == 1:
        lane_id, m = maneuvers[0]
        return LaneChoice(
            v_proj=m.v_proj, per_lane=((lane_id, m.v_proj),), chosen_lane=lane_id,
            horizon=m.duration, speeding=speeding,
        )

    horizon = max(m.duration for _, m in maneuvers)
    if horizon <= 0:
        per_lane = tuple((lane_id, m.v_post) for lane_id, m in maneuvers)
    else:
        per_lane = tuple(
            (lane_id, (m.distance + m.v_post * (horizon - m.duration)) / horizon)
            for lane_id, m in maneuvers
        )

    best = max(v for _, v in per_lane)
    tied = [lane_id for lane_id, v in per_lane if v == best]
    chosen = snapshot.ego_lane if snapshot.ego_lane in tied else min(tied)
    return LaneChoice(v_proj=best, per_lane=per_lane, chosen_lane=chosen, horizon=horizon, speeding=speeding)
