"""
IDM Service
Intelligent Driver Model acceleration and the sinusoidal platoon-leader profile
"""
import logging
import math
from typing import Optional

import numpy as np

from ..models.errors import CollisionError
from ..models.scenario import IdmParams, LeadProfile

LOG = logging.getLogger(__name__)

DEFAULT_DECEL_FLOOR = -8.0


def idm_accel(
    v: float,
    gap: Optional[float],
    dv: float,
    params: IdmParams,
    floor: float = DEFAULT_DECEL_FLOOR,
) -> float:
    """
    IDM acceleration a = a_max * [1 - (v/v_des)^delta - (s*/gap)^2],
    s* = s0 + v*T + v*dv / (2*sqrt(a_max*b)), bounded below by floor.

    Args:
        v: own speed (m/s)
        gap: bumper-to-bumper gap to the leader (m); None for a free road
        dv: approach rate v - v_leader (m/s)

    Raises:
        CollisionError: gap <= 0
    """
    free = 1.0 - (v / params.desired_speed) ** params.delta
    if gap is None or math.isinf(gap):
        return max(params.max_accel * free, floor)
    if gap <= 0:
        raise CollisionError(time=math.nan, follower="follower", leader="leader", gap=gap)
    s_star = params.min_gap + max(
        v * params.time_headway + v * dv / (2.0 * math.sqrt(params.max_accel * params.comfortable_decel)),
        0.0,
    )
    return max(params.max_accel * (free - (s_star / gap) ** 2), floor)


def idm_accel_array(
    v: np.ndarray,
    gap: np.ndarray,
    dv: np.ndarray,
    desired_speed: np.ndarray,
    time_headway: np.ndarray,
    params: IdmParams,
    floor: float = DEFAULT_DECEL_FLOOR,
) -> np.ndarray:
    """Vectorized idm_accel for a whole platoon; inf gaps mean no leader"""
    free = 1.0 - (v / desired_speed) ** params.delta
    s_star = params.min_gap + np.maximum(
        v * time_headway + v * dv / (2.0 * math.sqrt(params.max_accel * params.comfortable_decel)),
        0.0,
    )
    with np.errstate(divide="ignore"):
        interaction = np.where(np.isinf(gap), 0.0, (s_star / gap) ** 2)
    return np.maximum(params.max_accel * (free - interaction), floor)


def lead_speed(t: float, profile: LeadProfile) -> float:
    """base + amplitude * sin(2 pi t / period)"""
    return profile.base_speed + profile.amplitude * math.sin(2.0 * math.pi * t / profile.period)
