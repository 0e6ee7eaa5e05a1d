"""
Baseline Service
Current-lane reference inefficiency scores in [0, 1]
"""
import logging
import math
from typing import Dict, Protocol, Sequence, Type

import numpy as np

from ..models.errors import ConfigError, InputError
from ..models.metric import BaselineConfig
from ..models.trajectory import SceneSnapshot

LOG = logging.getLogger(__name__)


def _clamp01(value: float) -> float:
    return min(max(value, 0.0), 1.0)


class BaselineMetric(Protocol):
    """Instantaneous score from the ego's current lane only; higher is less efficient"""
    name: str

    def instant(self, snapshot: SceneSnapshot) -> float:
        ...


class GapDecayBaseline:
    """
    Relative speed deficit of the constraint ahead, decayed with spacing:
    b = clamp((v_limit - v_eff) / v_limit) * exp(-d / d_ref)
    """
    name = "gap-decay"

    def __init__(self, config: BaselineConfig):
        self.d_ref = config.d_ref

    def instant(self, snapshot: SceneSnapshot) -> float:
        lane = snapshot.current_lane
        constraints = []
        if lane.has_leader:
            constraints.append((lane.leader_speed, lane.leader_gap))
        if lane.has_obstacle:
            constraints.append((0.0, lane.static_obstacle_gap))
        if not constraints:
            return 0.0
        limit = snapshot.speed_limit
        return max(
            _clamp01((limit - v_eff) / limit) * math.exp(-gap / self.d_ref)
            for v_eff, gap in constraints
        )


class SpeedRatioBaseline:
    """Plain instantaneous-speed indicator 1 - v0 / v_limit"""
    name = "speed-ratio"

    def __init__(self, config: BaselineConfig):
        pass

    def instant(self, snapshot: SceneSnapshot) -> float:
        return _clamp01(1.0 - snapshot.ego_speed / snapshot.speed_limit)


BASELINES: Dict[str, Type] = {
    GapDecayBaseline.name: GapDecayBaseline,
    SpeedRatioBaseline.name: SpeedRatioBaseline,
}


def make_baseline(config: BaselineConfig) -> BaselineMetric:
    try:
        return BASELINES[config.kind](config)
    except KeyError:
        raise ConfigError(
            f"unknown baseline {config.kind!r}, expected one of {sorted(BASELINES)}", key="baseline.kind"
        ) from None


def baseline_instant(snapshot: SceneSnapshot, config: BaselineConfig = BaselineConfig()) -> float:
    return make_baseline(config).instant(snapshot)


def baseline_series(snapshots: Sequence[SceneSnapshot], config: BaselineConfig = BaselineConfig()) -> np.ndarray:
    metric = make_baseline(config)
    return np.array([metric.instant(s) for s in snapshots], dtype=np.float64)


def baseline_aggregate(values: Sequence[float]) -> float:
    """Arithmetic mean over the event ticks"""
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        raise InputError("cannot aggregate an empty baseline series")
    return float(np.mean(values))
