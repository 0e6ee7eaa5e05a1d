"""
PASS Service
Available acceleration space, utilization scaling and the instantaneous/aggregated metric
"""
import logging
from typing import Sequence, Union

import numpy as np

from ..models.errors import InputError, PipelineWarning
from ..models.metric import PassConfig, PassSeries
from ..models.trajectory import SceneSnapshot
from .maneuver_service import v_proj_multi

LOG = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]


def available_space(v_proj: ArrayLike, v0: ArrayLike) -> ArrayLike:
    """A_t = v_proj - v0; positive means untapped speed potential"""
    return v_proj - v0


def utilization(a_t: float, a_prev: float, config: PassConfig) -> float:
    """Scaled change of A: k1 when the current A is <= 0, k2 otherwise"""
    delta = a_t - a_prev
    return (config.k1 if a_t <= 0 else config.k2) * delta


def scale_delta(available: np.ndarray, delta: np.ndarray, k1: float, k2: float) -> np.ndarray:
    """Vectorized utilization over whole series"""
    return np.where(available <= 0, k1, k2) * delta


def pass_instant(available: ArrayLike, delta_scaled: ArrayLike) -> ArrayLike:
    return available * (np.tanh(delta_scaled) + 1.0)


def series_delta(available: np.ndarray) -> np.ndarray:
    """Tick-to-tick change of A with the first tick fixed at zero"""
    available = np.asarray(available, dtype=np.float64)
    if available.size == 0:
        return np.zeros(0)
    return np.diff(available, prepend=available[0])


def aggregate_pass(available: np.ndarray, delta: np.ndarray, k1: float, k2: float) -> float:
    """
    Time-aggregated PASS from cached A and dA.

    Only the scaling depends on (k1, k2), so calibration reuses one evaluation per vehicle.
    """
    if available.size == 0:
        raise InputError("cannot aggregate an empty series")
    return float(np.mean(pass_instant(available, scale_delta(available, delta, k1, k2))))


def evaluate_series(
    snapshots: Sequence[SceneSnapshot],
    config: PassConfig,
    vehicle_id: str = "ego",
) -> PassSeries:
    """
    Run the per-tick pipeline over a time-ordered snapshot list.

    Raises:
        InputError: empty snapshot list
    """
    if not snapshots:
        raise InputError(f"{vehicle_id}: no snapshots to evaluate")

    choices = [v_proj_multi(snapshot, config) for snapshot in snapshots]
    v0 = np.array([s.ego_speed for s in snapshots], dtype=np.float64)
    v_proj = np.array([c.v_proj for c in choices], dtype=np.float64)
    available = available_space(v_proj, v0)
    delta = series_delta(available)
    delta_scaled = scale_delta(available, delta, config.k1, config.k2)

    warnings = []
    speeding = sum(1 for c in choices if c.speeding)
    if speeding:
        LOG.warning("⚠️ %s exceeds the speed limit on %d ticks", vehicle_id, speeding)
        warnings.append(PipelineWarning(
            source=vehicle_id,
            message=f"ego speed above the limit on {speeding} of {len(choices)} ticks",
        ))

    return PassSeries(
        vehicle_id=vehicle_id,
        time=np.array([s.time for s in snapshots], dtype=np.float64),
        lane_id=np.array([s.ego_lane for s in snapshots], dtype=np.int64),
        v0=v0,
        v_proj=v_proj,
        chosen_lane=np.array([c.chosen_lane for c in choices], dtype=np.int64),
        available_space=available,
        delta=delta,
        delta_scaled=delta_scaled,
        pass_values=pass_instant(available, delta_scaled),
        warnings=warnings,
    )
