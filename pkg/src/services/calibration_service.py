"""
Calibration Service
Rank correlation against travel time, the composite event loss and the (k1, k2) grid search
"""
import logging
from typing import Callable, List, Optional, Sequence

import numpy as np
from scipy.stats import rankdata

from ..models.calibration import (
    CalibrationEvent,
    CalibrationResult,
    EventEvaluation,
    GridSpec,
    VehicleSeries,
)
from ..models.errors import CalibrationError, InputError, PipelineWarning, UndefinedCorrelationError
from .baseline_service import baseline_aggregate
from .pass_service import aggregate_pass

LOG = logging.getLogger(__name__)

R2_TARGET = 0.8
NEGATIVE_PENALTY = 10.0
SHORTFALL_PENALTY = 10.0


def rank_with_ties(values: Sequence[float]) -> np.ndarray:
    """Ascending average ranks, ties share the mean of their positions"""
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        raise InputError("cannot rank an empty vector")
    return rankdata(values, method="average")


def _pearson(x: np.ndarray, y: np.ndarray) -> Optional[float]:
    x = x - x.mean()
    y = y - y.mean()
    denom = np.sqrt(np.sum(x * x) * np.sum(y * y))
    if not np.isfinite(denom) or denom <= 0:
        return None
    return float(np.clip(np.sum(x * y) / denom, -1.0, 1.0))


def spearman(x: Sequence[float], y: Sequence[float]) -> float:
    """
    Pearson correlation of average ranks

    Raises:
        InputError: lengths differ or fewer than two values
        UndefinedCorrelationError: either vector is constant
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.size != y.size or x.size < 2:
        raise InputError(f"spearman needs two equal-length vectors of size >= 2, got {x.size} and {y.size}")
    r = _pearson(rank_with_ties(x), rank_with_ties(y))
    if r is None:
        raise UndefinedCorrelationError("rank correlation of a constant vector is undefined")
    return r


def event_loss(r: float) -> float:
    """(1 - r^2) + 10|r| if r < 0 + 10 (0.8 - r^2)^2 if r^2 < 0.8"""
    r2 = r * r
    loss = 1.0 - r2
    if r < 0:
        loss += NEGATIVE_PENALTY * abs(r)
    if r2 < R2_TARGET:
        loss += SHORTFALL_PENALTY * (R2_TARGET - r2) ** 2
    return loss


# Loss of an event whose correlation is undefined, the same as r = 0
UNDEFINED_LOSS = event_loss(0.0)


def _event_loss_array(r: np.ndarray) -> np.ndarray:
    r2 = r * r
    return (
        (1.0 - r2)
        + np.where(r < 0, NEGATIVE_PENALTY * np.abs(r), 0.0)
        + np.where(r2 < R2_TARGET, SHORTFALL_PENALTY * (R2_TARGET - r2) ** 2, 0.0)
    )


def _usable(event: CalibrationEvent, warnings: Optional[List[PipelineWarning]]) -> bool:
    if len(event.vehicles) < 2:
        if warnings is not None:
            warnings.append(PipelineWarning(
                source=event.event_id,
                message=f"excluded: {len(event.vehicles)} completed vehicle(s), need at least 2",
            ))
        return False
    travel = np.array([v.travel_time for v in event.vehicles])
    if np.all(travel == travel[0]):
        if warnings is not None:
            warnings.append(PipelineWarning(source=event.event_id, message="excluded: constant travel times"))
        return False
    return True


def evaluate_event(
    event: CalibrationEvent,
    metric: Callable[[VehicleSeries], float],
) -> EventEvaluation:
    """
    Spearman r between a per-vehicle aggregate metric and travel time

    Raises:
        UndefinedCorrelationError: constant metric or travel times
    """
    values = np.array([metric(v) for v in event.vehicles], dtype=np.float64)
    travel = np.array([v.travel_time for v in event.vehicles], dtype=np.float64)
    r = spearman(values, travel)
    return EventEvaluation(
        event_id=event.event_id,
        vehicle_ids=[v.vehicle_id for v in event.vehicles],
        metric_values=values,
        travel_times=travel,
        r=r,
        metric_ranks=rank_with_ties(values),
        travel_time_ranks=rank_with_ties(travel),
    )


def pass_metric(k1: float, k2: float) -> Callable[[VehicleSeries], float]:
    return lambda v: aggregate_pass(v.available_space, v.delta, k1, k2)


def baseline_metric(vehicle: VehicleSeries) -> float:
    if vehicle.baseline is None:
        raise InputError(f"{vehicle.vehicle_id}: no baseline series")
    return baseline_aggregate(vehicle.baseline)


def evaluate_events(
    dataset: Sequence[CalibrationEvent],
    metric: Callable[[VehicleSeries], float],
    warnings: Optional[List[PipelineWarning]] = None,
) -> List[EventEvaluation]:
    """Evaluate every usable event; undefined correlations are skipped with a warning"""
    evaluations = []
    for event in dataset:
        if not _usable(event, warnings):
            continue
        try:
            evaluations.append(evaluate_event(event, metric))
        except UndefinedCorrelationError as e:
            LOG.warning("⚠️ Event %s excluded: %s", event.event_id, e)
            if warnings is not None:
                warnings.append(PipelineWarning(source=event.event_id, message=f"excluded: {e}"))
    return evaluations


def total_loss(
    k1: float,
    k2: float,
    dataset: Sequence[CalibrationEvent],
    warnings: Optional[List[PipelineWarning]] = None,
) -> float:
    """Sum of event losses with PASS rescaled by (k1, k2) from cached A and dA"""
    if not k1 < 0 < k2:
        raise InputError(f"require k1 < 0 < k2, got k1={k1}, k2={k2}")
    usable = [event for event in dataset if _usable(event, warnings)]
    evaluations = evaluate_events(usable, pass_metric(k1, k2), warnings)
    undefined = len(usable) - len(evaluations)
    return float(sum(event_loss(e.r) for e in evaluations) + undefined * UNDEFINED_LOSS)


def _sweep_terms(vehicle: VehicleSeries, k1s: np.ndarray, k2s: np.ndarray):
    """
    Aggregate PASS over the whole grid from two one-dimensional sweeps.

    mean(A (tanh(k dA) + 1)) = [sum A + sum_{A<=0} A tanh(k1 dA) + sum_{A>0} A tanh(k2 dA)] / N
    """
    a, d = vehicle.available_space, vehicle.delta
    low = a <= 0
    f1 = np.tanh(np.outer(k1s, d[low])) @ a[low]
    f2 = np.tanh(np.outer(k2s, d[~low])) @ a[~low]
    return (a.sum() + f1[:, None] + f2[None, :]) / a.size


def _event_surface(event: CalibrationEvent, k1s: np.ndarray, k2s: np.ndarray):
    """Per-grid-point r for one event; NaN where the aggregate metric is constant"""
    aggregates = np.stack([_sweep_terms(v, k1s, k2s) for v in event.vehicles])
    ranks = rankdata(aggregates, method="average", axis=0)
    travel = rank_with_ties([v.travel_time for v in event.vehicles])

    tc = travel - travel.mean()
    rc = ranks - ranks.mean(axis=0)
    num = np.tensordot(tc, rc, axes=(0, 0))
    den = np.sqrt(np.sum(rc * rc, axis=0) * np.sum(tc * tc))
    with np.errstate(invalid="ignore", divide="ignore"):
        r = np.where(den > 0, num / den, np.nan)
    return np.clip(r, -1.0, 1.0)


def _argmin_tiebreak(loss: np.ndarray, k1s: np.ndarray, k2s: np.ndarray):
    """Index of the minimum, ties to smallest |k1| then smallest k2"""
    k1_grid, k2_grid = np.meshgrid(k1s, k2s, indexing="ij")
    flat_loss = loss.ravel()
    order = np.lexsort((k2_grid.ravel(), np.abs(k1_grid.ravel())))
    best = flat_loss.min()
    for idx in order:
        if flat_loss[idx] == best:
            return np.unravel_index(idx, loss.shape)
    raise CalibrationError("loss surface has no finite minimum")


def grid_search(dataset: Sequence[CalibrationEvent], grid: GridSpec = GridSpec()) -> CalibrationResult:
    """
    Exhaustive search of (k1, k2) minimizing the summed event loss.

    Raises:
        CalibrationError: no event has at least two completed vehicles with varying travel time
    """
    warnings: List[PipelineWarning] = []
    usable = [event for event in dataset if _usable(event, warnings)]
    if not usable:
        raise CalibrationError("no usable events for calibration")

    k1s, k2s = grid.k1_values, grid.k2_values
    LOG.info("📊 Grid search over %d x %d points, %d events", k1s.size, k2s.size, len(usable))
    loss = np.zeros((k1s.size, k2s.size))
    for event in usable:
        r = _event_surface(event, k1s, k2s)
        undefined = np.isnan(r)
        if undefined.any():
            warnings.append(PipelineWarning(
                source=event.event_id,
                message=f"excluded at {int(undefined.sum())} grid points: constant aggregate metric",
            ))
        loss += np.where(undefined, UNDEFINED_LOSS, _event_loss_array(np.nan_to_num(r)))

    i, j = _argmin_tiebreak(loss, k1s, k2s)
    best_k1, best_k2 = float(k1s[i]), float(k2s[j])
    per_event = evaluate_events(usable, pass_metric(best_k1, best_k2))

    k1_grid, k2_grid = np.meshgrid(k1s, k2s, indexing="ij")
    surface = np.column_stack([k1_grid.ravel(), k2_grid.ravel(), loss.ravel()])
    LOG.info("✅ Best k1=%.2f k2=%.2f loss=%.6f", best_k1, best_k2, loss[i, j])
    return CalibrationResult(
        best_k1=best_k1,
        best_k2=best_k2,
        loss=float(loss[i, j]),
        grid=surface,
        per_event=per_event,
        warnings=warnings,
    )
