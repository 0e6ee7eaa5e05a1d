"""
Calibration data model: cached per-vehicle series, event evaluations and grid results
"""
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from .errors import ConfigError, PipelineWarning


@dataclass(frozen=True)
class GridSpec:
    """Exhaustive (k1, k2) grid; boundary zeros are excluded to keep k1 < 0 < k2"""
    k1_range: Tuple[float, float] = (-1.0, 0.0)
    k2_range: Tuple[float, float] = (0.0, 1.0)
    step: float = 0.01

    def __post_init__(self):
        if not self.step > 0:
            raise ConfigError(f"must be > 0, got {self.step}", key="grid.step")
        lo, hi = self.k1_range
        if not (lo < hi and lo < 0 and hi <= 0):
            raise ConfigError(f"k1 range must lie in [-inf, 0] with lo < hi, got {self.k1_range}", key="grid.k1_range")
        lo, hi = self.k2_range
        if not (lo < hi and lo >= 0 and hi > 0):
            raise ConfigError(f"k2 range must lie in [0, inf] with lo < hi, got {self.k2_range}", key="grid.k2_range")

    def _axis(self, lo: float, hi: float) -> np.ndarray:
        first = int(round(lo / self.step))
        last = int(round(hi / self.step))
        return np.round(np.arange(first, last + 1) * self.step, 12)

    @property
    def k1_values(self) -> np.ndarray:
        values = self._axis(*self.k1_range)
        return values[values < 0]

    @property
    def k2_values(self) -> np.ndarray:
        values = self._axis(*self.k2_range)
        return values[values > 0]

    @property
    def size(self) -> int:
        return int(self.k1_values.size * self.k2_values.size)


@dataclass
class VehicleSeries:
    """(k1, k2)-independent per-tick quantities of one completed run"""
    vehicle_id: str
    available_space: np.ndarray
    delta: np.ndarray
    travel_time: float
    baseline: Optional[np.ndarray] = None

    def __post_init__(self):
        self.available_space = np.asarray(self.available_space, dtype=np.float64)
        self.delta = np.asarray(self.delta, dtype=np.float64)
        if self.available_space.size != self.delta.size:
            raise ValueError(f"{self.vehicle_id}: A and dA lengths differ")


@dataclass
class CalibrationEvent:
    event_id: str
    vehicles: List[VehicleSeries] = field(default_factory=list)


@dataclass
class EventEvaluation:
    """Per-event rank consistency between an aggregate metric and travel time"""
    event_id: str
    vehicle_ids: List[str]
    metric_values: np.ndarray
    travel_times: np.ndarray
    r: float
    metric_ranks: Optional[np.ndarray] = None
    travel_time_ranks: Optional[np.ndarray] = None

    @property
    def r2(self) -> float:
        return self.r ** 2

    def to_dict(self) -> Dict:
        return {
            "event_id": self.event_id,
            "n": len(self.vehicle_ids),
            "r": self.r,
            "r2": self.r2,
        }


@dataclass
class CalibrationResult:
    best_k1: float
    best_k2: float
    loss: float
    grid: np.ndarray
    per_event: List[EventEvaluation]
    warnings: List[PipelineWarning] = field(default_factory=list)

    @property
    def mean_r2(self) -> float:
        return mean_r2(self.per_event)

    def to_dict(self) -> Dict:
        return {
            "best_k1": self.best_k1,
            "best_k2": self.best_k2,
            "loss": self.loss,
            "mean_r2": _finite_or_none(self.mean_r2),
            "grid_points": int(self.grid.shape[0]),
            "events": [e.to_dict() for e in self.per_event],
            "warnings": [w.to_dict() for w in self.warnings],
        }


def _finite_or_none(value: float) -> Optional[float]:
    return float(value) if np.isfinite(value) else None


def mean_r2(evaluations: List[EventEvaluation]) -> float:
    """Mean rank-R2 across events, NaN when no event is usable"""
    if not evaluations:
        return float("nan")
    return float(np.mean([e.r2 for e in evaluations]))


@dataclass
class EvaluationReport:
    """
    PASS and baseline evaluated side by side on the same events.

    Either list may miss an event the other has, when one metric is constant
    within that event.
    """
    k1: float
    k2: float
    pass_events: List[EventEvaluation]
    baseline_events: List[EventEvaluation]
    warnings: List[PipelineWarning] = field(default_factory=list)

    @property
    def pass_mean_r2(self) -> float:
        return mean_r2(self.pass_events)

    @property
    def baseline_mean_r2(self) -> float:
        return mean_r2(self.baseline_events)

    def vehicle_rows(self) -> List[Dict]:
        """One row per (event, vehicle) with both aggregates, travel time and ranks"""
        baseline = {e.event_id: e for e in self.baseline_events}
        rows = []
        for event in self.pass_events:
            other = baseline.get(event.event_id)
            for i, vehicle_id in enumerate(event.vehicle_ids):
                rows.append({
                    "event_id": event.event_id,
                    "vehicle_id": vehicle_id,
                    "travel_time": float(event.travel_times[i]),
                    "travel_time_rank": float(event.travel_time_ranks[i]),
                    "pass": float(event.metric_values[i]),
                    "pass_rank": float(event.metric_ranks[i]),
                    "baseline": float(other.metric_values[i]) if other else None,
                    "baseline_rank": float(other.metric_ranks[i]) if other else None,
                })
        return rows

    def to_dict(self) -> Dict:
        baseline = {e.event_id: e for e in self.baseline_events}
        events = []
        for event in self.pass_events:
            other = baseline.get(event.event_id)
            events.append({
                "event_id": event.event_id,
                "n": len(event.vehicle_ids),
                "pass_r": event.r,
                "pass_r2": event.r2,
                "baseline_r": other.r if other else None,
                "baseline_r2": other.r2 if other else None,
            })
        return {
            "k1": self.k1,
            "k2": self.k2,
            "pass_mean_r2": _finite_or_none(self.pass_mean_r2),
            "baseline_mean_r2": _finite_or_none(self.baseline_mean_r2),
            "events": events,
            "warnings": [w.to_dict() for w in self.warnings],
        }
