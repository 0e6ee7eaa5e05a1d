"""
Report Service
Manifest, evaluation, comparison and summary documents built from pipeline results
"""
import logging
import os
from typing import Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from ..config import settings
from ..models.calibration import (
    CalibrationEvent,
    CalibrationResult,
    EvaluationReport,
    VehicleSeries,
)
from ..models.errors import InputError, PipelineWarning, SchemaError
from ..models.trajectory import EventWindow, Route, RouteMeta
from .calibration_service import baseline_metric, evaluate_events, pass_metric
from .dataset_service import read_json, read_metric_csv

LOG = logging.getLogger(__name__)

TRAJECTORY_DIR = "trajectories"
METRIC_DIR = "metrics"
EVALUATION_JSON = "evaluation.json"
EVALUATION_CSV = "evaluation.csv"
CALIBRATION_JSON = "calibration.json"
GRID_CSV = "grid.csv"
COMPARISON_JSON = "comparison.json"
SCATTER_CSV = "scatter.csv"
SUMMARY_TXT = "summary.txt"
SUMMARY_JSON = "summary.json"

EVALUATION_COLUMNS = ["event_id", "vehicle_id", "travel_time", "travel_time_rank",
                      "pass", "pass_rank", "baseline", "baseline_rank"]
SCATTER_COLUMNS = ["event_id", "vehicle_id", "metric", "value", "rank", "travel_time", "travel_time_rank"]

# Values reported for the human-subject cohort the metric was first calibrated on.
# Annotation only: never presented as output of this pipeline.
REFERENCE_ANNOTATIONS = {
    "pass_mean_r2": 0.913,
    "baseline_mean_r2": 0.269,
    "k1": -0.417,
    "k2": 0.700,
    "note": "original data, not reproduced",
}


def trajectory_path(root: str, event_id: str, policy_id: str) -> str:
    return os.path.join(root, TRAJECTORY_DIR, event_id, f"{policy_id}.csv")


def metric_path(root: str, event_id: str, vehicle_id: str) -> str:
    return os.path.join(root, METRIC_DIR, event_id, f"{vehicle_id}.csv")


def build_manifest(
    name: str,
    cohorts: Sequence,
    coordinates: str,
    dt: float,
    route: Optional[Route] = None,
    policies: Sequence = (),
) -> Dict:
    """
    Event manifest: event id -> window, route metadata, seed, runs and their files.

    File paths are relative to the dataset directory.
    """
    events = []
    warnings: List[PipelineWarning] = []
    for cohort in cohorts:
        spec = cohort.spec
        warnings.extend(cohort.warnings)
        events.append({
            "event_id": spec.event_id,
            "kind": spec.kind.value,
            "label": spec.kind.label,
            "seed": cohort.seed,
            "window": cohort.window.to_dict(),
            "route_meta": spec.route_meta.to_dict(),
            "scenario": spec.to_dict(),
            "runs": [
                {
                    "policy_id": run.policy_id,
                    "ego_id": run.ego_id,
                    "file": f"{TRAJECTORY_DIR}/{spec.event_id}/{run.policy_id}.csv",
                    "completed": run.completed,
                    "merge_time": run.merge_time,
                }
                for run in cohort.runs
            ],
        })
    return {
        "name": name,
        "coordinates": coordinates,
        "dt": dt,
        "route": route.to_dict() if route is not None else None,
        "policies": [p.to_dict() for p in policies],
        "events": events,
        "warnings": [w.to_dict() for w in warnings],
    }


def manifest_event(entry: Dict):
    """(window, route_meta) of one manifest event entry"""
    try:
        return EventWindow.from_dict(entry["window"]), RouteMeta.from_dict(entry.get("route_meta"))
    except KeyError as e:
        raise SchemaError(f"manifest event lacks {e}") from e


def evaluation_report(
    dataset: Sequence[CalibrationEvent],
    k1: float,
    k2: float,
    warnings: Optional[List[PipelineWarning]] = None,
) -> EvaluationReport:
    """Rank both metrics against travel time on the same events"""
    warnings = [] if warnings is None else warnings
    pass_events = evaluate_events(dataset, pass_metric(k1, k2), warnings)
    # exclusions for too few vehicles were already recorded above
    baseline_events = evaluate_events(dataset, baseline_metric, [])
    report = EvaluationReport(k1=k1, k2=k2, pass_events=pass_events,
                              baseline_events=baseline_events, warnings=warnings)
    LOG.info("📊 PASS mean rank-R2 %.3f, baseline %.3f over %d events",
             report.pass_mean_r2, report.baseline_mean_r2, len(pass_events))
    return report


def evaluation_frame(report: EvaluationReport) -> pd.DataFrame:
    rows = report.vehicle_rows()
    if not rows:
        return pd.DataFrame(columns=EVALUATION_COLUMNS)
    return pd.DataFrame(rows)[EVALUATION_COLUMNS]


def scatter_frame(report: EvaluationReport) -> pd.DataFrame:
    """Ranked aggregate metric against ranked travel time, one row per (metric, event, vehicle)"""
    rows = []
    for metric, evaluations in (("pass", report.pass_events), ("baseline", report.baseline_events)):
        for event in evaluations:
            for i, vehicle_id in enumerate(event.vehicle_ids):
                rows.append({
                    "event_id": event.event_id,
                    "vehicle_id": vehicle_id,
                    "metric": metric,
                    "value": float(event.metric_values[i]),
                    "rank": float(event.metric_ranks[i]),
                    "travel_time": float(event.travel_times[i]),
                    "travel_time_rank": float(event.travel_time_ranks[i]),
                })
    if not rows:
        return pd.DataFrame(columns=SCATTER_COLUMNS)
    return pd.DataFrame(rows)[SCATTER_COLUMNS]


def grid_frame(result: CalibrationResult) -> pd.DataFrame:
    return pd.DataFrame(result.grid, columns=["k1", "k2", "loss"])


def write_frame(path: str, frame: pd.DataFrame):
    parent = os.path.dirname(path)
    if parent:
        os.makedirs(parent, exist_ok=True)
    frame.to_csv(path, index=False, float_format=settings.PASS_FLOAT_FORMAT, lineterminator="\n")


def load_calibration_dataset(dataset_dir: str) -> List[CalibrationEvent]:
    """
    Rebuild the cached per-vehicle series from evaluate's outputs.

    Raises:
        InputError: evaluate has not been run on this directory, or it produced no vehicles
        SchemaError: malformed evaluation or metric files
    """
    path = os.path.join(dataset_dir, EVALUATION_CSV)
    if not os.path.exists(path):
        raise InputError(f"missing {path}, run evaluate first")
    frame = pd.read_csv(path, dtype={"event_id": str, "vehicle_id": str})
    missing = [c for c in ("event_id", "vehicle_id", "travel_time") if c not in frame.columns]
    if missing:
        raise SchemaError(f"missing columns {missing}", row=1, path=path)
    if frame.empty:
        raise InputError(f"{path} lists no evaluated vehicles")

    events: List[CalibrationEvent] = []
    for event_id, group in frame.groupby("event_id", sort=False):
        vehicles = []
        for _, row in group.iterrows():
            metrics = read_metric_csv(metric_path(dataset_dir, event_id, row["vehicle_id"]))
            vehicles.append(VehicleSeries(
                vehicle_id=row["vehicle_id"],
                available_space=metrics["A"].to_numpy(),
                delta=metrics["dA"].to_numpy(),
                travel_time=float(row["travel_time"]),
                baseline=metrics["baseline"].to_numpy(),
            ))
        events.append(CalibrationEvent(event_id=event_id, vehicles=vehicles))
    LOG.debug("Loaded %d events from %s", len(events), dataset_dir)
    return events


def comparison_document(report: EvaluationReport) -> Dict:
    document = report.to_dict()
    document["reference"] = dict(REFERENCE_ANNOTATIONS)
    return document


def summary_document(
    calibration: Optional[Dict],
    comparison: Optional[Dict],
    evaluation: Optional[Dict] = None,
) -> Dict:
    """
    Consolidated summary of whatever outputs exist

    Raises:
        InputError: no calibration, comparison or evaluation output found
    """
    if not (calibration or comparison or evaluation):
        raise InputError("no pipeline outputs to summarize, run evaluate/calibrate/compare first")
    source = comparison or evaluation or {}
    warnings = []
    for document in (evaluation, calibration, comparison):
        if document:
            warnings.extend(document.get("warnings", []))
    # the same warning can reach several documents
    unique = list({(w["source"], w["message"]): w for w in warnings}.values())
    return {
        "best_k1": calibration["best_k1"] if calibration else None,
        "best_k2": calibration["best_k2"] if calibration else None,
        "loss": calibration["loss"] if calibration else None,
        "pass_mean_r2": source.get("pass_mean_r2"),
        "baseline_mean_r2": source.get("baseline_mean_r2"),
        "events": source.get("events", []),
        "reference": dict(REFERENCE_ANNOTATIONS),
        "warnings": unique,
    }


def load_summary(out_dir: str) -> Dict:
    def optional(name):
        path = os.path.join(out_dir, name)
        return read_json(path) if os.path.exists(path) else None

    return summary_document(optional(CALIBRATION_JSON), optional(COMPARISON_JSON), optional(EVALUATION_JSON))


def _fmt(value, spec: str = ".3f") -> str:
    if value is None or (isinstance(value, float) and not np.isfinite(value)):
        return "-"
    return format(value, spec)


def format_summary(summary: Dict) -> str:
    """Human-readable text rendering of summary_document"""
    lines = [
        "PASS calibration summary",
        "=" * 50,
        f"Best k1 / k2:        {_fmt(summary['best_k1'], '.2f')} / {_fmt(summary['best_k2'], '.2f')}",
        f"Loss:                {_fmt(summary['loss'], '.6f')}",
        f"PASS mean rank-R2:   {_fmt(summary['pass_mean_r2'])}",
        f"Baseline mean R2:    {_fmt(summary['baseline_mean_r2'])}",
        "",
        f"{'event':<10}{'n':>4}{'PASS r':>10}{'PASS R2':>10}{'base r':>10}{'base R2':>10}",
    ]
    for event in summary["events"]:
        lines.append(
            f"{event['event_id']:<10}{event['n']:>4}"
            f"{_fmt(event['pass_r']):>10}{_fmt(event['pass_r2']):>10}"
            f"{_fmt(event['baseline_r']):>10}{_fmt(event['baseline_r2']):>10}"
        )
    ref = summary["reference"]
    lines += [
        "",
        f"Reference ({ref['note']}): PASS R2 {ref['pass_mean_r2']}, baseline R2 {ref['baseline_mean_r2']}, "
        f"k1 {ref['k1']}, k2 {ref['k2']}",
    ]
    if summary["warnings"]:
        lines += ["", f"Warnings ({len(summary['warnings'])}):"]
        lines += [f"  ⚠️ {w['source']}: {w['message']}" for w in summary["warnings"]]
    return "\n".join(lines) + "\n"
