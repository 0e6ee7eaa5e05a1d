"""
Command handlers: simulate, evaluate, calibrate, compare, report.

Each handler returns a process exit code: 0 on success, 1 on a pipeline error,
2 when strict mode is on and warnings were collected.
"""
import json
import logging
import os
from typing import Dict, List, Optional

from ..config.run_config import RunConfig
from ..models.calibration import CalibrationEvent, VehicleSeries
from ..models.errors import ConfigError, IncompleteTravelError, InputError, PassError, PipelineWarning, SchemaError
from ..models.trajectory import Route
from ..services.baseline_service import baseline_series
from ..services.calibration_service import grid_search
from ..services.dataset_service import (
    read_json,
    read_manifest,
    read_tracks_csv,
    write_json,
    write_manifest,
    write_metric_csv,
    write_tracks_csv,
)
from ..services.pass_service import evaluate_series
from ..services.report_service import (
    CALIBRATION_JSON,
    COMPARISON_JSON,
    EVALUATION_CSV,
    EVALUATION_JSON,
    GRID_CSV,
    SCATTER_CSV,
    SUMMARY_JSON,
    SUMMARY_TXT,
    build_manifest,
    comparison_document,
    evaluation_frame,
    evaluation_report,
    format_summary,
    grid_frame,
    load_calibration_dataset,
    load_summary,
    manifest_event,
    metric_path,
    scatter_frame,
    trajectory_path,
    write_frame,
)
from ..services.scene_service import build_snapshots, travel_time
from ..services.simulation_service import generate_cohort

LOG = logging.getLogger(__name__)


def _banner(title: str):
    print("\n" + "=" * 50)
    print(title)
    print("=" * 50)


def _exit_code(warnings: List, strict: bool) -> int:
    if warnings:
        print(f"⚠️ {len(warnings)} warning(s) collected")
        if strict:
            print("❌ Strict mode: warnings are errors")
            return 2
    return 0


def cmd_simulate(
    config: RunConfig,
    events: Optional[int] = None,
    runs: Optional[int] = None,
    seed: Optional[int] = None,
) -> int:
    """Generate the trajectory cohort and its manifest"""
    _banner("🚗 SIMULATE")
    try:
        if events is not None and not 1 <= events <= len(config.scenarios):
            raise ConfigError(f"expected 1..{len(config.scenarios)}, got {events}", key="--events")
        if runs is not None and not 2 <= runs <= len(config.policies):
            raise ConfigError(f"expected 2..{len(config.policies)}, got {runs}", key="--runs")
        specs = config.scenarios[:events]
        policies = config.policies[:runs]
        seeds = config.seeds[:len(specs)] if config.seeds else None
        if seed is not None:
            seeds = [seed + i for i in range(len(specs))]

        out = config.resolved_dataset_dir
        sim = config.simulation
        print(f"Events: {len(specs)}  Policies: {len(policies)}  dt: {sim.dt}s  Output: {out}")

        cohorts = generate_cohort(specs, policies, seeds, sim)
        for cohort in cohorts:
            for run in cohort.runs:
                write_tracks_csv(
                    trajectory_path(out, cohort.spec.event_id, run.policy_id),
                    run.tracks, sim.coordinates, config.route, sim.lane_width,
                )
        manifest = build_manifest(config.name, cohorts, sim.coordinates, sim.dt, config.route, policies)
        path = write_manifest(out, manifest)

        completed = sum(len(c.window.vehicle_ids) for c in cohorts)
        total = sum(len(c.runs) for c in cohorts)
        print(f"✅ {completed}/{total} runs completed, manifest at {path}")
        return _exit_code(manifest["warnings"], config.strict)
    except PassError as e:
        print(f"❌ Simulation failed: {e}")
        return 1


def _evaluate_event(
    config: RunConfig,
    dataset_dir: str,
    out_dir: str,
    entry: Dict,
    route: Optional[Route],
    warnings: List[PipelineWarning],
) -> CalibrationEvent:
    window, route_meta = manifest_event(entry)
    event_id = window.event_id
    vehicles = []
    for run in entry.get("runs", []):
        if not run.get("completed", True):
            continue
        path = os.path.join(dataset_dir, run["file"])
        tracks = read_tracks_csv(path, route, config.scene.lateral_tolerance)
        ego = next((t for t in tracks if t.vehicle_id == run["ego_id"]), None)
        if ego is None:
            raise SchemaError(f"no track for ego {run['ego_id']}", path=path)
        try:
            travel = travel_time(ego, window)
        except IncompleteTravelError as e:
            warnings.append(PipelineWarning(source=f"{event_id}/{ego.vehicle_id}", message=str(e)))
            continue

        others = [t for t in tracks if t is not ego]
        snapshots = build_snapshots(ego, others, route_meta.obstacles, route_meta, config.scene, window)
        series = evaluate_series(snapshots, config.pass_config, vehicle_id=ego.vehicle_id)
        warnings.extend(series.warnings)
        baseline = baseline_series(snapshots, config.baseline)
        write_metric_csv(metric_path(out_dir, event_id, ego.vehicle_id), series, baseline)
        vehicles.append(VehicleSeries(
            vehicle_id=ego.vehicle_id,
            available_space=series.available_space,
            delta=series.delta,
            travel_time=travel,
            baseline=baseline,
        ))
    LOG.info("✅ Event %s: %d vehicles evaluated", event_id, len(vehicles))
    return CalibrationEvent(event_id=event_id, vehicles=vehicles)


def cmd_evaluate(config: RunConfig) -> int:
    """Per-tick PASS and baseline for every completed run, plus the evaluation report"""
    _banner("📊 EVALUATE")
    try:
        dataset_dir = config.resolved_dataset_dir
        out = config.output_dir
        manifest = read_manifest(dataset_dir)
        route = Route.from_config(manifest["route"]) if manifest.get("route") else None
        if manifest.get("coordinates") == "xy" and route is None:
            raise SchemaError("x,y dataset without a route polyline", path=dataset_dir)
        print(f"Dataset: {dataset_dir}  Events: {len(manifest['events'])}  "
              f"k1={config.pass_config.k1} k2={config.pass_config.k2}")

        warnings = [PipelineWarning(**w) for w in manifest.get("warnings", [])]
        dataset = [_evaluate_event(config, dataset_dir, out, entry, route, warnings) for entry in manifest["events"]]
        if not any(event.vehicles for event in dataset):
            raise InputError(f"dataset {dataset_dir} has no completed vehicles")

        report = evaluation_report(dataset, config.pass_config.k1, config.pass_config.k2, warnings)
        write_json(os.path.join(out, EVALUATION_JSON), report.to_dict())
        write_frame(os.path.join(out, EVALUATION_CSV), evaluation_frame(report))
        print(f"✅ PASS mean rank-R2: {report.pass_mean_r2:.3f}  baseline: {report.baseline_mean_r2:.3f}")
        return _exit_code(report.warnings, config.strict)
    except PassError as e:
        print(f"❌ Evaluation failed: {e}")
        return 1


def cmd_calibrate(config: RunConfig) -> int:
    """Grid search of (k1, k2) over the evaluated dataset"""
    _banner("📊 CALIBRATE")
    try:
        out = config.output_dir
        dataset = load_calibration_dataset(out)
        grid = config.grid
        print(f"Grid: k1 {grid.k1_range}, k2 {grid.k2_range}, step {grid.step} ({grid.size} points)")

        result = grid_search(dataset, grid)
        document = result.to_dict()
        document["grid"] = {"k1_range": list(grid.k1_range), "k2_range": list(grid.k2_range), "step": grid.step}
        write_json(os.path.join(out, CALIBRATION_JSON), document)
        write_frame(os.path.join(out, GRID_CSV), grid_frame(result))
        print(f"✅ Best k1={result.best_k1:.2f} k2={result.best_k2:.2f} "
              f"loss={result.loss:.6f} mean rank-R2={result.mean_r2:.3f}")
        return _exit_code(result.warnings, config.strict)
    except PassError as e:
        print(f"❌ Calibration failed: {e}")
        return 1


def cmd_compare(config: RunConfig) -> int:
    """PASS against the baseline at the calibrated (k1, k2)"""
    _banner("📊 COMPARE")
    try:
        out = config.output_dir
        dataset = load_calibration_dataset(out)
        warnings: List[PipelineWarning] = []
        calibration_path = os.path.join(out, CALIBRATION_JSON)
        if os.path.exists(calibration_path):
            calibration = read_json(calibration_path)
            k1, k2 = float(calibration["best_k1"]), float(calibration["best_k2"])
        else:
            k1, k2 = config.pass_config.k1, config.pass_config.k2
            warnings.append(PipelineWarning(
                source="compare", message=f"no calibration found, using configured k1={k1} k2={k2}"
            ))

        report = evaluation_report(dataset, k1, k2, warnings)
        write_json(os.path.join(out, COMPARISON_JSON), comparison_document(report))
        write_frame(os.path.join(out, SCATTER_CSV), scatter_frame(report))
        print(f"PASS     mean rank-R2: {report.pass_mean_r2:.3f}")
        print(f"Baseline mean rank-R2: {report.baseline_mean_r2:.3f}")
        return _exit_code(report.warnings, config.strict)
    except PassError as e:
        print(f"❌ Comparison failed: {e}")
        return 1


def cmd_report(config: RunConfig, as_json: bool = False) -> int:
    """Consolidated summary of the outputs directory"""
    try:
        out = config.output_dir
        summary = load_summary(out)
        text = format_summary(summary)
        write_json(os.path.join(out, SUMMARY_JSON), summary)
        with open(os.path.join(out, SUMMARY_TXT), "w", encoding="utf-8") as f:
            f.write(text)
        print(json.dumps(summary, indent=2) if as_json else text)
        if summary["warnings"] and config.strict:
            return 2
        return 0
    except PassError as e:
        print(f"❌ Report failed: {e}")
        return 1
