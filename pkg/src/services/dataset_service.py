"""
Dataset Service
Trajectory / metric CSV files and the event manifest on disk
"""
import json
import logging
import os
from typing import Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from ..config import settings
from ..models.errors import InputError, SchemaError
from ..models.metric import PassSeries
from ..models.trajectory import Route, VehicleTrack
from .route_service import point_at, project_points

LOG = logging.getLogger(__name__)

TRACK_COLUMNS_S = ["vehicle_id", "time", "lane_id", "s", "speed", "accel"]
TRACK_COLUMNS_XY = ["vehicle_id", "time", "lane_id", "x", "y", "speed", "accel"]
METRIC_COLUMNS = ["vehicle_id", "time", "lane_id", "v0", "v_proj", "chosen_lane",
                  "A", "dA", "dA_scaled", "pass", "baseline"]
MANIFEST_NAME = "manifest.json"


def _ensure_parent(path: str):
    parent = os.path.dirname(path)
    if parent:
        os.makedirs(parent, exist_ok=True)


def write_json(path: str, document: Dict):
    _ensure_parent(path)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(document, f, indent=2, allow_nan=False)
        f.write("\n")


def read_json(path: str) -> Dict:
    if not os.path.exists(path):
        raise InputError(f"missing file {path}")
    with open(path, "r", encoding="utf-8") as f:
        try:
            return json.load(f)
        except json.JSONDecodeError as e:
            raise SchemaError(f"invalid JSON: {e.msg}", row=e.lineno, path=path) from e


def tracks_frame(
    tracks: Sequence[VehicleTrack],
    coordinates: str = "s",
    route: Optional[Route] = None,
    lane_width: float = 3.5,
) -> pd.DataFrame:
    """Long-format frame of all tracks, in s or projected x,y coordinates"""
    frames = []
    for track in tracks:
        frame = pd.DataFrame({
            "vehicle_id": track.vehicle_id,
            "time": track.time,
            "lane_id": track.lane_id,
            "s": track.s,
            "speed": track.speed,
            "accel": track.acceleration,
        })
        if coordinates == "xy":
            if route is None:
                raise InputError("xy coordinates need a route polyline")
            # lane 0 on the right, higher lane ids to the left
            x, y = point_at(route, track.s, track.lane_id * lane_width)
            frame.insert(3, "x", x)
            frame.insert(4, "y", y)
            frame = frame.drop(columns="s")
        frames.append(frame)
    columns = TRACK_COLUMNS_XY if coordinates == "xy" else TRACK_COLUMNS_S
    if not frames:
        return pd.DataFrame(columns=columns)
    return pd.concat(frames, ignore_index=True)[columns]


def write_tracks_csv(
    path: str,
    tracks: Sequence[VehicleTrack],
    coordinates: str = "s",
    route: Optional[Route] = None,
    lane_width: float = 3.5,
):
    _ensure_parent(path)
    frame = tracks_frame(tracks, coordinates, route, lane_width)
    frame.to_csv(path, index=False, float_format=settings.PASS_FLOAT_FORMAT, lineterminator="\n")


def _numeric(frame: pd.DataFrame, column: str, path: str) -> np.ndarray:
    values = pd.to_numeric(frame[column], errors="coerce")
    bad = np.flatnonzero(values.isna().to_numpy())
    if bad.size:
        # header is line 1
        row = int(bad[0]) + 2
        raise SchemaError(f"column {column!r} has non-numeric value {frame[column].iloc[bad[0]]!r}", row=row, path=path)
    return values.to_numpy(dtype=np.float64)


def read_tracks_csv(
    path: str,
    route: Optional[Route] = None,
    lateral_tolerance: float = 10.0,
) -> List[VehicleTrack]:
    """
    Read a trajectory CSV, projecting x,y onto the route when the file is not pre-projected.

    Tracks come back in order of first appearance.

    Raises:
        SchemaError: missing columns, non-numeric cells, broken per-vehicle ordering
        OffRouteError: x,y samples too far from the route
    """
    if not os.path.exists(path):
        raise InputError(f"missing trajectory file {path}")
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False)
    except pd.errors.EmptyDataError as e:
        raise SchemaError("empty file", path=path) from e

    columns = list(frame.columns)
    if columns == TRACK_COLUMNS_S:
        xy = False
    elif columns == TRACK_COLUMNS_XY:
        xy = True
        if route is None:
            raise SchemaError("x,y trajectories need a route polyline in the manifest", path=path)
    else:
        raise SchemaError(f"unexpected header {columns}", row=1, path=path)
    if frame.empty:
        raise SchemaError("no records", path=path)

    time = _numeric(frame, "time", path)
    lane = _numeric(frame, "lane_id", path)
    if np.any(lane != np.round(lane)):
        row = int(np.flatnonzero(lane != np.round(lane))[0]) + 2
        raise SchemaError("lane_id must be an integer", row=row, path=path)
    speed = _numeric(frame, "speed", path)
    accel = _numeric(frame, "accel", path)
    if np.any(speed < 0):
        row = int(np.flatnonzero(speed < 0)[0]) + 2
        raise SchemaError("negative speed", row=row, path=path)
    if xy:
        s = project_points(_numeric(frame, "x", path), _numeric(frame, "y", path), route, lateral_tolerance)
    else:
        s = _numeric(frame, "s", path)

    ids = frame["vehicle_id"].to_numpy()
    tracks = []
    for vehicle_id in pd.unique(ids):
        rows = np.flatnonzero(ids == vehicle_id)
        if rows.size > 1 and np.any(np.diff(time[rows]) <= 0):
            bad = rows[1:][np.diff(time[rows]) <= 0][0]
            raise SchemaError(f"time not increasing for {vehicle_id}", row=int(bad) + 2, path=path)
        tracks.append(VehicleTrack(
            vehicle_id, time[rows], lane[rows].astype(np.int64), s[rows], speed[rows], accel[rows]
        ))
    LOG.debug("Read %d tracks from %s", len(tracks), path)
    return tracks


def write_metric_csv(path: str, series: PassSeries, baseline: np.ndarray):
    """Per-tick PASS and baseline trace of one vehicle"""
    _ensure_parent(path)
    frame = pd.DataFrame({
        "vehicle_id": series.vehicle_id,
        "time": series.time,
        "lane_id": series.lane_id,
        "v0": series.v0,
        "v_proj": series.v_proj,
        "chosen_lane": series.chosen_lane,
        "A": series.available_space,
        "dA": series.delta,
        "dA_scaled": series.delta_scaled,
        "pass": series.pass_values,
        "baseline": baseline,
    })[METRIC_COLUMNS]
    frame.to_csv(path, index=False, float_format=settings.PASS_FLOAT_FORMAT, lineterminator="\n")


def read_metric_csv(path: str) -> pd.DataFrame:
    """
    Raises:
        SchemaError: header mismatch or non-numeric cells
    """
    if not os.path.exists(path):
        raise InputError(f"missing metric file {path}")
    frame = pd.read_csv(path, dtype=str, keep_default_na=False)
    if list(frame.columns) != METRIC_COLUMNS:
        raise SchemaError(f"unexpected header {list(frame.columns)}", row=1, path=path)
    out = pd.DataFrame({"vehicle_id": frame["vehicle_id"]})
    for column in METRIC_COLUMNS[1:]:
        out[column] = _numeric(frame, column, path)
    return out


def write_manifest(out_dir: str, manifest: Dict) -> str:
    path = os.path.join(out_dir, MANIFEST_NAME)
    write_json(path, manifest)
    return path


def read_manifest(dataset_dir: str) -> Dict:
    """
    Raises:
        InputError: no manifest in the dataset directory
        SchemaError: manifest lacks the events list
    """
    path = os.path.join(dataset_dir, MANIFEST_NAME)
    manifest = read_json(path)
    if not isinstance(manifest.get("events"), list):
        raise SchemaError("manifest has no events list", path=path)
    if not manifest["events"]:
        raise InputError(f"dataset {dataset_dir} has no events")
    return manifest
