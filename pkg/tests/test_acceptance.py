"""Full-size runs of the shipped preset; select with pytest -m slow"""
import glob
import json
import os

import numpy as np
import pandas as pd
import pytest

from src.config import settings
from src.main import main

pytestmark = pytest.mark.slow

PRESET = os.path.join(settings.PROJECT_ROOT, "config", "desk_study.yaml")


@pytest.fixture(scope="module")
def desk(tmp_path_factory):
    out = str(tmp_path_factory.mktemp("desk"))
    for command in ("simulate", "evaluate", "calibrate", "compare"):
        assert main([command, "--config", PRESET, "--out", out]) == 0
    return out


def test_calibrated_pass_ranks_travel_time(desk):
    with open(os.path.join(desk, "comparison.json"), encoding="utf-8") as f:
        comparison = json.load(f)
    assert len(comparison["events"]) == 10
    assert comparison["pass_mean_r2"] >= 0.80
    assert comparison["pass_mean_r2"] > (comparison["baseline_mean_r2"] or 0.0)


def test_every_run_completes(desk):
    with open(os.path.join(desk, "manifest.json"), encoding="utf-8") as f:
        manifest = json.load(f)
    assert manifest["warnings"] == []
    assert sum(len(e["runs"]) for e in manifest["events"]) == 430


def test_metric_traces_hold_invariants(desk):
    files = glob.glob(os.path.join(desk, "metrics", "*", "*.csv"))
    assert len(files) == 430
    for path in files:
        frame = pd.read_csv(path)
        assert frame["dA"].iloc[0] == 0.0
        a = frame["A"].to_numpy()
        pass_values = frame["pass"].to_numpy()
        nonzero = np.abs(a) > 1e-6
        np.testing.assert_array_equal(np.sign(pass_values[nonzero]), np.sign(a[nonzero]))
        ratio = pass_values[nonzero] / a[nonzero]
        assert np.all((ratio > -1e-6) & (ratio < 2.0 + 1e-6))


def test_incident_runs_merge_once(desk):
    for path in glob.glob(os.path.join(desk, "trajectories", "A*", "*.csv")):
        frame = pd.read_csv(path)
        ego = frame[frame.vehicle_id == os.path.splitext(os.path.basename(path))[0]]
        lanes = ego.lane_id.to_numpy()
        assert lanes[0] == 1
        assert lanes[-1] == 0
        assert np.count_nonzero(np.diff(lanes)) == 1


def test_fastest_incident_run_trace(desk):
    evaluation = pd.read_csv(os.path.join(desk, "evaluation.csv"))
    incident = evaluation[evaluation.event_id == "A1"]
    best = incident.loc[incident.travel_time.idxmin(), "vehicle_id"]
    with open(os.path.join(desk, "manifest.json"), encoding="utf-8") as f:
        manifest = json.load(f)
    runs = next(e["runs"] for e in manifest["events"] if e["event_id"] == "A1")
    merge_time = next(r["merge_time"] for r in runs if r["ego_id"] == best)

    frame = pd.read_csv(os.path.join(desk, "metrics", "A1", f"{best}.csv"))
    lanes = frame["chosen_lane"].to_numpy()
    pass_values = frame["pass"].to_numpy()
    v0 = frame["v0"].to_numpy()

    # one switch to the target lane, the moment it opens up
    switches = np.flatnonzero(np.diff(lanes)) + 1
    assert len(switches) == 1
    i_switch = int(switches[0])
    assert (lanes[i_switch - 1], lanes[i_switch]) == (1, 0)
    assert pass_values[i_switch] > pass_values[i_switch - 1]

    # braking toward the stop point before the merge leaves more space unused
    i_merge = int(np.searchsorted(frame["time"].to_numpy(), merge_time))
    assert i_switch < i_merge
    braking = [i for i in range(i_switch + 1, i_merge + 1) if v0[i] < v0[i - 1]]
    assert braking
    assert pass_values[braking[-1]] > pass_values[braking[0]]

    # and speeding up in the open lane afterwards uses it
    after = pass_values[i_merge:]
    assert after[-1] < after[0]
    assert after[len(after) // 2:].mean() < after[0]
