import json
import os

import pandas as pd
import pytest

from src.main import build_parser, main

from tests.helpers import mini_config, write_config


def read(path):
    with open(path, "rb") as f:
        return f.read()


def run(command, config, out, *extra):
    return main([command, "--config", config, "--out", out, *extra])


@pytest.fixture(scope="module")
def pipeline(tmp_path_factory):
    """simulate, evaluate, compare before and after calibrate on the mini config"""
    root = tmp_path_factory.mktemp("pipeline")
    config = write_config(root / "run.yaml", mini_config())
    out = str(root / "out")
    codes = {
        "simulate": run("simulate", config, out),
        "evaluate": run("evaluate", config, out),
        "compare_uncalibrated": run("compare", config, out, "--strict"),
        "calibrate": run("calibrate", config, out),
        "compare": run("compare", config, out),
    }
    return config, out, codes


class TestPipeline:
    def test_exit_codes(self, pipeline):
        _, _, codes = pipeline
        assert codes["simulate"] == 0
        assert codes["evaluate"] == 0
        assert codes["calibrate"] == 0
        assert codes["compare"] == 0

    def test_compare_without_calibration_warns(self, pipeline):
        _, _, codes = pipeline
        assert codes["compare_uncalibrated"] == 2

    def test_dataset_layout(self, pipeline):
        _, out, _ = pipeline
        manifest = json.loads(read(os.path.join(out, "manifest.json")))
        assert [e["event_id"] for e in manifest["events"]] == ["T1"]
        runs = manifest["events"][0]["runs"]
        assert [r["policy_id"] for r in runs] == ["early", "late"]
        for r in runs:
            assert os.path.exists(os.path.join(out, r["file"]))
            assert os.path.exists(os.path.join(out, "metrics", "T1", f"{r['ego_id']}.csv"))

    def test_evaluation_outputs(self, pipeline):
        _, out, _ = pipeline
        frame = pd.read_csv(os.path.join(out, "evaluation.csv"))
        assert list(frame.vehicle_id) == ["early", "late"]
        assert frame.travel_time.gt(0).all()
        assert sorted(frame.travel_time_rank) == [1.0, 2.0]
        document = json.loads(read(os.path.join(out, "evaluation.json")))
        assert document["events"][0]["n"] == 2
        assert abs(document["events"][0]["pass_r"]) == pytest.approx(1.0)

    def test_calibration_outputs(self, pipeline):
        _, out, _ = pipeline
        document = json.loads(read(os.path.join(out, "calibration.json")))
        assert -1.0 <= document["best_k1"] < 0 < document["best_k2"] <= 1.0
        assert document["grid"]["step"] == 0.5
        grid = pd.read_csv(os.path.join(out, "grid.csv"))
        assert list(grid.columns) == ["k1", "k2", "loss"]
        assert len(grid) == document["grid_points"] == 4

    def test_comparison_outputs(self, pipeline):
        _, out, _ = pipeline
        document = json.loads(read(os.path.join(out, "comparison.json")))
        calibration = json.loads(read(os.path.join(out, "calibration.json")))
        assert document["k1"] == calibration["best_k1"]
        assert document["reference"]["note"] == "original data, not reproduced"
        scatter = pd.read_csv(os.path.join(out, "scatter.csv"))
        assert set(scatter.metric) <= {"pass", "baseline"}
        assert (scatter.metric == "pass").sum() == 2

    def test_report_json(self, pipeline, capsys):
        config, out, _ = pipeline
        capsys.readouterr()
        assert run("report", config, out, "--json") == 0
        printed = capsys.readouterr().out
        summary = json.loads(printed[printed.index("{\n"):])
        assert summary["best_k1"] == json.loads(read(os.path.join(out, "calibration.json")))["best_k1"]
        assert os.path.exists(os.path.join(out, "summary.json"))

    def test_report_text(self, pipeline, capsys):
        config, out, _ = pipeline
        assert run("report", config, out) == 0
        text = read(os.path.join(out, "summary.txt")).decode("utf-8")
        assert text.startswith("PASS calibration summary")
        assert "T1" in text
        assert text in capsys.readouterr().out

    def test_report_strict_after_calibration(self, pipeline):
        config, out, _ = pipeline
        # the calibrated compare replaced the uncalibrated warning
        assert run("report", config, out, "--strict") == 0


def test_simulation_is_byte_identical(tmp_path):
    config = write_config(tmp_path / "run.yaml", mini_config())
    first, second = str(tmp_path / "a"), str(tmp_path / "b")
    assert run("simulate", config, first) == 0
    assert run("simulate", config, second) == 0
    for name in ("early", "late"):
        relative = os.path.join("trajectories", "T1", f"{name}.csv")
        assert read(os.path.join(first, relative)) == read(os.path.join(second, relative))
    assert read(os.path.join(first, "manifest.json")) == read(os.path.join(second, "manifest.json"))


def test_xy_dataset_matches_s_dataset(tmp_path):
    s_config = write_config(tmp_path / "s.yaml", mini_config())
    xy_config = write_config(tmp_path / "xy.yaml", mini_config(simulation={
        "coordinates": "xy",
        "route": {"points": [[-50.0, 0.0], [400.0, 0.0], [900.0, -100.0]], "start_s": -50.0},
    }))
    s_out, xy_out = str(tmp_path / "s"), str(tmp_path / "xy")
    for config, out in ((s_config, s_out), (xy_config, xy_out)):
        assert run("simulate", config, out) == 0
        assert run("evaluate", config, out) == 0
    with open(os.path.join(xy_out, "trajectories", "T1", "early.csv"), encoding="utf-8") as f:
        assert f.readline().strip() == "vehicle_id,time,lane_id,x,y,speed,accel"
    s_frame = pd.read_csv(os.path.join(s_out, "evaluation.csv"))
    xy_frame = pd.read_csv(os.path.join(xy_out, "evaluation.csv"))
    pd.testing.assert_series_equal(s_frame.travel_time, xy_frame.travel_time, atol=1e-3, check_exact=False)


def test_timeouts_are_warnings(tmp_path):
    config = write_config(tmp_path / "run.yaml", mini_config(simulation={"max_duration": 5.0}))
    out = str(tmp_path / "out")
    assert run("simulate", config, out, "--strict", "--seed", "11") == 2
    manifest = json.loads(read(os.path.join(out, "manifest.json")))
    assert manifest["events"][0]["seed"] == 11
    assert len(manifest["warnings"]) == 2
    assert run("evaluate", config, out) == 1


class TestFailures:
    def test_missing_config(self, tmp_path):
        assert run("simulate", str(tmp_path / "nope.yaml"), str(tmp_path)) == 1

    def test_invalid_config(self, tmp_path):
        config = write_config(tmp_path / "run.yaml", mini_config(scenarios=[]))
        assert run("simulate", config, str(tmp_path)) == 1

    def test_events_out_of_range(self, tmp_path):
        config = write_config(tmp_path / "run.yaml", mini_config())
        assert run("simulate", config, str(tmp_path / "out"), "--events", "5") == 1

    def test_runs_out_of_range(self, tmp_path):
        config = write_config(tmp_path / "run.yaml", mini_config())
        assert run("simulate", config, str(tmp_path / "out"), "--runs", "1") == 1

    @pytest.mark.parametrize("command", ["evaluate", "calibrate", "compare", "report"])
    def test_nothing_to_read(self, tmp_path, command):
        config = write_config(tmp_path / "run.yaml", mini_config())
        assert run(command, config, str(tmp_path / "empty")) == 1


def test_parser():
    args = build_parser().parse_args(["calibrate", "--k1-range", "-1", "0", "--step", "0.1"])
    assert args.k1_range == [-1.0, 0.0]
    assert args.step == 0.1
    assert args.strict is None
    with pytest.raises(SystemExit):
        build_parser().parse_args(["tune"])
