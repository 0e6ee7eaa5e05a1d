import json
import os

import numpy as np
import pytest

from src.models.errors import InputError, OffRouteError, SchemaError
from src.models.trajectory import Route
from src.services.dataset_service import (
    METRIC_COLUMNS,
    read_json,
    read_manifest,
    read_metric_csv,
    read_tracks_csv,
    write_manifest,
    write_metric_csv,
    write_tracks_csv,
)
from src.services.pass_service import evaluate_series

from tests.helpers import constant_track, snapshot

HEADER = "vehicle_id,time,lane_id,s,speed,accel\n"


def write_text(path, text):
    with open(path, "w", encoding="utf-8") as f:
        f.write(text)
    return str(path)


@pytest.fixture
def tracks():
    return [
        constant_track("ego", 13.456789123, s0=-30.0, duration=2.0, lane=1),
        constant_track("ego/p00", 8.33, s0=120.5, duration=2.0, lane=0),
    ]


class TestTrackFiles:
    def test_round_trip(self, tmp_path, tracks):
        path = str(tmp_path / "run.csv")
        write_tracks_csv(path, tracks)
        loaded = read_tracks_csv(path)
        assert [t.vehicle_id for t in loaded] == ["ego", "ego/p00"]
        for original, copy in zip(tracks, loaded):
            np.testing.assert_allclose(copy.time, original.time, rtol=1e-8)
            np.testing.assert_allclose(copy.s, original.s, rtol=1e-8)
            np.testing.assert_allclose(copy.speed, original.speed, rtol=1e-8)
            np.testing.assert_array_equal(copy.lane_id, original.lane_id)

    def test_file_layout(self, tmp_path, tracks):
        path = str(tmp_path / "run.csv")
        write_tracks_csv(path, tracks)
        with open(path, "rb") as f:
            lines = f.read().split(b"\n")
        assert lines[0] == HEADER.strip().encode()
        assert b"\r" not in lines[1]
        assert lines[1].startswith(b"ego,0,1,-30,13.4567891,")

    def test_identical_input_identical_bytes(self, tmp_path, tracks):
        first, second = str(tmp_path / "a.csv"), str(tmp_path / "b.csv")
        write_tracks_csv(first, tracks)
        write_tracks_csv(second, tracks)
        with open(first, "rb") as a, open(second, "rb") as b:
            assert a.read() == b.read()

    def test_xy_round_trip(self, tmp_path, tracks):
        route = Route([[-50.0, 0.0], [500.0, 0.0], [900.0, -200.0]], start_s=-50.0)
        path = str(tmp_path / "run.csv")
        write_tracks_csv(path, tracks, coordinates="xy", route=route)
        with open(path, "r", encoding="utf-8") as f:
            assert f.readline() == "vehicle_id,time,lane_id,x,y,speed,accel\n"
        loaded = read_tracks_csv(path, route=route)
        for original, copy in zip(tracks, loaded):
            np.testing.assert_allclose(copy.s, original.s, atol=1e-5)

    def test_xy_needs_route(self, tmp_path, tracks):
        path = str(tmp_path / "run.csv")
        write_tracks_csv(path, tracks, coordinates="xy", route=Route([[0.0, 0.0], [500.0, 0.0]]))
        with pytest.raises(SchemaError):
            read_tracks_csv(path)

    def test_off_route(self, tmp_path):
        path = write_text(tmp_path / "run.csv",
                          "vehicle_id,time,lane_id,x,y,speed,accel\nego,0,0,10,50,5,0\n")
        with pytest.raises(OffRouteError):
            read_tracks_csv(path, route=Route([[0.0, 0.0], [500.0, 0.0]]))

    def test_missing_file(self, tmp_path):
        with pytest.raises(InputError):
            read_tracks_csv(str(tmp_path / "nope.csv"))

    def test_empty_file(self, tmp_path):
        with pytest.raises(SchemaError):
            read_tracks_csv(write_text(tmp_path / "run.csv", ""))

    def test_header_only(self, tmp_path):
        with pytest.raises(SchemaError):
            read_tracks_csv(write_text(tmp_path / "run.csv", HEADER))

    def test_wrong_header(self, tmp_path):
        with pytest.raises(SchemaError) as e:
            read_tracks_csv(write_text(tmp_path / "run.csv", "id,t,lane,s,v,a\nego,0,0,0,1,0\n"))
        assert e.value.row == 1

    def test_non_numeric_cell_reports_row(self, tmp_path):
        path = write_text(tmp_path / "run.csv", HEADER + "ego,0,0,0,1,0\nego,0.05,0,abc,1,0\n")
        with pytest.raises(SchemaError) as e:
            read_tracks_csv(path)
        assert e.value.row == 3
        assert e.value.path == path

    def test_non_integer_lane(self, tmp_path):
        with pytest.raises(SchemaError) as e:
            read_tracks_csv(write_text(tmp_path / "run.csv", HEADER + "ego,0,0.5,0,1,0\n"))
        assert e.value.row == 2

    def test_negative_speed(self, tmp_path):
        with pytest.raises(SchemaError) as e:
            read_tracks_csv(write_text(tmp_path / "run.csv", HEADER + "ego,0,0,0,1,0\nego,0.05,0,1,-1,0\n"))
        assert e.value.row == 3

    def test_time_must_increase_per_vehicle(self, tmp_path):
        text = HEADER + "ego,0,0,0,1,0\nlead,0,0,50,1,0\nego,0,0,1,1,0\n"
        with pytest.raises(SchemaError) as e:
            read_tracks_csv(write_text(tmp_path / "run.csv", text))
        assert e.value.row == 4

    def test_interleaved_vehicles(self, tmp_path):
        text = HEADER + "ego,0,0,0,1,0\nlead,0,0,50,1,0\nego,0.05,0,0.05,1,0\nlead,0.05,0,50.05,1,0\n"
        loaded = read_tracks_csv(write_text(tmp_path / "run.csv", text))
        assert [t.vehicle_id for t in loaded] == ["ego", "lead"]
        np.testing.assert_allclose(loaded[1].s, [50.0, 50.05])


def test_metric_file_round_trip(tmp_path, config):
    snaps = [snapshot(10.0 + 0.1 * i, [(0, dict(leader_speed=10.0, leader_gap=50.0 - i))], time=0.05 * i)
             for i in range(5)]
    series = evaluate_series(snaps, config, vehicle_id="ego")
    baseline = np.linspace(0.1, 0.5, 5)
    path = str(tmp_path / "metrics" / "E1" / "ego.csv")
    write_metric_csv(path, series, baseline)
    frame = read_metric_csv(path)
    assert list(frame.columns) == METRIC_COLUMNS
    np.testing.assert_allclose(frame["A"], series.available_space, rtol=1e-8, atol=1e-12)
    np.testing.assert_allclose(frame["dA"], series.delta, rtol=1e-8, atol=1e-12)
    np.testing.assert_allclose(frame["baseline"], baseline, rtol=1e-8)


def test_metric_file_header_is_checked(tmp_path):
    with pytest.raises(SchemaError):
        read_metric_csv(write_text(tmp_path / "m.csv", "vehicle_id,time\nego,0\n"))


class TestManifest:
    def test_round_trip(self, tmp_path):
        manifest = {"name": "t", "events": [{"event_id": "E1"}]}
        path = write_manifest(str(tmp_path), manifest)
        assert os.path.basename(path) == "manifest.json"
        assert read_manifest(str(tmp_path)) == manifest

    def test_missing(self, tmp_path):
        with pytest.raises(InputError):
            read_manifest(str(tmp_path))

    def test_without_events(self, tmp_path):
        write_text(tmp_path / "manifest.json", json.dumps({"name": "t"}))
        with pytest.raises(SchemaError):
            read_manifest(str(tmp_path))

    def test_empty_events(self, tmp_path):
        write_text(tmp_path / "manifest.json", json.dumps({"events": []}))
        with pytest.raises(InputError):
            read_manifest(str(tmp_path))

    def test_invalid_json(self, tmp_path):
        with pytest.raises(SchemaError) as e:
            read_json(write_text(tmp_path / "manifest.json", "{\n  \"events\": [\n"))
        assert e.value.row is not None
