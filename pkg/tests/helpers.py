"""Builders shared by the test modules"""
import numpy as np
import yaml

from src.models.scenario import LeadProfile, MergeResistance, ScenarioKind, ScenarioSpec
from src.models.trajectory import EventWindow, LaneContext, SceneSnapshot, VehicleTrack


def constant_track(vehicle_id, speed, s0=0.0, duration=10.0, dt=0.05, lane=0, t0=0.0):
    """Uniform-motion track sampled on a regular grid"""
    n = int(round(duration / dt)) + 1
    t = t0 + np.arange(n) * dt
    return VehicleTrack(
        vehicle_id,
        t,
        np.full(n, lane),
        s0 + speed * (t - t0),
        np.full(n, float(speed)),
        np.zeros(n),
    )


def snapshot(ego_speed, lanes, ego_lane=None, speed_limit=33.33, time=0.0):
    contexts = tuple(LaneContext(lane_id=i, **kw) for i, kw in lanes)
    return SceneSnapshot(
        time=time,
        ego_speed=ego_speed,
        ego_lane=contexts[0].lane_id if ego_lane is None else ego_lane,
        candidate_lanes=contexts,
        speed_limit=speed_limit,
    )


def small_scenario(event_id="T1", platoon_size=6, probability=0.0, seed=7, **overrides):
    """Short incident event for fast simulator tests"""
    values = dict(
        event_id=event_id,
        kind=ScenarioKind.INCIDENT,
        route_length=700.0,
        constraint_s=450.0,
        window=EventWindow(event_id=event_id, start_s=0.0, end_s=600.0),
        platoon_size=platoon_size,
        platoon_head_s=200.0,
        lead_profile=LeadProfile(base_speed=8.33, amplitude=1.5, period=40.0),
        merge_resistance=MergeResistance(probability=probability),
        platoon_seed=seed,
    )
    values.update(overrides)
    return ScenarioSpec(**values)


def mini_config(**overrides):
    """One short incident event and two hand-picked policies"""
    data = {
        "name": "mini",
        "simulation": {"max_duration": 300.0},
        "grid": {"step": 0.5},
        "scenario_defaults": {
            "platoon_size": 6,
            "platoon_head_s": 200.0,
            "lead_profile": {"base_speed": 8.33, "amplitude": 1.5, "period": 40.0},
            "merge_resistance": {"probability": 0.0},
        },
        "scenarios": [{
            "event_id": "T1",
            "kind": "A",
            "route_length": 700.0,
            "constraint_s": 450.0,
            "window": {"start_s": 0.0, "end_s": 600.0},
            "platoon_seed": 7,
        }],
        "policies": [
            {"policy_id": "early", "kind": "early-merge", "speed_multiplier": 0.9,
             "commit_distance": 400.0, "gap_acceptance": 0.5},
            {"policy_id": "late", "kind": "late-merge", "speed_multiplier": 0.9,
             "commit_distance": 80.0, "gap_acceptance": 0.3},
        ],
    }
    data.update(overrides)
    return data


def write_config(path, data):
    with open(path, "w", encoding="utf-8") as f:
        yaml.safe_dump(data, f, sort_keys=False)
    return str(path)
