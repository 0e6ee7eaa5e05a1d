"""
Run configuration: one YAML document drives every command
"""
import logging
import os
from dataclasses import dataclass, field, replace
from typing import Any, Dict, List, Optional

import yaml

from ..models.calibration import GridSpec
from ..models.errors import ConfigError
from ..models.metric import BaselineConfig, PassConfig, SceneConfig
from ..models.scenario import (
    EgoPolicy,
    IdmParams,
    LeadProfile,
    MergeResistance,
    ScenarioKind,
    ScenarioSpec,
    SimConfig,
)
from ..models.trajectory import EventWindow, Route
from ..services.policy_service import build_policy_family
from . import settings

LOG = logging.getLogger(__name__)


@dataclass
class RunConfig:
    name: str
    pass_config: PassConfig
    baseline: BaselineConfig
    scene: SceneConfig
    simulation: SimConfig
    scenarios: List[ScenarioSpec]
    policies: List[EgoPolicy]
    grid: GridSpec = field(default_factory=GridSpec)
    seeds: Optional[List[int]] = None
    route: Optional[Route] = None
    output_dir: str = settings.PASS_OUTPUT_DIR
    dataset_dir: Optional[str] = None
    strict: bool = settings.PASS_STRICT

    @property
    def resolved_dataset_dir(self) -> str:
        return self.dataset_dir or self.output_dir


def _section(data: Dict, key: str) -> Dict:
    value = data.get(key) or {}
    if not isinstance(value, dict):
        raise ConfigError("expected a mapping", key=key)
    return value


def _build(cls, values: Dict, key: str):
    """Construct a config dataclass, turning bad fields into ConfigError"""
    try:
        return cls(**values)
    except TypeError as e:
        raise ConfigError(str(e), key=key) from e
    except ValueError as e:
        raise ConfigError(str(e), key=key) from e


def _pair(value: Any, key: str):
    if not isinstance(value, (list, tuple)) or len(value) != 2:
        raise ConfigError(f"expected a [low, high] pair, got {value!r}", key=key)
    return float(value[0]), float(value[1])


def _scenario(entry: Dict, defaults: Dict, index: int) -> ScenarioSpec:
    merged = {**defaults, **entry}
    key = f"scenarios[{index}]"
    try:
        event_id = str(merged["event_id"])
        kind = ScenarioKind(str(merged["kind"]))
        window = _section(merged, "window")
        speed_limit = float(merged.get("speed_limit", 22.22))
        idm = dict(_section(merged, "follower_idm"))
        idm.setdefault("desired_speed", speed_limit)
        lead = None
        if merged.get("lead_profile"):
            lead = dict(_section(merged, "lead_profile"))
            lead.setdefault("base_speed", kind.lead_speed)
            lead = _build(LeadProfile, lead, f"{key}.lead_profile")
        start_speed = merged.get("ego_start_speed")
        merge_start = merged.get("merge_start_s")
        return ScenarioSpec(
            event_id=event_id,
            kind=kind,
            route_length=float(merged["route_length"]),
            constraint_s=float(merged["constraint_s"]),
            window=EventWindow(event_id=event_id, start_s=float(window["start_s"]), end_s=float(window["end_s"])),
            speed_limit=speed_limit,
            platoon_size=int(merged.get("platoon_size", 12)),
            platoon_head_s=float(merged.get("platoon_head_s", 300.0)),
            lead_profile=lead,
            merge_resistance=_build(MergeResistance, _section(merged, "merge_resistance"), f"{key}.merge_resistance"),
            follower_idm=_build(IdmParams, idm, f"{key}.follower_idm"),
            headway_range=_pair(merged.get("headway_range", [1.0, 2.0]), f"{key}.headway_range"),
            ego_start_s=float(merged.get("ego_start_s", -30.0)),
            ego_start_speed=None if start_speed is None else float(start_speed),
            merge_start_s=None if merge_start is None else float(merge_start),
            platoon_seed=int(merged.get("platoon_seed", index)),
        )
    except KeyError as e:
        raise ConfigError(f"missing field {e}", key=key) from e
    except ValueError as e:
        raise ConfigError(str(e), key=key) from e


def parse_run_config(data: Dict) -> RunConfig:
    """
    Validate a loaded YAML document into a RunConfig

    Raises:
        ConfigError: with the offending key
    """
    if not isinstance(data, dict):
        raise ConfigError("run configuration must be a mapping")

    pass_config = _build(PassConfig, _section(data, "pass"), "pass")
    baseline = _build(BaselineConfig, _section(data, "baseline"), "baseline")
    scene = _build(SceneConfig, _section(data, "scene"), "scene")

    sim_data = dict(_section(data, "simulation"))
    route_points = sim_data.pop("route", None)
    sim_data.setdefault("workers", settings.PASS_WORKERS)
    simulation = _build(SimConfig, sim_data, "simulation")
    route = Route.from_config(route_points) if route_points else None
    if simulation.coordinates == "xy" and route is None:
        raise ConfigError("xy coordinates need simulation.route", key="simulation.route")

    defaults = _section(data, "scenario_defaults")
    entries = data.get("scenarios") or []
    if not entries:
        raise ConfigError("at least one scenario is required", key="scenarios")
    scenarios = [_scenario(entry, defaults, i) for i, entry in enumerate(entries)]
    ids = [s.event_id for s in scenarios]
    if len(set(ids)) != len(ids):
        raise ConfigError(f"duplicate event ids in {ids}", key="scenarios")

    if data.get("policies"):
        policies = [EgoPolicy.from_dict(p) for p in data["policies"]]
    else:
        family = _section(data, "policy_family")
        policies = build_policy_family(int(family.get("count", 43)), int(family.get("max_gap_index", 12)))

    grid_data = _section(data, "grid")
    grid = GridSpec(
        k1_range=_pair(grid_data.get("k1_range", [-1.0, 0.0]), "grid.k1_range"),
        k2_range=_pair(grid_data.get("k2_range", [0.0, 1.0]), "grid.k2_range"),
        step=float(grid_data.get("step", 0.01)),
    )

    seeds = data.get("seeds")
    if seeds is not None:
        if len(seeds) != len(scenarios):
            raise ConfigError(f"{len(seeds)} seeds for {len(scenarios)} scenarios", key="seeds")
        seeds = [int(s) for s in seeds]

    return RunConfig(
        name=str(data.get("name", "run")),
        pass_config=pass_config,
        baseline=baseline,
        scene=scene,
        simulation=simulation,
        scenarios=scenarios,
        policies=policies,
        grid=grid,
        seeds=seeds,
        route=route,
        output_dir=str(data.get("output_dir") or settings.PASS_OUTPUT_DIR),
        dataset_dir=data.get("dataset_dir"),
        strict=bool(data.get("strict", settings.PASS_STRICT)),
    )


def load_run_config(path: Optional[str] = None) -> RunConfig:
    """
    Load and validate the YAML run configuration

    Raises:
        ConfigError: unreadable file or invalid content
    """
    path = path or settings.PASS_CONFIG_PATH
    if not os.path.exists(path):
        raise ConfigError(f"config file not found: {path}", key="config")
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = yaml.safe_load(f)
    except yaml.YAMLError as e:
        raise ConfigError(f"invalid YAML: {e}", key="config") from e
    config = parse_run_config(data)
    LOG.debug("Loaded run config %s from %s", config.name, path)
    return config


def with_overrides(
    config: RunConfig,
    out_dir: Optional[str] = None,
    dataset_dir: Optional[str] = None,
    k1_range=None,
    k2_range=None,
    step: Optional[float] = None,
    strict: Optional[bool] = None,
) -> RunConfig:
    """Command-line flags win over the config file"""
    grid = config.grid
    if k1_range is not None or k2_range is not None or step is not None:
        grid = GridSpec(
            k1_range=k1_range or grid.k1_range,
            k2_range=k2_range or grid.k2_range,
            step=step or grid.step,
        )
    return replace(
        config,
        output_dir=out_dir or config.output_dir,
        dataset_dir=dataset_dir or config.dataset_dir,
        grid=grid,
        strict=config.strict if strict is None else strict,
    )
