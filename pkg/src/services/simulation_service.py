"""
Simulation Service
Deterministic mandatory-lane-change simulator: IDM platoon behind a sinusoidal
leader in the target lane, a scripted ego that must leave its lane before a
stop point, and probabilistic merge resistance by the gap follower.
"""
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import List, Optional, Sequence

import numpy as np

from ..models.errors import CollisionError, ConfigError, PipelineWarning
from ..models.scenario import (
    EGO_LANE,
    TARGET_LANE,
    EgoPolicy,
    IdmParams,
    PolicyKind,
    RunResult,
    ScenarioSpec,
    SimConfig,
)
from ..models.trajectory import EventWindow, VehicleTrack
from .idm_service import idm_accel, idm_accel_array, lead_speed
from .policy_service import derive_seed

LOG = logging.getLogger(__name__)

# Gap-alignment controller gains
POSITION_GAIN = 0.3
SPEED_GAIN = 1.0
ALIGN_MARGIN = 3.0
LEADER_MAX_ACCEL = 3.0


class EgoPhase(Enum):
    CRUISE = "cruise"
    SEEK = "seek"
    COMMIT = "commit"
    MERGED = "merged"


@dataclass
class MergeAttempt:
    """One try at a target gap; the gap follower decides once whether to resist"""
    gap: int
    drawn: bool = False
    resisting: bool = False


@dataclass
class World:
    """Mutable state of one run; platoon index 0 is the leader"""
    spec: ScenarioSpec
    policy: EgoPolicy
    sim: SimConfig
    ego_params: IdmParams
    s: np.ndarray
    v: np.ndarray
    accel: np.ndarray
    headway: np.ndarray
    active_headway: np.ndarray
    ego_s: float
    ego_v: float
    ego_a: float = 0.0
    ego_lane: int = EGO_LANE
    phase: EgoPhase = EgoPhase.CRUISE
    target_gap: Optional[int] = None
    target_since: float = 0.0
    attempt: Optional[MergeAttempt] = None
    commit_timer: float = 0.0
    merged_gap: Optional[int] = None
    merge_time: Optional[float] = None
    step_index: int = 0
    attempts: int = 0
    resisted: int = 0

    @property
    def time(self) -> float:
        return self.step_index * self.sim.dt

    @property
    def platoon_size(self) -> int:
        return int(self.s.size)


def spawn_world(spec: ScenarioSpec, policy: EgoPolicy, sim: SimConfig = SimConfig()) -> World:
    """
    Initial state: platoon at IDM equilibrium spacing behind its leader, ego at its spawn point.

    Spawn headways come from the platoon seed so every run of an event replays
    the same surrounding traffic.
    """
    n = spec.platoon_size
    rng = np.random.default_rng(spec.platoon_seed)
    headway = rng.uniform(spec.headway_range[0], spec.headway_range[1], size=n)

    v0 = lead_speed(0.0, spec.lead_profile)
    idm = spec.follower_idm
    s = np.zeros(n)
    if n:
        s[0] = spec.platoon_head_s
        free = 1.0 - (v0 / idm.desired_speed) ** idm.delta
        for i in range(1, n):
            equilibrium = (idm.min_gap + v0 * headway[i]) / math.sqrt(free)
            s[i] = s[i - 1] - sim.vehicle_length - equilibrium

    ego_params = IdmParams(
        desired_speed=policy.speed_multiplier * spec.speed_limit,
        min_gap=idm.min_gap,
        time_headway=sim.ego_time_headway,
        max_accel=sim.ego_max_accel,
        comfortable_decel=sim.ego_comfortable_decel,
        delta=idm.delta,
    )
    return World(
        spec=spec, policy=policy, sim=sim, ego_params=ego_params,
        s=s, v=np.full(n, v0), accel=np.zeros(n),
        headway=headway, active_headway=headway.copy(),
        ego_s=spec.ego_start_s, ego_v=spec.ego_start_speed,
    )


def _gap_members(world: World, gap: int):
    """Platoon indices in front of and behind gap k (None at the platoon ends)"""
    front = gap - 1 if gap > 0 else None
    rear = gap if gap < world.platoon_size else None
    return front, rear


def _required_gaps(world: World, front: Optional[int], rear: Optional[int]):
    sim, h = world.sim, world.policy.gap_acceptance
    need_front = need_rear = 0.0
    if front is not None:
        closing = max(world.ego_v - world.v[front], 0.0)
        need_front = sim.acceptance_min_gap + 0.5 * h * world.ego_v + closing ** 2 / (2.0 * sim.acceptance_decel)
    if rear is not None:
        closing = max(world.v[rear] - world.ego_v, 0.0)
        need_rear = sim.acceptance_min_gap + h * world.v[rear] + closing ** 2 / (2.0 * sim.acceptance_decel)
    return need_front, need_rear


def gap_acceptable(world: World, gap: int) -> bool:
    """Whether the ego may move into target gap k right now"""
    front, rear = _gap_members(world, gap)
    need_front, need_rear = _required_gaps(world, front, rear)
    length = world.sim.vehicle_length
    if front is not None and world.s[front] - length - world.ego_s < need_front:
        return False
    if rear is not None and world.ego_s - length - world.s[rear] < need_rear:
        return False
    return True


def _align_accel(world: World, gap: int) -> float:
    """Acceleration steering the ego alongside target gap k"""
    front, rear = _gap_members(world, gap)
    if front is None and rear is None:
        return math.inf
    need_front, need_rear = _required_gaps(world, front, rear)
    length = world.sim.vehicle_length

    if front is not None and rear is not None:
        free = world.s[front] - world.s[rear] - 2.0 * length
        share = need_rear / (need_rear + need_front) if need_rear + need_front > 0 else 0.5
        target = world.s[rear] + length + free * share
        v_ref = 0.5 * (world.v[front] + world.v[rear])
    elif rear is not None:
        target = world.s[rear] + length + need_rear + ALIGN_MARGIN
        v_ref = world.v[rear]
        if world.ego_s >= target or world.ego_v >= v_ref + POSITION_GAIN * (target - world.ego_s):
            return math.inf
    else:
        target = world.s[front] - length - need_front - ALIGN_MARGIN
        v_ref = world.v[front]

    v_target = min(max(v_ref + POSITION_GAIN * (target - world.ego_s), 0.0), world.ego_params.desired_speed)
    return min(max(SPEED_GAIN * (v_target - world.ego_v), -world.sim.align_decel), world.sim.ego_max_accel)


def _alongside(world: World) -> int:
    """Gap index level with the ego: the number of platoon vehicles ahead of it"""
    return int(np.count_nonzero(world.s > world.ego_s))


def _initial_target(world: World) -> int:
    if world.policy.kind is PolicyKind.TARGET_GAP:
        return min(world.policy.gap_index, world.platoon_size)
    return _alongside(world)


def _next_target(world: World) -> int:
    """One gap further back, never a gap the platoon has already carried past the ego"""
    return min(max(world.target_gap + 1, _alongside(world)), world.platoon_size)


def _resolve_attempt(world: World):
    attempt = world.attempt
    if attempt is not None and attempt.resisting:
        _, rear = _gap_members(world, attempt.gap)
        if rear is not None:
            world.active_headway[rear] = world.headway[rear]
    world.attempt = None


def _start_attempt(world: World, gap: int):
    _resolve_attempt(world)
    world.attempt = MergeAttempt(gap=gap)
    world.attempts += 1


def _update_intent(world: World, rng: np.random.Generator):
    """Ego state machine: cruise, seek a gap, commit for a fixed delay, merge"""
    t = world.time
    policy, resistance = world.policy, world.spec.merge_resistance

    if world.phase is EgoPhase.CRUISE:
        if world.spec.constraint_s - world.ego_s > policy.commit_distance:
            return
        opens = world.spec.merge_start_s
        if opens is not None and world.ego_s < opens:
            return
        world.phase = EgoPhase.SEEK
        world.target_gap = _initial_target(world)
        world.target_since = t
        _start_attempt(world, world.target_gap)
        LOG.debug("%s seeks gap %d at t=%.2f", policy.policy_id, world.target_gap, t)

    if world.phase is EgoPhase.MERGED:
        return

    attempt = world.attempt
    _, rear = _gap_members(world, attempt.gap)
    if not attempt.drawn and rear is not None and abs(world.s[rear] - world.ego_s) <= resistance.detection_range:
        attempt.drawn = True
        attempt.resisting = bool(rng.random() < resistance.probability)
        if attempt.resisting:
            world.active_headway[rear] = resistance.reduced_headway
            world.resisted += 1

    # a resisting follower refuses the gap until the attempt ends
    ok = gap_acceptable(world, world.target_gap) and not attempt.resisting
    if world.phase is EgoPhase.SEEK:
        if ok:
            world.phase = EgoPhase.COMMIT
            world.commit_timer = 0.0
        elif t - world.target_since >= policy.patience and world.target_gap < world.platoon_size:
            world.target_gap = _next_target(world)
            world.target_since = t
            _start_attempt(world, world.target_gap)
        return

    if not ok:
        world.phase = EgoPhase.SEEK
        return
    world.commit_timer += world.sim.dt
    if world.commit_timer >= world.sim.commit_delay - 1e-9:
        _resolve_attempt(world)
        world.phase = EgoPhase.MERGED
        world.ego_lane = TARGET_LANE
        world.merged_gap = world.target_gap
        world.merge_time = t
        LOG.debug("%s merged into gap %d at t=%.2f", policy.policy_id, world.merged_gap, t)


def _platoon_accel(world: World, t_next: float) -> np.ndarray:
    sim, spec = world.sim, world.spec
    n = world.platoon_size
    if n == 0:
        return np.zeros(0)
    length = sim.vehicle_length

    lead_s = np.empty(n)
    lead_v = np.empty(n)
    lead_s[1:] = world.s[:-1]
    lead_v[1:] = world.v[:-1]
    lead_s[0] = math.inf
    lead_v[0] = 0.0
    merged_gap = world.merged_gap
    if merged_gap is not None and merged_gap < n:
        lead_s[merged_gap] = world.ego_s
        lead_v[merged_gap] = world.ego_v

    gap = lead_s - length - world.s
    finite = np.isfinite(gap)
    if np.any(gap[finite] <= 0):
        i = int(np.flatnonzero(finite & (gap <= 0))[0])
        leader = "ego" if merged_gap == i else f"p{i - 1:02d}"
        raise CollisionError(world.time, f"p{i:02d}", leader, float(gap[i]))

    desired = np.full(n, spec.follower_idm.desired_speed)
    accel = idm_accel_array(world.v, gap, world.v - lead_v, desired, world.active_headway,
                            spec.follower_idm, sim.hard_decel_floor)

    profile = (lead_speed(t_next, spec.lead_profile) - world.v[0]) / sim.dt
    profile = min(max(profile, sim.hard_decel_floor), LEADER_MAX_ACCEL)
    accel[0] = min(profile, accel[0]) if np.isfinite(gap[0]) else profile
    return accel


def _ego_accel(world: World) -> float:
    sim, spec = world.sim, world.spec
    length = sim.vehicle_length

    if world.phase is EgoPhase.MERGED:
        k = world.merged_gap
        if k is None or k == 0:
            return idm_accel(world.ego_v, None, 0.0, world.ego_params, sim.hard_decel_floor)
        gap = world.s[k - 1] - length - world.ego_s
        if gap <= 0:
            raise CollisionError(world.time, "ego", f"p{k - 1:02d}", gap)
        return idm_accel(world.ego_v, gap, world.ego_v - world.v[k - 1], world.ego_params, sim.hard_decel_floor)

    stop_gap = spec.constraint_s - length - world.ego_s
    if stop_gap <= 0:
        raise CollisionError(world.time, "ego", "stop point", stop_gap)
    accel = idm_accel(world.ego_v, stop_gap, world.ego_v, world.ego_params, sim.hard_decel_floor)
    if world.phase in (EgoPhase.SEEK, EgoPhase.COMMIT):
        accel = min(accel, _align_accel(world, world.target_gap))
    return max(accel, sim.hard_decel_floor)


def step(world: World, dt: float, rng: np.random.Generator) -> World:
    """
    Advance the world by one tick with semi-implicit Euler (v first, then s).

    The accelerations actually applied are left in world.accel / world.ego_a.

    Raises:
        CollisionError: any gap <= 0
    """
    _update_intent(world, rng)
    t_next = (world.step_index + 1) * dt
    platoon_accel = _platoon_accel(world, t_next)
    ego_accel = _ego_accel(world)

    v_new = np.maximum(world.v + platoon_accel * dt, 0.0)
    world.accel = (v_new - world.v) / dt
    world.v = v_new
    world.s = world.s + v_new * dt

    ego_v = max(world.ego_v + ego_accel * dt, 0.0)
    world.ego_a = (ego_v - world.ego_v) / dt
    world.ego_v = ego_v
    world.ego_s += ego_v * dt
    world.step_index += 1
    return world


class _Recorder:
    def __init__(self, n: int):
        self.n = n
        self.time: List[float] = []
        self.ego: List[tuple] = []
        self.platoon: List[tuple] = []

    def record(self, s: np.ndarray, v: np.ndarray, a: np.ndarray, ego: tuple, time: float):
        self.time.append(time)
        self.ego.append(ego)
        self.platoon.append((s, v, a))

    def tracks(self, ego_id: str, platoon_ids: Sequence[str]) -> List[VehicleTrack]:
        time = np.array(self.time)
        ego = np.array(self.ego, dtype=np.float64).reshape(-1, 4)
        tracks = [VehicleTrack(ego_id, time, ego[:, 0].astype(np.int64), ego[:, 1], ego[:, 2], ego[:, 3])]
        if self.n:
            s = np.array([p[0] for p in self.platoon])
            v = np.array([p[1] for p in self.platoon])
            a = np.array([p[2] for p in self.platoon])
            lane = np.full(time.size, TARGET_LANE, dtype=np.int64)
            for i, vid in enumerate(platoon_ids):
                tracks.append(VehicleTrack(vid, time, lane, s[:, i], v[:, i], a[:, i]))
        return tracks


def run_event(spec: ScenarioSpec, policy: EgoPolicy, seed: int, sim: SimConfig = SimConfig()) -> RunResult:
    """
    Simulate one ego run until it crosses the window end or max_duration expires.

    Deterministic in (spec, policy, seed). A run that never reaches the window end
    comes back with completed=False; a collision is raised.
    """
    rng = np.random.default_rng(seed)
    world = spawn_world(spec, policy, sim)
    recorder = _Recorder(world.platoon_size)
    ego_id = policy.policy_id
    platoon_ids = [f"{ego_id}/p{i:02d}" for i in range(world.platoon_size)]

    completed = False
    for _ in range(sim.max_steps):
        s, v, ego_state = world.s.copy(), world.v.copy(), (world.ego_lane, world.ego_s, world.ego_v)
        time = world.time
        try:
            step(world, sim.dt, rng)
        except CollisionError as e:
            raise CollisionError(time, f"{spec.event_id}:{e.follower}", e.leader, e.gap) from e
        recorder.record(s, v, world.accel.copy(), (*ego_state, world.ego_a), time)
        if world.ego_s >= spec.window.end_s:
            completed = True
            break

    recorder.record(world.s.copy(), world.v.copy(), world.accel.copy(),
                    (world.ego_lane, world.ego_s, world.ego_v, world.ego_a), world.time)
    if not completed:
        LOG.warning("⚠️ %s/%s did not reach the window end within %.0f s",
                    spec.event_id, ego_id, sim.max_duration)

    return RunResult(
        event_id=spec.event_id,
        policy_id=ego_id,
        ego_id=ego_id,
        tracks=recorder.tracks(ego_id, platoon_ids),
        completed=completed,
        merge_time=world.merge_time,
    )


@dataclass
class EventCohort:
    """All ego runs of one event under the same surrounding traffic"""
    spec: ScenarioSpec
    seed: int
    runs: List[RunResult]
    window: EventWindow
    warnings: List[PipelineWarning] = field(default_factory=list)


def _run_task(task) -> RunResult:
    spec, policy, seed, sim = task
    return run_event(spec, policy, seed, sim)


def generate_cohort(
    specs: Sequence[ScenarioSpec],
    policies: Sequence[EgoPolicy],
    seeds: Optional[Sequence[int]] = None,
    sim: SimConfig = SimConfig(),
) -> List[EventCohort]:
    """
    Run every policy on every event.

    seeds[i] (default: the scenario's platoon seed) fixes event i's surrounding traffic;
    merge-resistance draws are seeded per (event seed, policy id) so permuting the
    policy list only permutes the labels.

    Raises:
        ConfigError: duplicate event ids, fewer than two policies, mismatched seeds
    """
    ids = [spec.event_id for spec in specs]
    duplicates = sorted({x for x in ids if ids.count(x) > 1})
    if duplicates:
        raise ConfigError(f"duplicate event ids {duplicates}", key="scenarios")
    if len(policies) < 2:
        raise ConfigError(f"need at least two policies, got {len(policies)}", key="policies")
    policy_ids = [p.policy_id for p in policies]
    if len(set(policy_ids)) != len(policy_ids):
        raise ConfigError("duplicate policy ids", key="policies")
    if seeds is not None and len(seeds) != len(specs):
        raise ConfigError(f"{len(seeds)} seeds for {len(specs)} events", key="seeds")

    event_specs: List[ScenarioSpec] = []
    event_seeds: List[int] = []
    tasks = []
    for i, spec in enumerate(specs):
        seed = int(seeds[i]) if seeds is not None else spec.platoon_seed
        if seed != spec.platoon_seed:
            spec = _with_seed(spec, seed)
        event_specs.append(spec)
        event_seeds.append(seed)
        for policy in policies:
            tasks.append((spec, policy, derive_seed(seed, spec.event_id, policy.policy_id), sim))

    LOG.info("🚗 Simulating %d events x %d policies (%d workers)", len(specs), len(policies), sim.workers)
    if sim.workers > 1:
        with ProcessPoolExecutor(max_workers=sim.workers) as pool:
            results = list(pool.map(_run_task, tasks))
    else:
        results = [_run_task(task) for task in tasks]

    cohorts = []
    per_event = len(policies)
    for i, spec in enumerate(event_specs):
        runs = results[i * per_event:(i + 1) * per_event]
        warnings = [
            PipelineWarning(source=f"{spec.event_id}/{run.policy_id}", message="incomplete travel")
            for run in runs if not run.completed
        ]
        window = EventWindow(
            event_id=spec.event_id,
            start_s=spec.window.start_s,
            end_s=spec.window.end_s,
            vehicle_ids=tuple(run.ego_id for run in runs if run.completed),
        )
        cohorts.append(EventCohort(spec=spec, seed=event_seeds[i], runs=runs, window=window, warnings=warnings))
        LOG.info("✅ Event %s: %d/%d runs completed", spec.event_id, len(window.vehicle_ids), len(runs))
    return cohorts


def _with_seed(spec: ScenarioSpec, seed: int) -> ScenarioSpec:
    return replace(spec, platoon_seed=seed)
