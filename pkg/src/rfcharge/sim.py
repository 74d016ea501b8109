"""Slotted Monte-Carlo evaluation of planning policies.

``single`` mode re-plans every slot from the exact battery levels reported by
the nodes; ``multi`` mode plans once for the whole horizon and keeps that
schedule.  In both modes the true gains of an episode are drawn up front as an
``(n_nodes, horizon)`` matrix, so the two modes (and different policies) see
identical channel realizations for the same seed and episode.
"""

from __future__ import annotations

import enum
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from functools import partial

import numpy as np

from . import baselines, saa
from .channels import ChannelModel, GainStream
from .model import ProblemInstance, Schedule
from .recourse import rollout

TAG_TRUE_GAINS = 3
TAG_PLANNER = 4

POLICIES = ("spsaa", "min_gain", "avg_gain", "max_gain")


class Mode(str, enum.Enum):
    SINGLE = "single"
    MULTI = "multi"


class PlannerError(RuntimeError):
    pass


@dataclass(frozen=True)
class PolicyConfig:
    name: str = "spsaa"
    saa: saa.SaaConfig = field(default_factory=saa.SaaConfig)
    adaptive: bool = False  # grow M, N until the gap variance target is met

    def __post_init__(self):
        if self.name not in POLICIES:
            raise ValueError(f"unknown policy {self.name!r}; expected one of {POLICIES}")


@dataclass(frozen=True)
class SimConfig:
    mode: Mode = Mode.MULTI
    horizon: int = 2
    episodes: int = 100
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "mode", Mode(self.mode))
        if self.horizon < 1:
            raise ValueError("horizon must be positive")
        if self.episodes < 1:
            raise ValueError("episodes must be positive")


@dataclass(frozen=True, eq=False)
class SlotRecord:
    slot: int
    schedule: Schedule
    gains: np.ndarray
    idle: np.ndarray
    battery_before: np.ndarray
    battery: np.ndarray
    spill: np.ndarray
    harvest: np.ndarray
    var_gap: float = 0.0
    converged: bool = True

    @property
    def total_idle(self) -> float:
        return float(self.idle.sum())

    def consumed(self, inst: ProblemInstance) -> np.ndarray:
        return inst.consume_power * (self.schedule.T - self.idle)


def planner_seed(seed: int, episode: int, slot: int) -> int:
    ss = np.random.SeedSequence(seed, spawn_key=(TAG_PLANNER, episode, slot))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def plan(inst: ProblemInstance, model: ChannelModel, horizon: int, policy: PolicyConfig, seed: int):
    """Schedule for the next ``horizon`` slots plus (var_gap, converged)."""
    if policy.name == "spsaa":
        solver = saa.adaptive_run if policy.adaptive else saa.solve_saa
        report = solver(inst, model, horizon, replace(policy.saa, seed=seed))
        return report.best_schedule, report.var_gap, report.converged
    gain = baselines.BASELINE_GAINS[policy.name]
    return baselines.fixed_gain_schedule(inst, gain, horizon), 0.0, True


def true_gains(model: ChannelModel, simcfg: SimConfig, n_nodes: int, episode: int) -> np.ndarray:
    return GainStream(model, simcfg.seed, (TAG_TRUE_GAINS, episode)).draw((n_nodes, simcfg.horizon))


def run_episode(inst: ProblemInstance, model: ChannelModel, simcfg: SimConfig,
                policy: PolicyConfig, episode: int = 0) -> list[SlotRecord]:
    gains = true_gains(model, simcfg, inst.n_nodes, episode)
    records = []
    if simcfg.mode is Mode.SINGLE:
        state = inst
        for t in range(simcfg.horizon):
            try:
                sched, var_gap, ok = plan(state, model, 1, policy, planner_seed(simcfg.seed, episode, t))
            except (saa.SaaError, ValueError) as exc:
                raise PlannerError(f"episode {episode}, slot {t}: {exc}") from exc
            idle, battery, spill, harvest = rollout(state, sched, gains[:, t:t + 1])
            records.append(SlotRecord(t, sched, gains[:, t].copy(), idle[:, 0], state.b0,
                                      battery[:, 0], spill[:, 0], harvest[:, 0], var_gap, ok))
            state = state.with_battery(battery[:, 0])
        return records
    try:
        sched, var_gap, ok = plan(inst, model, simcfg.horizon, policy, planner_seed(simcfg.seed, episode, 0))
    except (saa.SaaError, ValueError) as exc:
        raise PlannerError(f"episode {episode}, slot 0: {exc}") from exc
    idle, battery, spill, harvest = rollout(inst, sched, gains)
    before = np.column_stack([inst.b0, battery[:, :-1]])
    for t in range(simcfg.horizon):
        records.append(SlotRecord(t, sched, gains[:, t].copy(), idle[:, t], before[:, t],
                                  battery[:, t], spill[:, t], harvest[:, t], var_gap, ok))
    return records


@dataclass(frozen=True)
class SimSummary:
    mean_idle: float  # total idle over all nodes, per slot
    se_idle: float
    mean_z: float
    se_z: float
    mean_tau: float
    se_tau: float
    episodes: int
    slots: int
    var_gap: float  # worst planner gap variance seen
    converged: bool


def _mean_se(values) -> tuple[float, float]:
    v = np.asarray(values, dtype=float)
    if v.size < 2:
        return float(v.mean()), 0.0
    return float(v.mean()), float(v.std(ddof=1) / math.sqrt(v.size))


def aggregate(episodes: list[list[SlotRecord]]) -> SimSummary:
    """Slot-average within each episode, then mean and standard error across episodes."""
    if not episodes or not all(episodes):
        raise ValueError("need at least one nonempty episode")
    idle = [np.mean([r.total_idle for r in ep]) for ep in episodes]
    z = [np.mean([r.schedule.z for r in ep]) for ep in episodes]
    tau = [np.mean([r.schedule.tau for r in ep]) for ep in episodes]
    recs = [r for ep in episodes for r in ep]
    return SimSummary(*_mean_se(idle), *_mean_se(z), *_mean_se(tau),
                      episodes=len(episodes), slots=len(episodes[0]),
                      var_gap=max(r.var_gap for r in recs),
                      converged=all(r.converged for r in recs))


def simulate(inst, model, simcfg: SimConfig, policy: PolicyConfig, workers: int = 1):
    """All episodes of one cell; results are merged in episode order."""
    job = partial(run_episode, inst, model, simcfg, policy)
    if workers > 1 and simcfg.episodes > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            episodes = list(pool.map(job, range(simcfg.episodes)))
    else:
        episodes = [job(e) for e in range(simcfg.episodes)]
    return aggregate(episodes), episodes
