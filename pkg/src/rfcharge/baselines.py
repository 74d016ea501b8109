"""Fixed-gain planners: pretend every gain equals a constant and solve the
resulting deterministic program through the same builder/LP path as SAA."""

from __future__ import annotations

import functools
from dataclasses import dataclass

from . import detequiv, saa
from .channels import ChannelModel, GainStream, sample_bundle
from .lp import solve
from .model import ProblemInstance, Schedule

BASELINE_GAINS = {"min_gain": 0.01, "avg_gain": 0.5, "max_gain": 1.0}


@functools.lru_cache(maxsize=4096)
def fixed_gain_schedule(inst: ProblemInstance, assumed_gain: float, horizon: int = 1) -> Schedule:
    if not 0 < assumed_gain <= 1:
        raise ValueError("assumed gain must lie in (0, 1]; a zero gain means certain starvation")
    stream = GainStream(ChannelModel.fixed(assumed_gain), 0)
    bundle = detequiv.ScenarioBundle(sample_bundle(stream, 1, inst.n_nodes, horizon))
    lp = detequiv.build(inst, bundle)
    sol = solve(lp)
    if not sol.optimal:
        raise saa.SaaError(f"fixed-gain program at g={assumed_gain} is {sol.status.value}")
    return detequiv.schedule_from_solution(lp, sol, inst.slot_seconds)


def balance_schedule(inst: ProblemInstance, gain: float) -> Schedule:
    """Closed form for empty batteries and identical nodes: harvest == consumption."""
    tau = inst.consume_power * inst.slot_seconds / (
        inst.consume_power + inst.n_nodes * inst.harvest_rate * gain)
    return Schedule.from_sample_times([(inst.slot_seconds - tau) / inst.n_nodes] * inst.n_nodes,
                                      inst.slot_seconds)


@dataclass(frozen=True)
class BaselineMetrics:
    z: float
    tau: float
    mean_idle: float
    idle_var: float
    objective: float


def evaluate_baseline(inst, sched: Schedule, model: ChannelModel, horizon: int, n_eval: int,
                      seed: int) -> BaselineMetrics:
    ev = saa.evaluate(inst, sched, model, horizon, n_eval, seed)
    return BaselineMetrics(sched.z, sched.tau, ev.mean_idle, ev.idle_var, ev.objective)
