"""Closed-form second stage.

Given a schedule, a node idles exactly as long as its stored plus harvested
energy cannot cover its assignment.  Idling more never helps (each Joule
saved buys at most ``1/P_c`` seconds later), so the slot-by-slot minimal idle
recursion is optimal for the multi-slot LP as well.
"""

from __future__ import annotations

import numpy as np

from .model import ProblemInstance, RecourseOutcome, Scenario, Schedule

# shortfalls below this many seconds are rounding noise from the LP
IDLE_SNAP = 1e-12


def rollout(inst: ProblemInstance, sched: Schedule, gains, battery_init=None):
    """Battery recursion over a batch of scenarios.

    ``gains`` has shape ``(..., n_nodes, horizon)``.  Returns ``(idle,
    battery, spill, harvest)`` arrays of the same shape, where ``battery`` is
    the level at the end of each slot.
    """
    g = np.asarray(gains, dtype=float)
    if g.shape[-2] != inst.n_nodes or sched.n_nodes != inst.n_nodes:
        raise ValueError("gain matrix, schedule and instance disagree on node count")
    pc = inst.consume_power
    T = sched.T
    b = inst.b0 if battery_init is None else np.asarray(battery_init, dtype=float)
    b = np.broadcast_to(b, g.shape[:-1]).copy()
    harvest = inst.harvest_rate * g * sched.tau
    idle = np.empty_like(g)
    battery = np.empty_like(g)
    spill = np.empty_like(g)
    for t in range(g.shape[-1]):
        avail = b + harvest[..., t]
        y = T - avail / pc
        y = np.where(y > IDLE_SNAP, y, 0.0)
        left = np.maximum(avail - pc * (T - y), 0.0)
        b = np.minimum(left, inst.battery_cap)
        idle[..., t] = y
        battery[..., t] = b
        spill[..., t] = left - b
    return idle, battery, spill, harvest


def recourse_single(inst: ProblemInstance, sched: Schedule, scen: Scenario) -> RecourseOutcome:
    if scen.horizon != 1:
        raise ValueError("single-slot recourse needs a horizon-1 scenario")
    idle, battery, spill, _ = rollout(inst, sched, scen.gains)
    penalty = float((inst.w[:, None] * idle).sum())
    return RecourseOutcome(idle, battery, spill, penalty, penalty)


def recourse_multi(inst: ProblemInstance, sched: Schedule, scen: Scenario) -> RecourseOutcome:
    idle, battery, spill, _ = rollout(inst, sched, scen.gains)
    penalty = float((inst.w[:, None] * idle).sum())
    value = scen.horizon * sched.z - float(idle.sum())
    return RecourseOutcome(idle, battery, spill, penalty, value)


def surplus_energy(inst: ProblemInstance, sched: Schedule, scen) -> np.ndarray:
    """Signed per-node energy left after one slot, ignoring the battery cap."""
    g = scen.gains if isinstance(scen, Scenario) else np.asarray(scen, dtype=float)
    if g.shape[-1] != 1:
        raise ValueError("surplus energy is defined for one slot")
    g = g[..., 0]
    return inst.b0 + inst.harvest_rate * g * sched.tau - inst.consume_power * sched.T


def scenario_values(inst: ProblemInstance, sched: Schedule, bundle):
    """Per-scenario first-stage objective, total idle and weighted idle.

    ``bundle`` is ``(S, n, H)``.  Horizon 1 scores ``Z - sum(w*y)``; longer
    horizons score ``H*Z - sum(y)``.
    """
    bundle = np.asarray(bundle, dtype=float)
    idle, *_ = rollout(inst, sched, bundle)
    horizon = bundle.shape[-1]
    total_idle = idle.sum(axis=(-2, -1))
    penalty = np.einsum("...it,i->...", idle, inst.w)
    if horizon == 1:
        values = sched.z - penalty
    else:
        values = horizon * sched.z - total_idle
    return values, total_idle, penalty
