"""Sample Average Approximation driver.

``M`` replications each solve the deterministic equivalent over ``N`` fresh
scenarios; every candidate is then scored on ``N'`` independent evaluation
scenarios and the best one is kept.  The gap between the replication mean
(an upper-bound estimate, since we maximize) and the winner's score, together
with its variance, tells whether ``M`` and ``N`` are large enough.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np

from . import detequiv
from .channels import ChannelModel, GainStream, sample_bundle
from .lp import solve
from .model import ProblemInstance, Schedule
from .recourse import scenario_values

log = logging.getLogger(__name__)

# seed-subspace tags keep replication and evaluation draws disjoint
TAG_REPLICATION = 1
TAG_EVALUATION = 2

N_CAP = 2 ** 14
M_CAP = 64


class SaaError(RuntimeError):
    pass


@dataclass(frozen=True)
class SaaConfig:
    m_replications: int = 10
    n_scenarios: int = 100
    n_eval: int = 2000
    gap_variance_target: float = 1e-3
    seed: int = 0
    lp_method: str = "auto"

    def __post_init__(self):
        if self.m_replications < 2:
            raise ValueError("need at least two replications to estimate a variance")
        if self.n_scenarios < 1:
            raise ValueError("n_scenarios must be positive")
        if self.n_eval < 10 * self.n_scenarios:
            raise ValueError("n_eval must be at least 10 * n_scenarios")


@dataclass(frozen=True)
class Evaluation:
    """Out-of-sample score of one schedule."""

    objective: float
    objective_var: float  # variance of the sample mean
    mean_idle: float  # total idle over nodes, per slot
    idle_var: float  # variance of the per-scenario idle
    eq18_raw: float  # tau + mean second-stage value, reported for reference


@dataclass(frozen=True, eq=False)
class SaaReport:
    best_schedule: Schedule
    best_index: int
    candidates: list  # (Schedule, z_N^m)
    candidate_scores: list  # evaluated objective per candidate
    z_bar: float
    z_hat_best: float
    gap: float
    var_eval: float
    var_zbar: float
    var_gap: float
    converged: bool
    evaluation: Evaluation
    config: SaaConfig
    horizon: int
    trajectory: list = field(default_factory=list)  # (M, N, n_eval, var_gap)


def _mean_variance(values) -> float:
    """Variance of the sample mean; shifting first keeps constant data at exactly 0."""
    v = np.asarray(values, dtype=float)
    return float(np.var(v - v[0], ddof=1) / v.size) if v.size > 1 else 0.0


def _evaluate_bundle(inst: ProblemInstance, sched: Schedule, bundle: np.ndarray) -> Evaluation:
    values, idle, penalty = scenario_values(inst, sched, bundle)
    n_eval, horizon = bundle.shape[0], bundle.shape[-1]
    per_slot = idle / horizon
    second = penalty if horizon == 1 else values
    return Evaluation(
        objective=float(np.mean(values)),
        objective_var=_mean_variance(values),
        mean_idle=float(np.mean(per_slot)),
        idle_var=_mean_variance(per_slot) * n_eval,
        eq18_raw=sched.tau + float(np.mean(second)),
    )


def evaluation_stream(model: ChannelModel, seed: int) -> GainStream:
    return GainStream(model, seed, (TAG_EVALUATION,))


def evaluate(inst, sched: Schedule, model: ChannelModel, horizon: int, n_eval: int, seed: int) -> Evaluation:
    if n_eval < 2:
        raise ValueError("n_eval must be at least 2")
    bundle = sample_bundle(evaluation_stream(model, seed), n_eval, inst.n_nodes, horizon)
    return _evaluate_bundle(inst, sched, bundle)


def evaluate_candidate(inst, sched, model, horizon, n_eval, seed) -> tuple[float, float]:
    """Sample-mean objective of ``sched`` on fresh scenarios and its variance."""
    ev = evaluate(inst, sched, model, horizon, n_eval, seed)
    return ev.objective, ev.objective_var


def solve_replication(inst, model, horizon, n_scenarios, seed, index, lp_method="auto"):
    stream = GainStream(model, seed, (TAG_REPLICATION, index))
    bundle = detequiv.ScenarioBundle(sample_bundle(stream, n_scenarios, inst.n_nodes, horizon))
    lp = detequiv.build(inst, bundle)
    sol = solve(lp, lp_method)
    if not sol.optimal:
        raise SaaError(f"replication {index} (seed {seed}) deterministic equivalent is {sol.status.value}")
    return detequiv.schedule_from_solution(lp, sol, inst.slot_seconds), sol.objective_value


def solve_saa(inst: ProblemInstance, model: ChannelModel, horizon: int, cfg: SaaConfig) -> SaaReport:
    if horizon < 1:
        raise ValueError("horizon must be positive")
    M = cfg.m_replications
    candidates = [
        solve_replication(inst, model, horizon, cfg.n_scenarios, cfg.seed, m, cfg.lp_method)
        for m in range(M)
    ]
    z = np.array([zm for _, zm in candidates])
    bundle = sample_bundle(evaluation_stream(model, cfg.seed), cfg.n_eval, inst.n_nodes, horizon)
    evals = [_evaluate_bundle(inst, s, bundle) for s, _ in candidates]
    scores = [e.objective for e in evals]
    best = int(np.argmax(scores))
    z_bar = float(np.mean(z))
    var_zbar = _mean_variance(z)
    var_eval = evals[best].objective_var
    var_gap = var_eval + var_zbar
    report = SaaReport(
        best_schedule=candidates[best][0],
        best_index=best,
        candidates=candidates,
        candidate_scores=scores,
        z_bar=z_bar,
        z_hat_best=scores[best],
        gap=z_bar - scores[best],
        var_eval=var_eval,
        var_zbar=var_zbar,
        var_gap=var_gap,
        converged=bool(var_gap < cfg.gap_variance_target),
        evaluation=evals[best],
        config=cfg,
        horizon=horizon,
    )
    log.debug("SAA M=%d N=%d: z_bar=%.6g z_hat=%.6g var_gap=%.3g", M, cfg.n_scenarios,
              z_bar, report.z_hat_best, var_gap)
    return report


def adaptive_run(inst, model, horizon, cfg: SaaConfig, n_cap: int = N_CAP, m_cap: int = M_CAP) -> SaaReport:
    """Grow N and M alternately (N first, by doubling) until the gap variance
    drops below the target or both hit their caps."""
    trajectory = []
    grow_n = True
    while True:
        report = solve_saa(inst, model, horizon, cfg)
        trajectory.append((cfg.m_replications, cfg.n_scenarios, cfg.n_eval, report.var_gap))
        can_n = cfg.n_scenarios * 2 <= n_cap
        can_m = cfg.m_replications * 2 <= m_cap
        if report.converged or not (can_n or can_m):
            return replace(report, trajectory=trajectory)
        if (grow_n and can_n) or not can_m:
            n = cfg.n_scenarios * 2
            cfg = replace(cfg, n_scenarios=n, n_eval=max(cfg.n_eval, 10 * n))
        else:
            cfg = replace(cfg, m_replications=cfg.m_replications * 2)
        grow_n = not grow_n
