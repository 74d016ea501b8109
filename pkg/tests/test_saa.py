import math
from dataclasses import replace

import numpy as np
import pytest

from rfcharge import baselines, detequiv, saa
from rfcharge.channels import ChannelModel
from rfcharge.lp import solve
from rfcharge.model import ProblemInstance, Schedule

INST = ProblemInstance()
SMALL = saa.SaaConfig(m_replications=4, n_scenarios=20, n_eval=400, seed=3)


def test_fixed_channel_is_deterministic():
    rep = saa.solve_saa(INST, ChannelModel.fixed(0.5), 1, SMALL)
    for sched, _ in rep.candidates:
        assert sched.tau == pytest.approx(1 / 6, abs=1e-9)
    assert rep.gap == pytest.approx(0.0, abs=1e-12)
    assert rep.var_gap == 0.0 and rep.converged


def test_zbar_is_plain_average():
    cfg = saa.SaaConfig(m_replications=2, n_scenarios=1, n_eval=10, seed=7)
    model = ChannelModel.rician()
    rep = saa.solve_saa(INST, model, 1, cfg)
    z = [saa.solve_replication(INST, model, 1, 1, 7, m)[1] for m in range(2)]
    assert rep.z_bar == (z[0] + z[1]) / 2
    assert rep.var_zbar == pytest.approx(np.var(z, ddof=1) / 2)


def test_rician_high_efficiency_schedule():
    inst = INST.replace(efficiency=0.6)
    taus, zs = [], []
    for seed in range(3):
        rep = saa.solve_saa(inst, ChannelModel.rician(), 1, replace(SMALL, n_scenarios=100, n_eval=1000,
                                                                     seed=seed))
        taus.append(rep.best_schedule.tau)
        zs.append(rep.best_schedule.z)
    assert np.mean(taus) == pytest.approx(0.183, abs=0.03)
    assert np.mean(zs) == pytest.approx(0.163, abs=0.02)


def test_evaluate_candidate_examples():
    bal = Schedule.from_sample_times([1 / 6] * 5)
    obj, var = saa.evaluate_candidate(INST, bal, ChannelModel.fixed(0.7), 1, 50, 0)
    assert var == 0.0 and obj == pytest.approx(1 / 6)
    idle = Schedule(1.0, [0.0] * 5)
    assert saa.evaluate_candidate(INST, idle, ChannelModel.rayleigh(), 1, 50, 0) == (0.0, 0.0)
    obj, var = saa.evaluate_candidate(INST, bal, ChannelModel.fixed(0.25), 1, 50, 0)
    z = 1 / 6
    assert obj == pytest.approx(z - 5 * z / 2) and var == 0.0
    with pytest.raises(ValueError):
        saa.evaluate_candidate(INST, bal, ChannelModel.fixed(0.25), 1, 1, 0)


def test_eq18_raw_reported():
    bal = Schedule.from_sample_times([1 / 6] * 5)
    ev = saa.evaluate(INST, bal, ChannelModel.fixed(0.25), 1, 20, 0)
    assert ev.eq18_raw == pytest.approx(1 / 6 + 5 / 12)
    assert ev.mean_idle == pytest.approx(5 / 12)


@pytest.mark.parametrize("model,horizon", [(ChannelModel.gaussian(), 1), (ChannelModel.rician(), 1),
                                           (ChannelModel.rayleigh(), 2)])
def test_report_identities(model, horizon):
    rep = saa.solve_saa(INST, model, horizon, SMALL)
    assert rep.var_gap == rep.var_eval + rep.var_zbar
    assert rep.converged == (rep.var_gap < SMALL.gap_variance_target)
    assert rep.z_hat_best == max(rep.candidate_scores)
    assert rep.best_index == rep.candidate_scores.index(max(rep.candidate_scores))
    assert rep.gap == rep.z_bar - rep.z_hat_best
    assert abs(rep.best_schedule.tau + rep.best_schedule.T.sum() - 1) <= 1e-9


def test_selection_is_permutation_invariant():
    rep = saa.solve_saa(INST, ChannelModel.rayleigh(), 1, SMALL)
    bundle = saa.sample_bundle(saa.evaluation_stream(ChannelModel.rayleigh(), SMALL.seed),
                               SMALL.n_eval, 5, 1)
    rng = np.random.default_rng(0)
    for _ in range(5):
        order = rng.permutation(len(rep.candidates))
        scores = [saa._evaluate_bundle(INST, rep.candidates[k][0], bundle).objective for k in order]
        assert max(scores) == rep.z_hat_best


def test_reproducible():
    a = saa.solve_saa(INST, ChannelModel.gaussian(), 2, SMALL)
    b = saa.solve_saa(INST, ChannelModel.gaussian(), 2, SMALL)
    assert a.best_schedule == b.best_schedule
    assert (a.z_bar, a.z_hat_best, a.var_gap) == (b.z_bar, b.z_hat_best, b.var_gap)
    c = saa.solve_saa(INST, ChannelModel.gaussian(), 2, replace(SMALL, seed=4))
    assert c.z_bar != a.z_bar


@pytest.mark.parametrize("g,horizon", [(0.5, 1), (0.01, 1), (1.0, 3)])
def test_fixed_matches_single_scenario_solution(g, horizon):
    rep = saa.solve_saa(INST, ChannelModel.fixed(g), horizon, SMALL)
    lp = detequiv.build(INST, detequiv.ScenarioBundle(np.full((1, 5, horizon), g)))
    direct = detequiv.schedule_from_solution(lp, solve(lp))
    # duplicated scenarios reach the same vertex up to rounding
    assert rep.best_schedule.tau == pytest.approx(direct.tau, abs=1e-12)
    assert rep.best_schedule.T == pytest.approx(direct.T, abs=1e-12)
    assert baselines.fixed_gain_schedule(INST, g, horizon) == direct


def test_replication_failure_names_index(monkeypatch):
    from rfcharge.lp import LpSolution, LpStatus
    monkeypatch.setattr(saa, "solve", lambda lp, method="auto": LpSolution(LpStatus.INFEASIBLE,
                                                                           np.zeros(lp.n_vars), math.nan))
    with pytest.raises(saa.SaaError, match=r"replication 0 \(seed 3\)"):
        saa.solve_saa(INST, ChannelModel.gaussian(), 1, SMALL)


def test_config_validation():
    with pytest.raises(ValueError):
        saa.SaaConfig(m_replications=1)
    with pytest.raises(ValueError):
        saa.SaaConfig(n_scenarios=100, n_eval=999)


def test_adaptive_fixed_converges_first_time():
    rep = saa.adaptive_run(INST, ChannelModel.fixed(0.5), 1, SMALL)
    assert len(rep.trajectory) == 1 and rep.converged


def test_adaptive_infinite_target():
    rep = saa.adaptive_run(INST, ChannelModel.rician(), 1, replace(SMALL, gap_variance_target=math.inf))
    assert len(rep.trajectory) == 1 and rep.converged


def test_adaptive_growth_policy_and_caps():
    cfg = replace(SMALL, m_replications=2, n_scenarios=2, n_eval=20, gap_variance_target=0.0)
    rep = saa.adaptive_run(INST, ChannelModel.rayleigh(), 1, cfg, n_cap=8, m_cap=4)
    steps = [(m, n) for m, n, _, _ in rep.trajectory]
    assert steps == [(2, 2), (2, 4), (4, 4), (4, 8)]
    assert not rep.converged
    assert all(ne >= 10 * n for _, n, ne, _ in rep.trajectory)


def first_converging_n(model, target):
    cfg = saa.SaaConfig(m_replications=4, n_scenarios=4, n_eval=200, gap_variance_target=target, seed=1)
    rep = saa.adaptive_run(INST, model, 1, cfg, n_cap=2 ** 9, m_cap=16)
    assert rep.converged
    return rep.trajectory[-1][1]


def test_gaussian_converges_no_later_than_rician():
    target = 1e-6
    assert first_converging_n(ChannelModel.gaussian(), target) <= first_converging_n(ChannelModel.rician(), target)


def test_best_value_trends_up_with_n():
    model = ChannelModel.rayleigh()
    small, large = [], []
    for seed in range(10):
        for n, acc in ((5, small), (80, large)):
            cfg = saa.SaaConfig(m_replications=2, n_scenarios=n, n_eval=2000, seed=seed)
            rep = saa.solve_saa(INST, model, 1, cfg)
            acc.append(saa.evaluate(INST, rep.best_schedule, model, 1, 4000, 999).objective)
    assert np.mean(large) >= np.mean(small)
