"""Charging/sampling-time planning for RF-harvesting sensor nodes under random
channel gains, via two-stage stochastic programs solved by SAA."""

__version__ = "0.1.0"

from .baselines import BASELINE_GAINS, evaluate_baseline, fixed_gain_schedule
from .channels import ChannelKind, ChannelModel, GainStream, normalize, sample_bundle, sample_scenario
from .detequiv import ScenarioBundle, build_multi, build_single
from .lp import LinearProgram, LpSolution, LpStatus, solve
from .model import ProblemInstance, RecourseOutcome, Scenario, Schedule, harvested_energy
from .recourse import recourse_multi, recourse_single, surplus_energy
from .saa import SaaConfig, SaaReport, adaptive_run, evaluate_candidate, solve_saa
from .sim import PolicyConfig, SimConfig, SlotRecord, aggregate, run_episode, simulate

__all__ = [
    "BASELINE_GAINS", "ChannelKind", "ChannelModel", "GainStream", "LinearProgram", "LpSolution",
    "LpStatus", "PolicyConfig", "ProblemInstance", "RecourseOutcome", "SaaConfig", "SaaReport",
    "Scenario", "ScenarioBundle", "Schedule", "SimConfig", "SlotRecord", "adaptive_run",
    "aggregate", "build_multi", "build_single", "evaluate_baseline", "evaluate_candidate",
    "fixed_gain_schedule", "harvested_energy", "normalize", "recourse_multi", "recourse_single",
    "run_episode", "sample_bundle", "sample_scenario", "simulate", "solve", "solve_saa",
    "surplus_energy",
]
