"""Experiment runner.

Configuration is a flat ``key = value`` file with dotted keys; command-line
flags override it.  Example::

    # rician sweep over conversion efficiency
    channel.kind = rician
    policy = spsaa, avg_gain
    sim.mode = single
    sweep = eta=0.1:0.6:0.1
    saa.m = 10
    saa.n = 100

Every cell of the matrix channel x policy x mode x sweep-value yields one CSV
row.  Rows are written in matrix order whatever the worker count
(``RFCHARGE_WORKERS``).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import __version__, baselines, saa
from .channels import DEFAULT_PARAMS, ChannelKind, ChannelModel, GainStream, sample_bundle
from .lp import LpError
from .model import ProblemInstance, Schedule
from .recourse import surplus_energy
from .sim import POLICIES, Mode, PlannerError, PolicyConfig, SimConfig, simulate

log = logging.getLogger("rfcharge")

WORKERS_ENV = "RFCHARGE_WORKERS"

COLUMNS = [
    "distribution", "policy", "mode", "eta", "T", "seed",
    "mean_idle", "se_idle", "Z", "tau", "var_gap", "converged",
    "episodes", "n_nodes", "hap_power", "consume_power", "battery_cap",
    "scaling", "saa_m", "saa_n", "saa_n_eval",
]

DEFAULTS = {
    "model.n_nodes": "5",
    "model.hap_power": "0.25",
    "model.consume_power": "0.05",
    "model.efficiency": "0.4",
    "model.battery_cap": "0.1",
    "model.penalty": "1.0",
    "model.slot_seconds": "1.0",
    "channel.kind": "rician",
    "channel.param": "",
    "channel.scaling": "span",
    "policy": "spsaa",
    "sim.mode": "single",
    "sim.horizon": "1",
    "sim.episodes": "100",
    "saa.m": "10",
    "saa.n": "100",
    "saa.n_eval": "2000",
    "saa.target": "1e-3",
    "saa.adaptive": "false",
    "sweep": "",
    "seed": "0",
    "histogram.bins": "40",
    "histogram.samples": "100000",
}
ALIASES = {"eta": "model.efficiency", "channel.seed": "seed", "sim.seed": "seed",
           "sim.policy": "policy"}
SWEEPABLE = {"model.efficiency", "sim.horizon", "model.n_nodes", "model.hap_power",
             "model.consume_power", "model.battery_cap"}


class ConfigError(ValueError):
    pass


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".9g")
    return str(x)


def parse_config_text(text: str, source: str = "<config>") -> dict[str, str]:
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        out[_canonical(key)] = value
    return out


def _canonical(key: str) -> str:
    key = ALIASES.get(key, key)
    if key not in DEFAULTS:
        raise ConfigError(f"unknown config key {key!r}")
    return key


def _listing(value: str) -> list[str]:
    return [v.strip() for v in value.split(",") if v.strip()]


def _number(cfg, key, kind=float):
    try:
        return kind(cfg[key])
    except ValueError:
        raise ConfigError(f"config key {key!r}: cannot read {cfg[key]!r} as {kind.__name__}") from None


def parse_sweep(spec: str) -> tuple[str, list[float]] | None:
    """``key=start:stop:step`` (inclusive) or ``key=v1,v2,...``."""
    if not spec:
        return None
    if "=" not in spec:
        raise ConfigError(f"sweep {spec!r} must look like key=start:stop:step")
    key, rng = (s.strip() for s in spec.split("=", 1))
    key = _canonical(key)
    if key not in SWEEPABLE:
        raise ConfigError(f"config key {key!r} cannot be swept")
    try:
        if ":" in rng:
            a, b, step = (float(x) for x in rng.split(":"))
            if step <= 0:
                raise ValueError
            count = int(round((b - a) / step)) + 1
            values = [round(a + k * step, 12) for k in range(max(count, 0))]
        else:
            values = [float(v) for v in _listing(rng)]
    except ValueError:
        raise ConfigError(f"sweep {spec!r}: bad range") from None
    return key, values


def parse_channel(spec: str, scaling: str, default_param: str = "") -> ChannelModel:
    kind, _, param = spec.partition(":")
    try:
        kind = ChannelKind(kind.strip().lower())
    except ValueError:
        raise ConfigError(f"config key 'channel.kind': unknown channel {kind!r}") from None
    param = param or default_param
    if not param:
        if kind is ChannelKind.FIXED:
            raise ConfigError("config key 'channel.kind': fixed channel needs a gain, e.g. fixed:0.5")
        param = DEFAULT_PARAMS[kind.value]
    try:
        return ChannelModel(kind, float(param), scaling)
    except ValueError as exc:
        raise ConfigError(f"config key 'channel.param': {exc}") from None


@dataclass(frozen=True)
class Cell:
    channel: ChannelModel
    policy: str
    mode: str
    inst: ProblemInstance
    horizon: int
    episodes: int
    seed: int
    saa_cfg: saa.SaaConfig
    adaptive: bool


def instance_from(cfg: dict[str, str]) -> ProblemInstance:
    try:
        return ProblemInstance(
            n_nodes=_number(cfg, "model.n_nodes", int),
            hap_power=_number(cfg, "model.hap_power"),
            consume_power=_number(cfg, "model.consume_power"),
            efficiency=_number(cfg, "model.efficiency"),
            battery_cap=_number(cfg, "model.battery_cap"),
            penalties=_number(cfg, "model.penalty"),
            slot_seconds=_number(cfg, "model.slot_seconds"),
        )
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"model parameters: {exc}") from None


def saa_config_from(cfg: dict[str, str], seed: int) -> saa.SaaConfig:
    m, n = _number(cfg, "saa.m", int), _number(cfg, "saa.n", int)
    n_eval = max(_number(cfg, "saa.n_eval", int), 10 * n)
    try:
        return saa.SaaConfig(m, n, n_eval, _number(cfg, "saa.target"), seed)
    except ValueError as exc:
        raise ConfigError(f"saa parameters: {exc}") from None


def build_cells(cfg: dict[str, str]) -> list[Cell]:
    seed = _number(cfg, "seed", int)
    scaling = cfg["channel.scaling"]
    if scaling not in ("span", "mean"):
        raise ConfigError(f"config key 'channel.scaling': unknown scaling {scaling!r}")
    channels = [parse_channel(c, scaling, cfg["channel.param"]) for c in _listing(cfg["channel.kind"])]
    policies = _listing(cfg["policy"])
    for p in policies:
        if p not in POLICIES:
            raise ConfigError(f"config key 'policy': unknown policy {p!r}")
    modes = _listing(cfg["sim.mode"])
    for m in modes:
        if m not in {x.value for x in Mode}:
            raise ConfigError(f"config key 'sim.mode': unknown mode {m!r}")
    adaptive = cfg["saa.adaptive"].lower() in ("1", "true", "yes", "on")
    sweep = parse_sweep(cfg["sweep"])
    points = [dict(cfg)] if sweep is None else [
        {**cfg, sweep[0]: fmt(int(v) if sweep[0] in ("sim.horizon", "model.n_nodes") else v)}
        for v in sweep[1]
    ]
    saa_cfg = saa_config_from(cfg, seed)
    episodes = _number(cfg, "sim.episodes", int)
    cells = []
    for channel in channels:
        for policy in policies:
            for mode in modes:
                for point in points:
                    horizon = _number(point, "sim.horizon", int)
                    if horizon < 1 or episodes < 1:
                        raise ConfigError("config keys 'sim.horizon' and 'sim.episodes' must be positive")
                    cells.append(Cell(channel, policy, mode, instance_from(point), horizon,
                                      episodes, seed, saa_cfg, adaptive))
    return cells


def run_cell(cell: Cell) -> dict[str, str]:
    simcfg = SimConfig(cell.mode, cell.horizon, cell.episodes, cell.seed)
    policy = PolicyConfig(cell.policy, cell.saa_cfg, cell.adaptive)
    summary, _ = simulate(cell.inst, cell.channel, simcfg, policy)
    inst, s = cell.inst, cell.saa_cfg
    row = {
        "distribution": cell.channel.label, "policy": cell.policy, "mode": cell.mode,
        "eta": inst.efficiency, "T": cell.horizon, "seed": cell.seed,
        "mean_idle": summary.mean_idle, "se_idle": summary.se_idle,
        "Z": summary.mean_z, "tau": summary.mean_tau,
        "var_gap": summary.var_gap, "converged": summary.converged,
        "episodes": cell.episodes, "n_nodes": inst.n_nodes, "hap_power": inst.hap_power,
        "consume_power": inst.consume_power, "battery_cap": inst.battery_cap,
        "scaling": cell.channel.scaling, "saa_m": s.m_replications, "saa_n": s.n_scenarios,
        "saa_n_eval": s.n_eval,
    }
    return {k: fmt(v) for k, v in row.items()}


def run_matrix(cells: list[Cell], workers: int = 1) -> list[dict[str, str]]:
    if workers > 1 and len(cells) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(run_cell, cells))
    return [run_cell(c) for c in cells]


def rows_to_csv(rows: list[dict[str, str]]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=COLUMNS, lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return buf.getvalue()


def write_series(rows, sweep_key: str | None, out: Path) -> list[str]:
    """One plot-ready file per (metric, distribution, policy, mode)."""
    xcol = {"sim.horizon": "T"}.get(sweep_key or "", "eta")
    series: dict[tuple, list] = {}
    for r in rows:
        series.setdefault((r["distribution"], r["policy"], r["mode"]), []).append(r)
    written = []
    folder = out / "series"
    for (dist, pol, mode), rs in series.items():
        for metric, err in (("mean_idle", "se_idle"), ("Z", None), ("tau", None)):
            folder.mkdir(parents=True, exist_ok=True)
            name = f"{metric}__{dist.replace(':', '-')}__{pol}__{mode}.csv"
            lines = [f"{xcol},{metric},se"]
            lines += [f"{r[xcol]},{r[metric]},{r[err] if err else 0}" for r in rs]
            (folder / name).write_text("\n".join(lines) + "\n")
            written.append(f"series/{name}")
    return written


def run(cfg: dict[str, str], out: Path, workers: int = 1) -> list[dict[str, str]]:
    cells = build_cells(cfg)
    out.mkdir(parents=True, exist_ok=True)
    log.info("running %d cells on %d worker(s)", len(cells), workers)
    rows = run_matrix(cells, workers)
    files = []
    if rows:
        (out / "results.csv").write_text(rows_to_csv(rows))
        files.append("results.csv")
        sweep = parse_sweep(cfg["sweep"])
        files += write_series(rows, sweep[0] if sweep else None, out)
    meta = {
        "version": __version__,
        "config": dict(sorted(cfg.items())),
        "cells": len(cells),
        "seed": int(cfg["seed"]),
        "channels": {c.channel.label: {"scaling": c.channel.scaling, "offset": c.channel.offset,
                                       "scale_factor": c.channel.scale_factor,
                                       "calibration": c.channel.calibration} for c in cells},
        "saa": asdict(saa_config_from(cfg, int(cfg["seed"]))),
        "files": files,
    }
    (out / "metadata.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return rows


# -- surplus-energy histogram ---------------------------------------------------

def emit_surplus_histogram(inst: ProblemInstance, sched: Schedule, model: ChannelModel,
                           bins: int, samples: int, seed: int) -> str:
    """CSV histogram of per-node surplus energy over ``samples`` one-slot draws."""
    if bins < 2 or samples < 1:
        raise ValueError("need bins >= 2 and samples >= 1")
    g = sample_bundle(GainStream(model, seed, (5,)), samples, inst.n_nodes, 1)
    values = surplus_energy(inst, sched, g).ravel()
    counts, edges = np.histogram(values, bins=bins)
    probs = counts / counts.sum()
    lines = ["bin_left,bin_right,probability"]
    lines += [f"{fmt(a)},{fmt(b)},{fmt(p)}" for a, b, p in zip(edges[:-1], edges[1:], probs)]
    return "\n".join(lines) + "\n"


def histogram_command(cfg: dict[str, str], out: Path) -> str:
    inst = instance_from(cfg)
    seed = int(cfg["seed"])
    channel = parse_channel(_listing(cfg["channel.kind"])[0], cfg["channel.scaling"], cfg["channel.param"])
    policy = _listing(cfg["policy"])[0]
    if policy == "spsaa":
        sched = saa.solve_saa(inst, channel, 1, saa_config_from(cfg, seed)).best_schedule
    elif policy in baselines.BASELINE_GAINS:
        sched = baselines.fixed_gain_schedule(inst, baselines.BASELINE_GAINS[policy], 1)
    else:
        raise ConfigError(f"config key 'policy': unknown policy {policy!r}")
    text = emit_surplus_histogram(inst, sched, channel, _number(cfg, "histogram.bins", int),
                                  _number(cfg, "histogram.samples", int), seed)
    out.mkdir(parents=True, exist_ok=True)
    name = f"surplus__{channel.label.replace(':', '-')}__{policy}__eta{fmt(inst.efficiency)}.csv"
    (out / name).write_text(text)
    return name


# -- entry point ----------------------------------------------------------------

def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rfcharge", description=__doc__.split("\n\n")[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    for name in ("run", "histogram"):
        s = sub.add_parser(name)
        s.add_argument("--config", type=Path)
        s.add_argument("--out", type=Path, default=Path("results"))
        s.add_argument("--policy")
        s.add_argument("--channel", help="kind[:param], comma separated")
        s.add_argument("--eta", type=str)
        s.add_argument("--sweep", help="key=start:stop:step")
        s.add_argument("--horizon", type=str)
        s.add_argument("--mode", help="single|multi, comma separated")
        s.add_argument("--seed", type=str)
        s.add_argument("--episodes", type=str)
        s.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override any config key")
    return p


def resolve_config(args) -> dict[str, str]:
    cfg = dict(DEFAULTS)
    if args.config is not None:
        try:
            text = args.config.read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from None
        cfg.update(parse_config_text(text, str(args.config)))
    flags = {"policy": args.policy, "channel.kind": args.channel, "model.efficiency": args.eta,
             "sweep": args.sweep, "sim.horizon": args.horizon, "sim.mode": args.mode,
             "seed": args.seed, "sim.episodes": args.episodes}
    cfg.update({k: v for k, v in flags.items() if v is not None})
    for item in args.set:
        cfg.update(parse_config_text(item, "--set"))
    return cfg


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve_config(args)
        workers = int(os.environ.get(WORKERS_ENV, "1") or 1)
        if args.command == "run":
            rows = run(cfg, args.out, workers)
            print(f"wrote {len(rows)} row(s) to {args.out}")
        else:
            name = histogram_command(cfg, args.out)
            print(f"wrote {args.out / name}")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except (PlannerError, saa.SaaError, LpError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
