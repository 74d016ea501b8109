"""Deterministic-equivalent LPs for a bundle of sampled scenarios.

Variable layout (``LinearProgram.blocks`` records the slices)::

    single:  tau | T_1..T_n | Z | y[j, i]                    (2 + n + n*N)
    multi:   tau | T_1..T_n | Z | (y, B, delta)[s, t, i]     (2 + n + 3*n*N*H)

The shared ``Z`` stands in for ``min_i T_i`` in every scenario and slot.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse

from .lp import LinearProgram, LpSolution
from .model import ProblemInstance, Schedule


@dataclass(frozen=True, eq=False)
class ScenarioBundle:
    """Equally weighted scenarios, gains stacked as ``(N, n_nodes, horizon)``."""

    gains: np.ndarray

    def __post_init__(self):
        g = np.array(self.gains, dtype=float)
        if g.ndim == 2:
            g = g[None]
        if g.ndim != 3 or g.shape[0] == 0:
            raise ValueError("bundle needs a nonempty (N, n_nodes, horizon) array")
        if np.any((g < 0) | (g > 1)):
            raise ValueError("channel gains must lie in [0, 1]")
        g.setflags(write=False)
        object.__setattr__(self, "gains", g)

    @classmethod
    def of(cls, scenarios) -> "ScenarioBundle":
        return cls(np.stack([s.gains for s in scenarios]))

    @property
    def size(self) -> int:
        return self.gains.shape[0]

    @property
    def n_nodes(self) -> int:
        return self.gains.shape[1]

    @property
    def horizon(self) -> int:
        return self.gains.shape[2]

    @property
    def weight(self) -> float:
        return 1.0 / self.size


def _first_stage(inst: ProblemInstance, n_vars: int):
    """Rows shared by both programs: the time budget and ``Z <= T_i``."""
    n = inst.n_nodes
    rows, cols, vals = [], [], []
    rows += [0] * (n + 1)
    cols += list(range(n + 1))
    vals += [1.0] * (n + 1)
    for i in range(n):
        rows += [1 + i, 1 + i]
        cols += [n + 1, 1 + i]
        vals += [1.0, -1.0]
    sense = ["="] + ["<"] * n
    rhs = [inst.slot_seconds] + [0.0] * n
    return rows, cols, vals, sense, rhs


def build_single(inst: ProblemInstance, bundle: ScenarioBundle) -> LinearProgram:
    """max Z - (1/N) sum_j sum_i w_i y_ij  s.t. budget, Z <= T_i, energy rows."""
    if bundle.horizon != 1:
        raise ValueError("build_single needs horizon-1 scenarios")
    if bundle.n_nodes != inst.n_nodes:
        raise ValueError("bundle and instance disagree on node count")
    n, N = inst.n_nodes, bundle.size
    n_vars = 2 + n + n * N
    y0 = n + 2
    rows, cols, vals, sense, rhs = _first_stage(inst, n_vars)
    pc, rate, b0 = inst.consume_power, inst.harvest_rate, inst.b0
    g = bundle.gains[:, :, 0]
    r = n + 1
    # P_c y_ij + eta P g_ij tau - P_c T_i >= -B_i
    for j in range(N):
        for i in range(n):
            rows += [r, r, r]
            cols += [y0 + j * n + i, 0, 1 + i]
            vals += [pc, rate * g[j, i], -pc]
            sense.append(">")
            rhs.append(-b0[i])
            r += 1
    A = sparse.csr_matrix((vals, (rows, cols)), shape=(r, n_vars))
    c = np.zeros(n_vars)
    c[n + 1] = 1.0
    c[y0:] = -np.tile(inst.w, N) / N
    blocks = {"tau": slice(0, 1), "T": slice(1, n + 1), "Z": slice(n + 1, n + 2),
              "y": slice(y0, n_vars)}
    lp = LinearProgram(c, A, np.array(sense), np.array(rhs), np.zeros(n_vars),
                       np.full(n_vars, np.inf), blocks)
    assert lp.n_vars == 2 + n + n * N and lp.n_rows == 1 + n + n * N
    return lp


def build_multi(inst: ProblemInstance, bundle: ScenarioBundle) -> LinearProgram:
    """max (1/N) sum_s [H Z - sum_{t,i} y]  with battery carry-over and spill."""
    if bundle.n_nodes != inst.n_nodes:
        raise ValueError("bundle and instance disagree on node count")
    n, N, H = inst.n_nodes, bundle.size, bundle.horizon
    n_vars = 2 + n + 3 * n * N * H
    base = n + 2
    rows, cols, vals, sense, rhs = _first_stage(inst, n_vars)
    pc, rate, b0 = inst.consume_power, inst.harvest_rate, inst.b0

    def var(s, t, i, k):  # k: 0 -> y, 1 -> B, 2 -> delta
        return base + 3 * ((s * H + t) * n + i) + k

    r = n + 1
    for s in range(N):
        for t in range(H):
            for i in range(n):
                g = bundle.gains[s, i, t]
                lhs_c = [var(s, t, i, 0), 0, 1 + i]
                lhs_v = [pc, rate * g, -pc]
                if t > 0:
                    lhs_c.append(var(s, t - 1, i, 1))
                    lhs_v.append(1.0)
                    carried = 0.0
                else:
                    carried = b0[i]
                # energy available after the slot's consumption is nonnegative
                rows += [r] * len(lhs_c)
                cols += lhs_c
                vals += lhs_v
                sense.append(">")
                rhs.append(-carried)
                r += 1
                # ... and is either stored or spilled
                rows += [r] * (len(lhs_c) + 2)
                cols += lhs_c + [var(s, t, i, 1), var(s, t, i, 2)]
                vals += lhs_v + [-1.0, -1.0]
                sense.append("=")
                rhs.append(-carried)
                r += 1
    A = sparse.csr_matrix((vals, (rows, cols)), shape=(r, n_vars))
    c = np.zeros(n_vars)
    c[n + 1] = float(H)
    c[base::3] = -1.0 / N
    upper = np.full(n_vars, np.inf)
    upper[base + 1::3] = inst.battery_cap
    blocks = {"tau": slice(0, 1), "T": slice(1, n + 1), "Z": slice(n + 1, n + 2),
              "y": slice(base, n_vars, 3), "B": slice(base + 1, n_vars, 3),
              "delta": slice(base + 2, n_vars, 3)}
    lp = LinearProgram(c, A, np.array(sense), np.array(rhs), np.zeros(n_vars), upper, blocks)
    assert lp.n_vars == 2 + n + 3 * n * N * H and lp.n_rows == 1 + n + 2 * n * N * H
    return lp


def build(inst: ProblemInstance, bundle: ScenarioBundle) -> LinearProgram:
    return build_single(inst, bundle) if bundle.horizon == 1 else build_multi(inst, bundle)


def pin_schedule(lp: LinearProgram, sched: Schedule) -> LinearProgram:
    """Copy of ``lp`` with tau and T fixed to ``sched`` through equal bounds."""
    lower, upper = lp.lower.copy(), lp.upper.copy()
    lower[lp.blocks["tau"]] = upper[lp.blocks["tau"]] = sched.tau
    lower[lp.blocks["T"]] = upper[lp.blocks["T"]] = sched.T
    return LinearProgram(lp.objective, lp.A, lp.sense, lp.rhs, lower, upper, lp.blocks)


def schedule_from_solution(lp: LinearProgram, sol: LpSolution, slot_seconds: float = 1.0) -> Schedule:
    """Extract (tau, T) and restore the time budget exactly."""
    T = np.maximum(sol.variables[lp.blocks["T"]], 0.0)
    total = T.sum()
    if total > slot_seconds:
        T = T * (slot_seconds / total)
    return Schedule.from_sample_times(T, slot_seconds)
