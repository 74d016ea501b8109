"""Independent reference implementations used by the tests."""

import itertools

import numpy as np

from rfcharge import detequiv
from rfcharge.lp import LinearProgram, solve
from rfcharge.model import ProblemInstance, Schedule


def vertex_enumeration(c, rows, senses, rhs, upper):
    """Max c.x over {rows (<,=,>) rhs, 0 <= x <= upper} by checking every basic point.

    Returns None when no vertex is feasible.
    """
    c = np.asarray(c, float)
    n = c.size
    eq, ineq = [], []
    for a, s, b in zip(rows, senses, rhs):
        a = np.asarray(a, float)
        if s == "=":
            eq.append((a, b))
        elif s == "<":
            ineq.append((a, b))
        else:
            ineq.append((-a, -b))
    for i in range(n):
        e = np.eye(n)[i]
        ineq.append((-e, 0.0))
        ineq.append((e, upper[i]))
    # a vertex has n linearly independent tight constraints, equalities included
    tight = eq + ineq
    best = None
    for subset in itertools.combinations(range(len(tight)), n):
        A = np.array([tight[j][0] for j in subset])
        b = np.array([tight[j][1] for j in subset])
        if abs(np.linalg.det(A)) < 1e-10:
            continue
        x = np.linalg.solve(A, b)
        if all(a @ x <= b + 1e-8 for a, b in ineq) and all(abs(a @ x - b) <= 1e-8 for a, b in eq):
            v = float(c @ x)
            best = v if best is None else max(best, v)
    return best


def random_small_lp(rng, n_vars=None, n_rows=None, feasible=False):
    n = n_vars or int(rng.integers(1, 5))
    m = n_rows or int(rng.integers(1, 7))
    c = rng.integers(-5, 6, n).astype(float)
    rows = rng.integers(-4, 5, (m, n)).astype(float)
    senses = list(rng.choice(["<", "=", ">"], m, p=[0.6, 0.15, 0.25]))
    rhs = rng.integers(-3, 8, m).astype(float)
    upper = rng.integers(1, 10, n).astype(float)
    if feasible:
        # rhs chosen around an interior point so the program is never empty
        x0 = rng.uniform(0, upper)
        slack = rng.uniform(0, 2, m)
        sign = np.select([np.array(senses) == "<", np.array(senses) == ">"], [1.0, -1.0], 0.0)
        rhs = rows @ x0 + sign * slack
    return c, rows, senses, rhs, upper


def to_lp(c, rows, senses, rhs, upper):
    return LinearProgram.from_rows(c, list(zip(rows, senses, rhs)), [(0.0, u) for u in upper])


def random_instance(rng, n_max=5):
    n = int(rng.integers(1, n_max + 1))
    cap = float(rng.uniform(0.0, 0.1))
    return ProblemInstance(
        n_nodes=n,
        hap_power=float(rng.uniform(0.05, 1.0)),
        consume_power=float(rng.uniform(0.01, 0.1)),
        efficiency=float(rng.uniform(0.05, 1.0)),
        battery_cap=cap,
        battery_init=rng.uniform(0, cap, n),
        penalties=rng.uniform(0, 2, n),
    )


def random_schedule(rng, n):
    parts = rng.dirichlet(np.ones(n + 1))
    return Schedule.from_sample_times(parts[1:])


def pinned_lp_value(inst, sched, gains, method="auto"):
    """Optimal value of the deterministic equivalent with (tau, T) pinned."""
    lp = detequiv.build(inst, detequiv.ScenarioBundle(gains))
    sol = solve(detequiv.pin_schedule(lp, sched), method)
    assert sol.optimal, sol.status
    return sol.objective_value
