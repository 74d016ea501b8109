"""Linear programs: ``maximize c.x`` subject to rows ``a.x {<=,=,>=} b`` and bounds.

Two backends sit behind :func:`solve`:

* ``simplex`` - a dense two-phase tableau simplex.  Dantzig pricing, switching
  to Bland's rule for good once a run of degenerate pivots is seen, so the
  pivot sequence (and the returned vertex) is a pure function of the input.
* ``highs`` - scipy's HiGHS dual simplex, for deterministic equivalents that
  are too large for a dense tableau.

``auto`` picks the dense solver whenever the tableau is small.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.optimize import linprog

FEAS_TOL = 1e-7
PIVOT_TOL = 1e-9
OPT_TOL = 1e-9
DEGENERATE_STREAK = 50
AUTO_DENSE_LIMIT = 60_000

_SENSES = {"<=": "<", "≤": "<", "<": "<", "=": "=", "==": "=", ">=": ">", "≥": ">", ">": ">"}


class LpError(RuntimeError):
    """Malformed program or a solver breakdown (not infeasibility)."""


class LpStatus(str, enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


@dataclass(frozen=True, eq=False)
class LinearProgram:
    objective: np.ndarray
    A: sparse.csr_matrix
    sense: np.ndarray
    rhs: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    blocks: dict = field(default_factory=dict)

    def __post_init__(self):
        c = np.asarray(self.objective, dtype=float).ravel()
        n = c.size
        A = sparse.csr_matrix(self.A, dtype=float)
        if A.shape[0] and A.shape[1] != n:
            raise LpError(f"constraint rows have {A.shape[1]} columns, objective has {n}")
        if A.shape[0] == 0:
            A = sparse.csr_matrix((0, n))
        sense = np.array([_SENSES.get(s, "?") for s in np.asarray(self.sense).ravel()], dtype="<U1")
        if np.any(sense == "?"):
            raise LpError(f"unknown relation in {self.sense!r}")
        rhs = np.asarray(self.rhs, dtype=float).ravel()
        if not (sense.size == rhs.size == A.shape[0]):
            raise LpError("sense/rhs lengths must match the number of rows")
        lower = np.broadcast_to(np.asarray(self.lower, dtype=float), (n,)).copy()
        upper = np.broadcast_to(np.asarray(self.upper, dtype=float), (n,)).copy()
        if np.any(lower > upper):
            raise LpError("a lower bound exceeds its upper bound")
        if not (np.all(np.isfinite(c)) and np.all(np.isfinite(A.data)) and np.all(np.isfinite(rhs))):
            raise LpError("coefficients must be finite")
        for name, value in (("objective", c), ("A", A), ("sense", sense), ("rhs", rhs),
                            ("lower", lower), ("upper", upper)):
            object.__setattr__(self, name, value)

    @classmethod
    def from_rows(cls, objective, constraints=(), bounds=None, blocks=None) -> "LinearProgram":
        """Build from ``(row, relation, rhs)`` triples and ``(lower, upper)`` pairs."""
        c = np.asarray(objective, dtype=float).ravel()
        rows, senses, rhs = [], [], []
        for row, rel, b in constraints:
            row = np.asarray(row, dtype=float).ravel()
            if row.size != c.size:
                raise LpError(f"row of length {row.size} for {c.size} variables")
            rows.append(row)
            senses.append(rel)
            rhs.append(b)
        A = sparse.csr_matrix(np.vstack(rows)) if rows else sparse.csr_matrix((0, c.size))
        if bounds is None:
            lower, upper = np.zeros(c.size), np.full(c.size, np.inf)
        else:
            if len(bounds) != c.size:
                raise LpError("one (lower, upper) pair per variable")
            lower = np.array([-np.inf if lo is None else lo for lo, _ in bounds], dtype=float)
            upper = np.array([np.inf if hi is None else hi for _, hi in bounds], dtype=float)
        return cls(c, A, np.array(senses, dtype=object), np.array(rhs, dtype=float), lower, upper,
                   dict(blocks or {}))

    @property
    def n_vars(self) -> int:
        return self.objective.size

    @property
    def n_rows(self) -> int:
        return self.A.shape[0]

    def max_violation(self, x) -> float:
        """Largest constraint or bound violation of ``x`` (0 when feasible)."""
        x = np.asarray(x, dtype=float)
        ax = self.A @ x
        viol = [0.0]
        for s, op in (("<", lambda d: d), (">", lambda d: -d)):
            m = self.sense == s
            if m.any():
                viol.append(float(np.max(op(ax[m] - self.rhs[m]))))
        m = self.sense == "="
        if m.any():
            viol.append(float(np.max(np.abs(ax[m] - self.rhs[m]))))
        viol.append(float(np.max(self.lower - x, initial=0.0)))
        viol.append(float(np.max(x - self.upper, initial=0.0)))
        return max(viol)


@dataclass(frozen=True, eq=False)
class LpSolution:
    status: LpStatus
    variables: np.ndarray
    objective_value: float
    iterations: int = 0
    method: str = ""

    @property
    def optimal(self) -> bool:
        return self.status is LpStatus.OPTIMAL


def solve(lp: LinearProgram, method: str = "auto") -> LpSolution:
    if method == "auto":
        method = "simplex" if (lp.n_rows + 1) * (2 * lp.n_vars + lp.n_rows + 1) <= AUTO_DENSE_LIMIT else "highs"
    if method == "simplex":
        return _solve_simplex(lp)
    if method == "highs":
        return _solve_highs(lp)
    raise LpError(f"unknown LP method {method!r}")


# -- HiGHS backend ------------------------------------------------------------

def _solve_highs(lp: LinearProgram) -> LpSolution:
    le, ge, eq = (lp.sense == "<"), (lp.sense == ">"), (lp.sense == "=")
    A_ub = sparse.vstack([lp.A[le], -lp.A[ge]]).tocsr() if (le.any() or ge.any()) else None
    b_ub = np.concatenate([lp.rhs[le], -lp.rhs[ge]]) if A_ub is not None else None
    A_eq = lp.A[eq] if eq.any() else None
    b_eq = lp.rhs[eq] if eq.any() else None
    bounds = np.column_stack([lp.lower, lp.upper])
    bounds = [(None if np.isinf(lo) else lo, None if np.isinf(hi) else hi) for lo, hi in bounds]
    res = linprog(-lp.objective, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq,
                  bounds=bounds, method="highs-ds")
    if res.status == 0:
        x = np.asarray(res.x, dtype=float)
        return LpSolution(LpStatus.OPTIMAL, x, float(lp.objective @ x), int(res.nit), "highs")
    if res.status == 2:
        return LpSolution(LpStatus.INFEASIBLE, np.full(lp.n_vars, np.nan), float("nan"), int(res.nit), "highs")
    if res.status == 3:
        return LpSolution(LpStatus.UNBOUNDED, np.full(lp.n_vars, np.nan), float("inf"), int(res.nit), "highs")
    raise LpError(f"HiGHS failed: {res.message}")


# -- dense simplex ------------------------------------------------------------

def _standard_form(lp: LinearProgram):
    """Rewrite as ``max c'.u  s.t.  M u {rel} r,  u >= 0``.

    Returns the pieces plus the recovery map ``x = x0 + sum(sign * u)``.
    """
    n = lp.n_vars
    A = lp.A.toarray()
    rhs = lp.rhs.copy()
    cols, costs = [], []
    recover = []  # (var index, sign) per standard-form column
    x0 = np.zeros(n)
    extra_rows = []  # (column index, bound)
    for j in range(n):
        lo, hi, a, c = lp.lower[j], lp.upper[j], A[:, j], lp.objective[j]
        if np.isfinite(lo):
            x0[j] = lo
            cols.append(a)
            costs.append(c)
            recover.append((j, 1.0))
            if np.isfinite(hi):
                extra_rows.append((len(cols) - 1, hi - lo))
        elif np.isfinite(hi):
            x0[j] = hi
            cols.append(-a)
            costs.append(-c)
            recover.append((j, -1.0))
        else:
            cols += [a, -a]
            costs += [c, -c]
            recover += [(j, 1.0), (j, -1.0)]
    m0 = len(rhs)
    M = np.column_stack(cols) if cols else np.zeros((m0, 0))
    rhs = rhs - A @ x0
    sense = list(lp.sense)
    if extra_rows:
        B = np.zeros((len(extra_rows), M.shape[1]))
        for k, (col, ub) in enumerate(extra_rows):
            B[k, col] = 1.0
        M = np.vstack([M, B])
        rhs = np.concatenate([rhs, [ub for _, ub in extra_rows]])
        sense += ["<"] * len(extra_rows)
    return M, np.asarray(sense), rhs, np.asarray(costs, dtype=float), recover, x0


class _Tableau:
    def __init__(self, full: np.ndarray, basis: list[int]):
        self.full = full
        self.basis = basis
        self.iterations = 0
        self.bland = False
        self.streak = 0

    @property
    def m(self) -> int:
        return self.full.shape[0] - 1

    def pivot(self, r: int, e: int):
        f = self.full
        f[r] /= f[r, e]
        col = f[:, e].copy()
        col[r] = 0.0
        f -= np.outer(col, f[r])
        f[np.abs(f) < 1e-13] = 0.0
        self.basis[r] = e
        self.iterations += 1

    def run(self, allowed: np.ndarray, max_iter: int) -> str:
        f = self.full
        m = self.m
        while True:
            reduced = np.where(allowed, f[m, :-1], 0.0)
            cand = np.flatnonzero(reduced > OPT_TOL)
            if cand.size == 0:
                return "optimal"
            e = int(cand[0]) if self.bland else int(cand[np.argmax(reduced[cand])])
            column = f[:m, e]
            rows = np.flatnonzero(column > PIVOT_TOL)
            if rows.size == 0:
                return "unbounded"
            ratios = f[rows, -1] / column[rows]
            best = ratios.min()
            ties = rows[ratios <= best + 1e-12 * max(1.0, abs(best))]
            r = int(min(ties, key=lambda i: self.basis[i]))
            if best <= 1e-12:
                self.streak += 1
                if self.streak > DEGENERATE_STREAK:
                    self.bland = True
            else:
                self.streak = 0
            self.pivot(r, e)
            if self.iterations > max_iter:
                raise LpError(f"simplex exceeded {max_iter} pivots")


def _solve_simplex(lp: LinearProgram) -> LpSolution:
    M, sense, rhs, costs, recover, x0 = _standard_form(lp)
    m, k = M.shape
    flip = rhs < 0
    M[flip] *= -1
    rhs = np.abs(rhs)
    sense = np.where(flip, np.where(sense == "<", ">", np.where(sense == ">", "<", "=")), sense)

    n_slack = int(np.sum(sense != "="))
    n_art = int(np.sum(sense != "<"))
    width = k + n_slack + n_art
    full = np.zeros((m + 1, width + 1))
    full[:m, :k] = M
    full[:m, -1] = rhs
    basis = [0] * m
    s = k
    a = k + n_slack
    art_rows = []
    for i in range(m):
        if sense[i] == "<":
            full[i, s] = 1.0
            basis[i] = s
            s += 1
        else:
            if sense[i] == ">":
                full[i, s] = -1.0
                s += 1
            full[i, a] = 1.0
            basis[i] = a
            art_rows.append(i)
            a += 1
    is_art = np.zeros(width, dtype=bool)
    is_art[k + n_slack:] = True
    max_iter = 50 * (m + width) + 1000
    tab = _Tableau(full, basis)

    if art_rows:
        full[m, :] = full[art_rows].sum(axis=0)
        full[m, is_art.nonzero()[0]] = 0.0
        tab.run(np.ones(width, dtype=bool), max_iter)
        scale = max(1.0, float(np.max(rhs, initial=0.0)))
        if -full[m, -1] < -FEAS_TOL * scale:
            return LpSolution(LpStatus.INFEASIBLE, np.full(lp.n_vars, np.nan), float("nan"),
                              tab.iterations, "simplex")
        keep = []
        for i in range(m):
            if is_art[tab.basis[i]]:
                nz = np.flatnonzero((np.abs(full[i, :width]) > PIVOT_TOL) & ~is_art)
                if nz.size:
                    tab.pivot(i, int(nz[0]))
                    keep.append(i)
            else:
                keep.append(i)
        if len(keep) < m:
            full = np.vstack([full[keep], full[m:]])
            tab.full = full
            tab.basis = [tab.basis[i] for i in keep]
            m = len(keep)

    cost = np.zeros(width)
    cost[:k] = costs
    obj = np.append(cost, 0.0)
    for i, j in enumerate(tab.basis):
        obj -= cost[j] * tab.full[i]
    tab.full[m] = obj
    status = tab.run(~is_art, max_iter)
    if status == "unbounded":
        return LpSolution(LpStatus.UNBOUNDED, np.full(lp.n_vars, np.nan), float("inf"),
                          tab.iterations, "simplex")
    u = np.zeros(width)
    for i, j in enumerate(tab.basis):
        u[j] = tab.full[i, -1]
    x = x0.copy()
    for col, (j, sign) in enumerate(recover):
        x[j] += sign * u[col]
    return LpSolution(LpStatus.OPTIMAL, x, float(lp.objective @ x), tab.iterations, "simplex")
