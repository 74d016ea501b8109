"""Physical parameters, the first-stage schedule and scenario value types.

Everything here is immutable after construction so instances can be passed
freely between worker processes.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

BUDGET_TOL = 1e-9


def _as_tuple(values, n: int, default: float, name: str) -> tuple[float, ...]:
    if values is None:
        return (float(default),) * n
    if np.isscalar(values):
        return (float(values),) * n
    out = tuple(float(v) for v in values)
    if len(out) != n:
        raise ValueError(f"{name} has {len(out)} entries, expected {n}")
    return out


@dataclass(frozen=True)
class ProblemInstance:
    """Network constants shared by every solver and simulator.

    Units are SI throughout: Watts, Joules, seconds.  ``hap_power`` is the
    effective radiated power at the harvester input (antenna gain folded in).
    """

    n_nodes: int = 5
    hap_power: float = 0.25
    consume_power: float = 0.05
    efficiency: float = 0.4
    battery_cap: float = 0.1
    battery_init: tuple[float, ...] | None = None
    penalties: tuple[float, ...] | None = None
    slot_seconds: float = 1.0

    def __post_init__(self):
        if int(self.n_nodes) != self.n_nodes or self.n_nodes < 1:
            raise ValueError("n_nodes must be a positive integer")
        object.__setattr__(self, "n_nodes", int(self.n_nodes))
        if not self.hap_power > 0:
            raise ValueError("hap_power must be positive")
        if not self.consume_power > 0:
            raise ValueError("consume_power must be positive")
        if not 0 < self.efficiency <= 1:
            raise ValueError("efficiency must lie in (0, 1]")
        if not self.battery_cap >= 0:
            raise ValueError("battery_cap must be nonnegative")
        if not self.slot_seconds > 0:
            raise ValueError("slot_seconds must be positive")
        b0 = _as_tuple(self.battery_init, self.n_nodes, 0.0, "battery_init")
        w = _as_tuple(self.penalties, self.n_nodes, 1.0, "penalties")
        if any(b < 0 or b > self.battery_cap for b in b0):
            raise ValueError("battery_init must lie in [0, battery_cap]")
        if any(not wi >= 0 for wi in w):
            raise ValueError("penalties must be nonnegative")
        object.__setattr__(self, "battery_init", b0)
        object.__setattr__(self, "penalties", w)

    @property
    def b0(self) -> np.ndarray:
        return np.asarray(self.battery_init, dtype=float)

    @property
    def w(self) -> np.ndarray:
        return np.asarray(self.penalties, dtype=float)

    @property
    def harvest_rate(self) -> float:
        """Joules harvested per second of charging at unit gain (eta * P)."""
        return self.efficiency * self.hap_power

    def replace(self, **changes) -> "ProblemInstance":
        return dataclasses.replace(self, **changes)

    def with_battery(self, levels: Sequence[float]) -> "ProblemInstance":
        # clip float dust from the battery recursion before revalidating
        b = np.clip(np.asarray(levels, dtype=float), 0.0, self.battery_cap)
        return dataclasses.replace(self, battery_init=tuple(b.tolist()))


def harvested_energy(inst: ProblemInstance, gain, tau):
    """Energy in Joules collected during ``tau`` seconds of charging: eta*P*g*tau."""
    g = np.asarray(gain, dtype=float)
    t = np.asarray(tau, dtype=float)
    if np.any(t < 0):
        raise ValueError("charging time must be nonnegative")
    if np.any((g < 0) | (g > 1)):
        raise ValueError("channel gain must lie in [0, 1]")
    out = inst.harvest_rate * g * t
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class Schedule:
    """First-stage decision: HAP charging time and per-node sampling times."""

    tau: float
    sample_times: tuple[float, ...]
    slot_seconds: float = 1.0

    def __post_init__(self):
        t = tuple(float(x) for x in self.sample_times)
        object.__setattr__(self, "sample_times", t)
        object.__setattr__(self, "tau", float(self.tau))
        if not t:
            raise ValueError("schedule needs at least one node")
        if self.tau < 0 or any(x < 0 for x in t):
            raise ValueError("charging and sampling times must be nonnegative")
        total = self.tau + sum(t)
        if abs(total - self.slot_seconds) > BUDGET_TOL:
            raise ValueError(
                f"time budget violated: tau + sum(T) = {total!r}, expected {self.slot_seconds!r}"
            )

    @classmethod
    def from_sample_times(cls, sample_times, slot_seconds: float = 1.0) -> "Schedule":
        """Give the charger whatever the nodes leave of the slot."""
        t = np.maximum(np.asarray(sample_times, dtype=float), 0.0)
        tau = slot_seconds - float(t.sum())
        if tau < -BUDGET_TOL:
            raise ValueError("sampling times exceed the slot")
        return cls(max(tau, 0.0), tuple(t.tolist()), slot_seconds)

    @property
    def T(self) -> np.ndarray:
        return np.asarray(self.sample_times, dtype=float)

    @property
    def z(self) -> float:
        """Max-min objective: the shortest sampling time."""
        return min(self.sample_times)

    @property
    def n_nodes(self) -> int:
        return len(self.sample_times)


@dataclass(frozen=True, eq=False)
class Scenario:
    """One joint gain realization, shape ``(n_nodes, horizon)``."""

    gains: np.ndarray

    def __post_init__(self):
        g = np.array(self.gains, dtype=float, copy=True)
        if g.ndim == 1:
            g = g[:, None]
        if g.ndim != 2:
            raise ValueError("scenario gains must be a (n_nodes, horizon) matrix")
        if np.any((g < 0) | (g > 1)) or not np.all(np.isfinite(g)):
            raise ValueError("channel gains must lie in [0, 1]")
        g.setflags(write=False)
        object.__setattr__(self, "gains", g)

    @property
    def n_nodes(self) -> int:
        return self.gains.shape[0]

    @property
    def horizon(self) -> int:
        return self.gains.shape[1]


@dataclass(frozen=True, eq=False)
class RecourseOutcome:
    """Second-stage result for one schedule under one scenario.

    All traces have shape ``(n_nodes, horizon)``.  ``penalty`` is the weighted
    idle total; ``value`` is the second-stage objective (the weighted penalty
    for a single slot, ``horizon * Z - sum(idle)`` for several slots).
    """

    idle_times: np.ndarray
    battery_trace: np.ndarray
    spill_trace: np.ndarray
    penalty: float
    value: float = field(default=float("nan"))

    @property
    def total_idle(self) -> float:
        return float(self.idle_times.sum())
