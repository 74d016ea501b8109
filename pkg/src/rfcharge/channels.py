"""Seeded channel-gain sampling.

Raw draws come from a Gaussian, Rayleigh or Rician law and are mapped into
[0, 1] by an affine transform followed by a clamp,

    g = clip(offset + scale_factor * raw, 0, 1)

Two calibrations of the affine map are available:

``span`` (default)
    The raw law's central ``1 - 2*SPAN_TAIL`` probability interval is mapped
    onto a unit-width window centred on 0.5 (the analytic counterpart of
    min-max scaling a large sample), then the offset is tuned so the
    post-clamp mean is exactly 0.5.

``mean``
    Gaussian draws are taken directly at mean 0.5 with the given variance;
    Rayleigh/Rician draws are multiplied by ``0.5 / raw_mean``.  The factor
    is re-tuned only when clamping pushes the mean outside 0.5 +- 0.01.

Streams use the counter-based Philox generator keyed by a ``SeedSequence``,
so children derived from ``(seed, key...)`` are disjoint and reproducible.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, optimize, stats

from .model import Scenario

SPAN_TAIL = 1e-5
MEAN_TOL = 0.01
TARGET_MEAN = 0.5
RICIAN_SPREAD = 1.0

DEFAULT_PARAMS = {"gaussian": 0.1, "rayleigh": 2.0, "rician": 4.0}


class ChannelKind(str, enum.Enum):
    GAUSSIAN = "gaussian"
    RAYLEIGH = "rayleigh"
    RICIAN = "rician"
    FIXED = "fixed"


def raw_distribution(kind: ChannelKind, param: float):
    """Frozen scipy distribution of the unnormalized draw."""
    kind = ChannelKind(kind)
    if kind is ChannelKind.GAUSSIAN:
        return stats.norm(loc=TARGET_MEAN, scale=np.sqrt(param))
    if kind is ChannelKind.RAYLEIGH:
        return stats.rayleigh(scale=param)
    if kind is ChannelKind.RICIAN:
        return stats.rice(param / RICIAN_SPREAD, scale=RICIAN_SPREAD)
    raise ValueError("fixed channels have no raw distribution")


def clamped_mean(dist, offset: float, factor: float) -> float:
    """E[clip(offset + factor * X, 0, 1)] by quadrature."""
    lo, hi = dist.support()
    x0 = max((0.0 - offset) / factor, lo)
    x1 = min((1.0 - offset) / factor, hi)
    if x1 <= x0:
        return 1.0 if x0 >= hi or offset + factor * x0 >= 1 else 0.0
    mass = dist.cdf(x1) - dist.cdf(x0)
    first, _ = integrate.quad(lambda x: x * dist.pdf(x), x0, x1, limit=200, epsabs=1e-13)
    return float(dist.sf(x1) + offset * mass + factor * first)


@dataclass(frozen=True)
class ChannelModel:
    kind: ChannelKind
    param: float
    scaling: str = "span"
    offset: float = field(init=False)
    scale_factor: float = field(init=False)
    calibration: str = field(init=False, compare=False)

    def __post_init__(self):
        kind = ChannelKind(self.kind)
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "param", float(self.param))
        if self.scaling not in ("span", "mean"):
            raise ValueError(f"unknown scaling {self.scaling!r}")
        if kind is ChannelKind.FIXED:
            if not 0 <= self.param <= 1:
                raise ValueError("fixed gain must lie in [0, 1]")
            self._set(self.param, 0.0, f"fixed gain {self.param:g}")
            return
        if not self.param > 0:
            raise ValueError(f"{kind.value} parameter must be positive")
        dist = raw_distribution(kind, self.param)
        if self.scaling == "span":
            width = dist.ppf(1 - SPAN_TAIL) - dist.ppf(SPAN_TAIL)
            factor = 1.0 / width
            base = TARGET_MEAN - factor * dist.mean()
            shift = optimize.brentq(
                lambda s: clamped_mean(dist, base + s, factor) - TARGET_MEAN,
                -0.25, 0.25, xtol=1e-14,
            )
            self._set(base + shift, factor,
                      f"span[{SPAN_TAIL:g}, 1-{SPAN_TAIL:g}] width={width:.6g} shift={shift:+.3g}")
            return
        if kind is ChannelKind.GAUSSIAN:
            offset, factor = 0.0, 1.0
        else:
            offset, factor = 0.0, TARGET_MEAN / dist.mean()
        note = f"mean-ratio factor={factor:.6g}"
        drift = clamped_mean(dist, offset, factor) - TARGET_MEAN
        if abs(drift) > MEAN_TOL:
            factor = optimize.brentq(
                lambda f: clamped_mean(dist, offset, f) - TARGET_MEAN,
                0.1 * factor, 10 * factor, xtol=1e-14,
            )
            note += f" rescaled to {factor:.6g} (clamp drift {drift:+.3g})"
        self._set(offset, factor, note)

    def _set(self, offset, factor, note):
        object.__setattr__(self, "offset", float(offset))
        object.__setattr__(self, "scale_factor", float(factor))
        object.__setattr__(self, "calibration", note)

    @classmethod
    def gaussian(cls, variance: float = DEFAULT_PARAMS["gaussian"], scaling: str = "span"):
        return cls(ChannelKind.GAUSSIAN, variance, scaling)

    @classmethod
    def rayleigh(cls, scale: float = DEFAULT_PARAMS["rayleigh"], scaling: str = "span"):
        return cls(ChannelKind.RAYLEIGH, scale, scaling)

    @classmethod
    def rician(cls, noncentrality: float = DEFAULT_PARAMS["rician"], scaling: str = "span"):
        return cls(ChannelKind.RICIAN, noncentrality, scaling)

    @classmethod
    def fixed(cls, gain: float):
        return cls(ChannelKind.FIXED, gain)

    @property
    def is_fixed(self) -> bool:
        return self.kind is ChannelKind.FIXED

    @property
    def label(self) -> str:
        return f"{self.kind.value}:{self.param:g}"

    def normalize(self, raw):
        raw = np.asarray(raw, dtype=float)
        if self.is_fixed:
            return np.full_like(raw, self.param)
        return np.clip(self.offset + self.scale_factor * raw, 0.0, 1.0)

    def raw_samples(self, gen: np.random.Generator, size) -> np.ndarray:
        if self.kind is ChannelKind.GAUSSIAN:
            return TARGET_MEAN + np.sqrt(self.param) * gen.standard_normal(size)
        if self.kind is ChannelKind.RAYLEIGH:
            return gen.rayleigh(self.param, size)
        if self.kind is ChannelKind.RICIAN:
            x = self.param + RICIAN_SPREAD * gen.standard_normal(size)
            y = RICIAN_SPREAD * gen.standard_normal(size)
            return np.hypot(x, y)
        return np.full(size, self.param)


def normalize(kind, param: float, raw_sample, scaling: str = "span"):
    """Map raw draw(s) of the given law into [0, 1]."""
    out = ChannelModel(ChannelKind(kind), param, scaling).normalize(raw_sample)
    return float(out) if out.ndim == 0 else out


class GainStream:
    """Reproducible source of gain draws; owned by one worker at a time."""

    def __init__(self, model: ChannelModel, seed: int, key: tuple[int, ...] = ()):
        self.model = model
        self.seed = int(seed)
        self.key = tuple(int(k) for k in key)
        self.counter = 0
        ss = np.random.SeedSequence(self.seed, spawn_key=self.key)
        self._gen = np.random.Generator(np.random.Philox(ss))

    def child(self, *key: int, model: ChannelModel | None = None) -> "GainStream":
        """Independent stream for ``key`` (e.g. a replication or worker index)."""
        return GainStream(model or self.model, self.seed, self.key + tuple(key))

    def draw(self, size) -> np.ndarray:
        g = self.model.normalize(self.model.raw_samples(self._gen, size))
        self.counter += int(np.prod(size))
        return g


def sample_scenario(stream: GainStream, n_nodes: int, horizon: int = 1) -> Scenario:
    if n_nodes < 1 or horizon < 1:
        raise ValueError("n_nodes and horizon must be positive")
    return Scenario(stream.draw((n_nodes, horizon)))


def sample_bundle(stream: GainStream, count: int, n_nodes: int, horizon: int = 1) -> np.ndarray:
    """``count`` i.i.d. scenarios as a ``(count, n_nodes, horizon)`` array."""
    if count < 1 or n_nodes < 1 or horizon < 1:
        raise ValueError("count, n_nodes and horizon must be positive")
    return stream.draw((count, n_nodes, horizon))
