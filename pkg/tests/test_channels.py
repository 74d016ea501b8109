import math

import numpy as np
import pytest
from scipy import special

from rfcharge.channels import (ChannelKind, ChannelModel, GainStream, normalize, sample_bundle,
                               sample_scenario)

STOCHASTIC = [ChannelModel.gaussian(), ChannelModel.rayleigh(), ChannelModel.rician()]


def rician_mean_laguerre(nu, sigma=1.0):
    # sigma * sqrt(pi/2) * L_{1/2}(-nu^2 / 2 sigma^2), with L_{1/2} via Bessel functions
    x = -nu ** 2 / (2 * sigma ** 2)
    lag = math.exp(x / 2) * ((1 - x) * special.i0(-x / 2) - x * special.i1(-x / 2))
    return sigma * math.sqrt(math.pi / 2) * lag


def test_fixed_scenarios():
    s = sample_scenario(GainStream(ChannelModel.fixed(0.5), 3), 5, 1)
    assert s.gains.shape == (5, 1) and np.all(s.gains == 0.5)
    s = sample_scenario(GainStream(ChannelModel.fixed(0.01), 3), 2, 3)
    assert s.gains.shape == (2, 3) and np.all(s.gains == 0.01)


def test_gaussian_scaling_contract():
    g = sample_bundle(GainStream(ChannelModel.gaussian(0.1), 11), 20_000, 5, 1)
    assert g.min() >= 0 and g.max() <= 1
    assert abs(g.mean() - 0.5) <= 0.01


def test_normalize_mean_mode_examples():
    mu = 2 * math.sqrt(math.pi / 2)
    assert mu == pytest.approx(2.5066, abs=1e-4)
    assert normalize("rayleigh", 2.0, mu, scaling="mean") == pytest.approx(0.5, abs=1e-12)
    assert normalize("gaussian", 0.1, -0.3, scaling="mean") == 0.0
    assert normalize("rician", 4.0, rician_mean_laguerre(4.0), scaling="mean") == pytest.approx(0.5, abs=1e-9)


def test_rician_mean_monte_carlo_oracle():
    # independent check of the Laguerre formula itself
    rng = np.random.default_rng(7)
    x = 4 + rng.standard_normal(10 ** 7)
    y = rng.standard_normal(10 ** 7)
    assert np.hypot(x, y).mean() == pytest.approx(rician_mean_laguerre(4.0), abs=2e-3)


def test_span_mode_maps_raw_mean_near_half():
    mu = 2 * math.sqrt(math.pi / 2)
    assert normalize("rayleigh", 2.0, mu) == pytest.approx(0.5, abs=1e-3)
    assert normalize("rician", 4.0, rician_mean_laguerre(4.0)) == pytest.approx(0.5, abs=1e-3)
    assert normalize("gaussian", 0.1, 0.5) == pytest.approx(0.5, abs=1e-12)
    assert normalize("gaussian", 0.1, -5.0) == 0.0


@pytest.mark.parametrize("model", STOCHASTIC + [ChannelModel.rayleigh(scaling="mean")],
                         ids=lambda m: f"{m.label}-{m.scaling}")
def test_range_and_mean_calibration(model):
    g = GainStream(model, 5).draw(10 ** 6)
    assert g.min() >= 0.0 and g.max() <= 1.0
    assert abs(g.mean() - 0.5) <= 0.01


def test_variance_ordering():
    var = {m.kind: GainStream(m, 9).draw(10 ** 6).var() for m in STOCHASTIC}
    assert var[ChannelKind.GAUSSIAN] < var[ChannelKind.RICIAN] < var[ChannelKind.RAYLEIGH]


def test_determinism_and_disjoint_children():
    m = ChannelModel.rician()
    a = sample_bundle(GainStream(m, 42), 50, 5, 3)
    b = sample_bundle(GainStream(m, 42), 50, 5, 3)
    assert np.array_equal(a, b)
    parent = GainStream(m, 42)
    c1 = parent.child(1).draw(100)
    c2 = parent.child(2).draw(100)
    assert not np.array_equal(c1, c2)
    assert np.array_equal(c1, GainStream(m, 42, (1,)).draw(100))


def test_stream_counts_draws():
    s = GainStream(ChannelModel.gaussian(), 1)
    sample_scenario(s, 5, 2)
    sample_bundle(s, 3, 5, 2)
    assert s.counter == 10 + 30


@pytest.mark.parametrize("kind,param", [("gaussian", 0), ("rayleigh", -1), ("fixed", 1.5)])
def test_model_validation(kind, param):
    with pytest.raises(ValueError):
        ChannelModel(kind, param)


def test_calibration_note_recorded():
    assert "span" in ChannelModel.rician().calibration
    assert "mean-ratio" in ChannelModel.rician(scaling="mean").calibration
