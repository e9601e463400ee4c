import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles
from vpwaves.errors import InsufficientPoints, StepTooLarge, UnstableMode
from vpwaves.landau import (FieldTimeSeries, ModeInitialData, data_norm, fit_decay, gaussian_data,
                            hat_data, integral_decay_norm, landau_field, linearized_evolve,
                            weizner_data)
from vpwaves.profiles import VelocityGrid, double_gaussian, maxwellian

G = VelocityGrid.symmetric(8.0, 4097)
M = maxwellian(G)


def test_initial_field_gaussian():
    d = gaussian_data(G, 0.5)
    s = landau_field(M, d, np.array([0.0, 1.0]))
    assert s.e_k[0] == pytest.approx(oracles.gaussian_field_e0(0.5), rel=1e-8)


def test_initial_field_hat():
    d = hat_data(G, 1.0)
    s = landau_field(M, d, np.array([0.0]))
    assert s.e_k[0] == pytest.approx(d.e0(G), rel=1e-6)


def test_contour_matches_oracle():
    d = gaussian_data(G, 0.5)
    t = np.arange(0, 40.0001, 0.05)
    s = landau_field(M, d, t)
    o = linearized_evolve(M, d, 0.01, 4000, stride=5)
    assert np.max(np.abs(s.e_k - o.e_k)) / np.max(o.abs) < 1e-3


def test_free_streaming_phase_mixing():
    k = 0.5
    free = linearized_evolve(M, ModeInitialData(k, M.values), 0.01, 1000, coupling=False, stride=10)
    rho = np.abs(free.e_k) * k  # |E_k| = |rho_k| / k
    ref = np.array([oracles.free_streaming_density(2.0, k, t) for t in free.t])
    assert np.max(np.abs(rho - ref)) < 1e-12


def test_unstable_profile_rejected():
    p = double_gaussian(VelocityGrid.symmetric(12.0, 4097), 3.0)
    with pytest.raises(UnstableMode):
        landau_field(p, gaussian_data(p.grid, 0.3), np.array([0.0, 1.0]))


def test_negative_k_is_conjugate():
    t = np.linspace(0, 20, 81)
    d = gaussian_data(G, 0.7, center=0.5)
    a = landau_field(M, d, t)
    b = landau_field(M, d.conj(), t)
    assert np.allclose(b.e_k, np.conj(a.e_k), atol=1e-14)


def test_zero_data_gives_zero_field():
    s = landau_field(M, ModeInitialData(0.5, np.zeros(G.n_v)), np.linspace(0, 10, 11))
    assert np.all(s.e_k == 0)


@settings(max_examples=10)
@given(st.floats(-2, 2), st.floats(-2, 2))
def test_linearity(a, b):
    t = np.linspace(0, 30, 61)
    d1, d2 = gaussian_data(G, 0.5), hat_data(G, 0.5)
    mix = ModeInitialData(0.5, a * d1.g + b * d2.g, a * d1.dg + b * d2.dg)
    lhs = landau_field(M, mix, t).e_k
    rhs = a * landau_field(M, d1, t).e_k + b * landau_field(M, d2, t).e_k
    assert np.allclose(lhs, rhs, atol=1e-12 * (1 + abs(a) + abs(b)))


def test_step_too_large():
    with pytest.raises(StepTooLarge):
        linearized_evolve(M, gaussian_data(G, 0.5), 1.0, 10)


@given(st.floats(0.5, 4.0))
def test_fit_recovers_power_law(p):
    t = np.linspace(1, 200, 4000)
    s = FieldTimeSeries(t, 3.0 * t ** (-p), 1.0)
    f = fit_decay(s, (20, 200))
    assert f.exponent == pytest.approx(p, abs=1e-6)
    assert f.r_squared > 0.999999


def test_fit_needs_points():
    t = np.linspace(1, 30, 30)
    with pytest.raises(InsufficientPoints):
        fit_decay(FieldTimeSeries(t, 0 * t, 1.0), (20, 30))


def test_weizner_decay_exponent():
    t = np.arange(0, 200.0001, 0.05)
    s = landau_field(M, weizner_data(G, 1.0), t)
    f = fit_decay(s, (20, 200))
    assert f.exponent == pytest.approx(3.0, abs=0.3)
    assert f.r_squared >= 0.98


def test_decay_norm_monotone_in_tmax():
    d = gaussian_data(G, 0.5)
    t = np.arange(0, 60.0001, 0.1)
    s = landau_field(M, d, t)
    half = FieldTimeSeries(t[: t.size // 2], s.e_k[: t.size // 2], 0.5)
    assert integral_decay_norm([half], s_v=1).value <= integral_decay_norm([s], s_v=1).value
    assert integral_decay_norm([s], s_v=1).tail_fraction < 1e-3
    assert data_norm(G, [d]) > 0
