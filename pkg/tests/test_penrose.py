import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles
from vpwaves.errors import TargetNotReachable
from vpwaves.penrose import (DispersionFunction, critical_period, dispersion_root, extremum_integral,
                             nyquist, unstable_neighbor, unstable_roots, winding_number)
from vpwaves.profiles import VelocityGrid, double_gaussian, maxwellian

GM = VelocityGrid.symmetric(8.0, 4097)
GD = VelocityGrid.symmetric(12.0, 4097)


def test_maxwellian_is_stable():
    m = maxwellian(GM)
    assert extremum_integral(m, 0.0) == pytest.approx(-1.0, abs=1e-10)
    rep = critical_period(m)
    assert math.isinf(rep.T0)
    assert rep.unstable_k_intervals == []
    assert rep.to_dict()["t0"] == "inf"
    assert unstable_roots(m, 0.5) == []


def test_maxwellian_penrose_off_center_matches_oracle():
    m = maxwellian(GM)
    for c in (0.5, 1.35, 2.5):
        assert extremum_integral(m, c) == pytest.approx(oracles.maxwellian_penrose(c), abs=1e-10)


def test_double_gaussian_critical_period_grid_doubling():
    a = critical_period(double_gaussian(GD, 3.0)).T0
    b = critical_period(double_gaussian(GD.refined(2), 3.0)).T0
    assert math.isfinite(a)
    assert abs(a - b) / a < 1e-4


def test_double_gaussian_single_interval_from_zero():
    rep = critical_period(double_gaussian(GD, 3.0))
    assert len(rep.unstable_k_intervals) == 1
    lo, hi = rep.unstable_k_intervals[0]
    assert lo == 0.0
    assert hi == pytest.approx(rep.k_max, rel=1e-14)
    assert rep.is_unstable(0.5 * hi) and not rep.is_unstable(1.01 * hi)


def test_report_json_round_trip(tmp_path):
    rep = critical_period(double_gaussian(GD, 3.0))
    path = tmp_path / "r.json"
    rep.to_json(path)
    d = json.loads(path.read_text())
    assert float(d["t0"]) == rep.T0


def test_winding_number_counts():
    from vpwaves.penrose import ExtremumIntegral as X
    cr = [X(-3, -0.5, "max"), X(0, 0.18, "min"), X(3, -0.5, "max")]
    assert winding_number(cr, 0.1) == 1
    assert winding_number(cr, 0.2) == 0


def test_root_satisfies_dispersion_relation_independently():
    p = double_gaussian(GD, 2.4)
    r = dispersion_root(p, 0.3, 0.5j)
    assert r.c.imag > 0
    res = oracles.dispersion_residual(r.c, 0.3, lambda v: float(p(v, 1)))
    assert abs(res) < 1e-7
    assert r.growth_rate == pytest.approx(0.3 * r.c.imag)


def test_nyquist_crossings_are_extremum_integrals():
    p = double_gaussian(GD, 3.0)
    cur = nyquist(p)
    vals = sorted(v for _, v, _ in cur.real_axis_crossings)
    rep = critical_period(p)
    assert vals == pytest.approx(sorted(e.integral for e in rep.extrema_integrals), abs=1e-12)
    # curve on the node grid: Im Z = pi f0'
    assert np.allclose(cur.z.imag, np.pi * p.derivative, atol=1e-14)


@settings(max_examples=8)
@given(st.floats(2.2, 4.0), st.floats(0.2, 0.95))
def test_unstable_iff_root_exists(v0, frac):
    p = double_gaussian(GD, v0)
    rep = critical_period(p)
    k = frac * rep.k_max
    roots = unstable_roots(p, k, report=rep)
    assert roots and roots[0].c.imag > 0


@settings(max_examples=5)
@given(st.floats(1.05, 1.5))
def test_stable_beyond_kmax(factor):
    p = double_gaussian(GD, 3.0)
    rep = critical_period(p)
    assert unstable_roots(p, factor * rep.k_max, report=rep) == []


def test_dispersion_derivative_matches_difference():
    D = DispersionFunction(double_gaussian(GD, 2.4))
    c, h = 0.3 + 0.4j, 1e-5
    fd = (D.z(c + h) - D.z(c - h)) / (2 * h)
    assert D.dz(c) == pytest.approx(fd, rel=1e-6)


def test_unstable_neighbor_loose_target():
    m = maxwellian(VelocityGrid.symmetric(8.0, 2**15 + 1))
    r = unstable_neighbor(m, 2 * math.pi, 1.2, 0.2)
    assert r.distance.total < 0.2
    assert r.root.c.imag > 1e-6


def test_unstable_neighbor_crossover_fails_above_critical_regularity():
    m = maxwellian(VelocityGrid.symmetric(8.0, 2**15 + 1))
    with pytest.raises(TargetNotReachable):
        unstable_neighbor(m, 2 * math.pi, 1.8, 1e-3)
