import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from vpwaves.errors import (ConfigError, NegativeDensity, OutOfDomain, UnresolvableKernel,
                            UnresolvedBump, ZeroMass)
from vpwaves.profiles import (BumpFamily, VelocityGrid, VelocityProfile, cutoff, double_gaussian,
                              find_extrema, lorentzian, maxwellian, modified_family, mollify,
                              named_profile, normalize, read_profile_csv, rescale_profile,
                              symmetrize_near, write_profile_csv)
from vpwaves.quadrature import pv_integral

G = VelocityGrid.symmetric(8.0, 4097)


def test_grid_rejects_bad_bounds():
    with pytest.raises(ConfigError):
        VelocityGrid(1.0, -1.0, 100)
    with pytest.raises(ConfigError):
        VelocityGrid(-1.0, 1.0, 4)


def test_maxwellian_moments():
    m = maxwellian(G)
    assert m.mass == pytest.approx(1.0, abs=1e-12)
    assert m.second_moment == pytest.approx(1.0, abs=1e-12)


def test_double_gaussian_is_normalized():
    p = double_gaussian(VelocityGrid.symmetric(12.0, 4097), 3.0)
    assert p.mass == pytest.approx(1.0, abs=1e-12)


def test_negative_samples_rejected():
    v = G.nodes
    with pytest.raises(NegativeDensity):
        VelocityProfile(G, -np.exp(-v * v))


def test_heavy_tail_rejected_at_default_tolerance():
    g = VelocityGrid.symmetric(8.0, 1025)
    with pytest.raises(OutOfDomain):
        VelocityProfile(g, 1 / (np.pi * (1 + g.nodes**2)))


def test_normalize_zero_mass():
    with pytest.raises(ZeroMass):
        normalize(VelocityProfile(G, np.zeros(G.n_v)))


def test_normalize_scales_to_unit_mass():
    m = maxwellian(G)
    two = m.with_values(2 * m.values)
    assert normalize(two).mass == pytest.approx(1.0, abs=1e-14)


def test_named_profile_unknown():
    with pytest.raises(ConfigError):
        named_profile("kappa", G)


def test_cutoff_plateau_and_support():
    x = np.linspace(-3, 3, 601)
    c = cutoff(x)
    assert np.all(c[np.abs(x) <= 1] == 1)
    assert np.all(c[np.abs(x) >= 2] == 0)
    # derivative matches finite differences
    h = 1e-6
    xs = np.array([1.3, -1.7, 1.5])
    assert np.allclose(cutoff(xs, 1), (cutoff(xs + h) - cutoff(xs - h)) / (2 * h), atol=1e-6)
    assert np.allclose(cutoff(xs, 2), (cutoff(xs + h, 1) - cutoff(xs - h, 1)) / (2 * h), atol=1e-5)


@given(st.floats(0.05, 0.5))
def test_mollify_preserves_mass(delta1):
    m = maxwellian(VelocityGrid.symmetric(8.0, 2049))
    out = mollify(m, delta1)
    assert out.mass == pytest.approx(m.mass, abs=1e-12)
    assert np.all(out.values >= 0)


def test_mollify_unresolvable():
    with pytest.raises(UnresolvableKernel):
        mollify(maxwellian(G), 0.5 * G.dv)


@given(st.floats(-2.0, 2.0), st.floats(0.1, 1.0))
def test_symmetrize_even_on_window_and_mass(c, d2):
    g = VelocityGrid.symmetric(8.0, 2049)
    m = maxwellian(g, drift=0.3)
    s = symmetrize_near(m, c, d2)
    u = np.linspace(0, d2, 50)
    assert np.max(np.abs(s(c + u) - s(c - u))) < 1e-14
    # the correction integrates to zero exactly; off-node centres leave a trapezoid residue
    # from the C^2 cutoff (exact for node centres, see the next test)
    assert s.mass == pytest.approx(m.mass, abs=1e-8)
    # unchanged outside [c - 2 d2, c + 2 d2]
    far = np.abs(g.nodes - c) > 2 * d2
    assert np.array_equal(s.values[far], m.values[far])


def test_symmetrize_mass_exact_for_node_center():
    m = maxwellian(G)
    s = symmetrize_near(m, 1.0, 0.5)  # c = 1 is a node, the discrete reflection is exact
    assert s.mass == pytest.approx(m.mass, abs=1e-13)
    u = np.linspace(0, 0.5, 101)
    assert np.max(np.abs(s(1 + u) - s(1 - u))) < 1e-12


def test_symmetrize_window_leaves_grid():
    with pytest.raises(OutOfDomain):
        symmetrize_near(maxwellian(G), 7.5, 0.5)


@given(st.floats(0.05, 0.3), st.floats(0.5, 1.5))
def test_modified_family_unit_mass(gamma, delta):
    m = maxwellian(G)
    f = modified_family(m, BumpFamily(), gamma, delta)
    assert f.mass == pytest.approx(1.0, abs=1e-10)


def test_modified_family_unresolved():
    with pytest.raises(UnresolvedBump):
        modified_family(maxwellian(G), BumpFamily(), 1e-4, 1.0)


def test_bump_pv_values():
    assert BumpFamily("negative_nu").pv_integral == pytest.approx(-math.sqrt(2 * math.pi), rel=1e-14)
    # positive for v0 large enough
    assert BumpFamily("positive_nu", 3.0).pv_integral > 0
    assert BumpFamily("positive_nu", 0.5).pv_integral < 0


def test_bump_energy_form_matches_square():
    b = BumpFamily("positive_nu", 2.0)
    v = np.linspace(0, 6, 31)
    assert np.allclose(b.energy_form(v * v), b(v), rtol=1e-13, atol=1e-300)


def test_rescale_pv_scaling():
    g = VelocityGrid.symmetric(24.0, 8193)
    m = maxwellian(g)
    r = rescale_profile(m, 0.0, 2.0)
    assert pv_integral(g, r.derivative, 0.0) == pytest.approx(-0.25, abs=1e-6)


def test_find_extrema_double_gaussian():
    p = double_gaussian(VelocityGrid.symmetric(12.0, 4097), 3.0)
    ex = find_extrema(p)
    assert [e.kind for e in ex] == ["max", "min", "max"]
    assert ex[1].v == pytest.approx(0.0, abs=1e-12)
    assert ex[0].v == pytest.approx(-ex[2].v, abs=1e-12)


def test_csv_round_trip(tmp_path):
    m = maxwellian(VelocityGrid.symmetric(8.0, 257))
    path = tmp_path / "m.csv"
    write_profile_csv(path, m)
    back = read_profile_csv(path)
    assert np.array_equal(back.values, m.values)
    assert back.grid == m.grid


def test_lorentzian_needs_wide_grid():
    p = lorentzian(VelocityGrid.symmetric(64.0, 8193))
    assert p.mass == pytest.approx(1 - 2 * math.atan(1 / 64) / math.pi, abs=1e-6)
