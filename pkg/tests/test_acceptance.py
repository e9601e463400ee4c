"""Quantitative acceptance checks, one test and one printed PASS/FAIL line per criterion.

Run with ``pytest -v tests/test_acceptance.py``; each line reads
``[C<n>] PASS|FAIL  <measured values>``.
"""
import math
import time

import numpy as np
import pytest

import oracles
from vpwaves.bgk import OrbitSpec, _dv4, energy_split, orbit, orbit_period, response_for
from vpwaves.cli import build_wave
from vpwaves.errors import TargetNotReachable
from vpwaves.landau import (FieldTimeSeries, data_norm, fit_decay, fit_growth, gaussian_data,
                            hat_data, integral_decay_norm, landau_field, linearized_evolve,
                            weizner_data)
from vpwaves.penrose import DispersionFunction, critical_period, dispersion_root, unstable_neighbor, unstable_roots
from vpwaves.profiles import (BumpFamily, VelocityGrid, double_gaussian, lorentzian, maxwellian,
                              symmetrize_near)
from vpwaves.quadrature import gagliardo_seminorm, homogeneous_seminorm_p2, lp_norm, pv_integral
from vpwaves.vpsim import PhaseSpaceField, evolve

TWO_PI = 2 * math.pi


@pytest.fixture
def report(capsys):
    """Print one verdict line straight to the terminal (bypassing capture)."""

    def emit(n, checks: dict, detail: str, t0: float):
        ok = all(checks.values())
        failed = [k for k, v in checks.items() if not v]
        line = f"[C{n:02d}] {'PASS' if ok else 'FAIL'}  {detail}  ({time.perf_counter() - t0:.1f} s)"
        if failed:
            line += "  failed: " + ", ".join(failed)
        with capsys.disabled():
            print("\n" + line)
        return ok, failed

    return emit


def test_c01_penrose_integrals(report):
    t0 = time.perf_counter()
    g = VelocityGrid.symmetric(8.0, 4096)
    m = maxwellian(g)
    a = pv_integral(g, m.derivative, 0.0)
    lg = VelocityGrid.symmetric(64.0, 2**14 + 1)
    lo = lorentzian(lg)
    b = pv_integral(lg, lo.derivative, 0.0)
    checks = {"maxwellian": abs(a + 1) <= 1e-8, "lorentzian": abs(b + 1) <= 1e-4}
    ok, failed = report(1, checks, f"maxwellian {a:.12f}, lorentzian {b:.8f}", t0)
    assert ok, failed


def test_c02_critical_period(report):
    t0 = time.perf_counter()
    rm = critical_period(maxwellian(VelocityGrid.symmetric(8.0, 4097)))
    g = VelocityGrid.symmetric(12.0, 4097)
    a = critical_period(double_gaussian(g, 3.0)).T0
    b = critical_period(double_gaussian(g.refined(2), 3.0)).T0
    rel = abs(a - b) / a
    checks = {"maxwellian T0 = inf": math.isinf(rm.T0), "double gaussian finite": math.isfinite(a),
              "grid doubling 1e-4": rel <= 1e-4}
    ok, failed = report(2, checks, f"maxwellian T0={rm.T0}, double gaussian T0={a:.10f} (rel {rel:.1e})", t0)
    assert ok, failed


def test_c03_root_vs_time_domain(report):
    t0 = time.perf_counter()
    g = VelocityGrid.symmetric(12.0, 4097)
    p = double_gaussian(g, 2.4)
    k = 0.3
    root = unstable_roots(p, k)[0]
    series = linearized_evolve(p, gaussian_data(g, k), 0.05, 1200, stride=4)
    rate = fit_growth(series, (30.0, 60.0))
    rel = abs(rate - root.growth_rate) / root.growth_rate
    ok, failed = report(3, {"2% agreement": rel <= 0.02},
                        f"root rate {root.growth_rate:.6f}, time-domain {rate:.6f} (rel {rel:.1e})", t0)
    assert ok, failed


def test_c04_contour_vs_oracle(report):
    t0 = time.perf_counter()
    g = VelocityGrid.symmetric(8.0, 4097)
    m = maxwellian(g)
    d = gaussian_data(g, 0.5)
    o = linearized_evolve(m, d, 0.01, 8000, stride=5)
    s = landau_field(m, d, o.t)
    err = float(np.max(np.abs(s.e_k - o.e_k)) / np.max(o.abs))
    ok, failed = report(4, {"sup rel error 1e-3": err <= 1e-3}, f"sup relative error {err:.2e} on [0, 80]", t0)
    assert ok, failed


def test_c05_algebraic_decay(report):
    t0 = time.perf_counter()
    g = VelocityGrid.symmetric(8.0, 4097)
    m = maxwellian(g)
    t = np.arange(0, 200.0001, 0.05)
    fw = fit_decay(landau_field(m, weizner_data(g, 1.0), t), (20, 200))
    fh = fit_decay(landau_field(m, hat_data(g, 1.0), t), (20, 200))
    checks = {"weizner exponent": abs(fw.exponent - 3) <= 0.3, "weizner r2": fw.r_squared >= 0.98,
              "hat exponent": abs(fh.exponent - 2) <= 0.3}
    ok, failed = report(5, checks, f"weizner p={fw.exponent:.3f} r2={fw.r_squared:.4f}, "
                        f"hat p={fh.exponent:.3f} r2={fh.r_squared:.4f}", t0)
    assert ok, failed


def _decay_ratio(n_v, t_max):
    g = VelocityGrid.symmetric(8.0, n_v)
    m = maxwellian(g)
    t = np.arange(0, t_max + 1e-9, 0.1)
    data = [gaussian_data(g, k, center=0.5) for k in (0.5, 1.0)]
    series = [landau_field(m, d, t) for d in data]
    return integral_decay_norm(series, s_v=1).value / data_norm(g, data, s_v=1)


def test_c06_boundedness_surrogate(report):
    t0 = time.perf_counter()
    base = _decay_ratio(4097, 80.0)
    long = _decay_ratio(4097, 160.0)
    fine = _decay_ratio(8193, 80.0)
    dt, dn = abs(long / base - 1), abs(fine / base - 1)
    checks = {"t_max doubling 5%": dt <= 0.05, "n_v doubling 5%": dn <= 0.05}
    ok, failed = report(6, checks, f"ratio {base:.6f}, t_max x2 {dt:.1e}, n_v x2 {dn:.1e}", t0)
    assert ok, failed


def _bump(g, gamma, delta):
    w = gamma * delta
    return (gamma / delta) * BumpFamily("negative_nu")(g.nodes / w)


def test_c07_scaling_laws(report):
    t0 = time.perf_counter()
    g = VelocityGrid.symmetric(4.0, 2**14 + 1)
    gamma, delta = 0.1, 1.5
    F = _bump(g, gamma, delta)
    l2 = lp_norm(g, F, 2.0)
    e2 = abs(l2 / oracles.bump_lp_norm(gamma, delta, 2.0) - 1)
    # p = 3: W^{sigma,3} Gagliardo seminorm scales as gamma^(1+1/p-sigma) delta^(1/p-1-sigma)
    gc = VelocityGrid.symmetric(4.0, 2049)
    sigma, p = 0.5, 3.0
    ga = gagliardo_seminorm(gc, _bump(gc, 0.2, 1.0), sigma, p)
    gb = gagliardo_seminorm(gc, _bump(gc, 0.4, 1.5), sigma, p)
    pred = (2.0 ** (1 + 1 / p - sigma)) * (1.5 ** (1 / p - 1 - sigma))
    e3 = abs(gb / ga / pred - 1)
    l3 = lp_norm(gc, _bump(gc, 0.2, 1.0), p)
    e3n = abs(l3 / oracles.bump_lp_norm(0.2, 1.0, p) - 1)
    gammas = np.array([0.025, 0.05, 0.1, 0.2])
    slopes = {}
    for s in (0.2, 0.8, 1.2, 1.8):
        vals = [homogeneous_seminorm_p2(g, _bump(g, gm, 1.0), s) for gm in gammas]
        slopes[s] = float(np.polyfit(np.log(gammas), np.log(vals), 1)[0])
    checks = {"L2 identity 1e-4": e2 <= 1e-4, "p=3 Gagliardo scaling 1%": e3 <= 0.01,
              "p=3 norm 1%": e3n <= 0.01}
    for s in (0.2, 0.8):
        checks[f"slope s={s}"] = abs(slopes[s] - (1 - s + 0.5)) <= 0.05
    checks["crossover s=1.2 -> 0"] = slopes[1.2] > 0
    checks["crossover s=1.8 grows"] = slopes[1.8] < 0
    sl = ", ".join(f"s={s}: {v:+.4f}" for s, v in slopes.items())
    ok, failed = report(7, checks, f"L2 err {e2:.1e}, p=3 scaling err {e3:.1e}, norm err {e3n:.1e}; "
                        f"slopes {sl}", t0)
    assert ok, failed


def _bumped_pv(wave, split, spec):
    """P int f'_{gamma,delta}/(v-c) dv for the bumped homogeneous state (beta = 0)."""
    resp = response_for(spec, split)
    g = wave.v_grid
    f = resp.f(g.nodes - spec.c, 0.0)
    return pv_integral(g, _dv4(f, g.dv), spec.c)


def test_c08_bgk_construction(report):
    t0 = time.perf_counter()
    g = VelocityGrid.symmetric(8.0, 2**14 + 1)
    m = maxwellian(g)
    checks, parts = {}, []
    # the narrow evenness window at c = 1.35 tabulates energies down to -hw^2 only,
    # so the turning point there must stay well below hw^2 / 6
    for c, hw, r in ((0.0, 0.25, None), (1.35, 0.025, 5e-5)):
        task = {"T": TWO_PI, "c": c, "epsilon": 1e-2, "s": 1.2, "gamma": 0.1, "amplitude": r,
                "half_width": hw, "bump_v0": 2.0}
        w = build_wave(m, task, 64)
        meta = w.meta
        base = m if c == 0 else symmetrize_near(m, c, 2 * hw)
        split = energy_split(base, c, hw)
        spec = OrbitSpec(meta["r"], meta["gamma"], meta["delta"], meta["case"], c, hw,
                         w.period, meta["p0"], meta["bump_v0"])
        resp = response_for(spec, split)
        orb = orbit(resp, 1e-3 * meta["r"])
        lim = TWO_PI / orb.omega0
        pv = _bumped_pv(w, split, spec)
        checks[f"c={c} period"] = meta["period_rel_error"] <= 1e-6
        checks[f"c={c} residuals"] = max(meta["vlasov_residual"], meta["poisson_residual"]) <= 1e-6
        checks[f"c={c} small-amplitude limit"] = abs(orb.period / lim - 1) <= 1e-4
        checks[f"c={c} -h'(0) vs PV"] = abs(orb.omega0**2 / pv - 1) <= 1e-4
        checks[f"c={c} distance < eps"] = meta["distance_total"] < 1e-2
        parts.append(f"c={c}: dT/T={meta['period_rel_error']:.1e} res=({meta['vlasov_residual']:.1e},"
                     f"{meta['poisson_residual']:.1e}) limit {abs(orb.period / lim - 1):.1e} "
                     f"w0^2/PV-1={orb.omega0**2 / pv - 1:.1e} distance {meta['distance_total']:.3f}")
    ok, failed = report(8, checks, "; ".join(parts), t0)
    assert ok, failed


def test_c09_pendulum(report):
    t0 = time.perf_counter()
    T = orbit_period(lambda b: -np.sin(b), 1.0)
    ref = oracles.pendulum_period(1.0)
    checks = {"oracle agreement": abs(T - ref) <= 1e-4, "stated 6.5960": abs(T - 6.5960) <= 1e-4}
    ok, failed = report(9, checks, f"T={T:.10f}, elliptic oracle {ref:.10f}, stated value 6.5960", t0)
    assert ok, failed


def test_c10_nonlinear(report):
    t0 = time.perf_counter()
    checks, parts = {}, []
    # (a) equilibrium over 50 plasma periods
    g = VelocityGrid.symmetric(8.0, 1025)
    m = maxwellian(g)
    n50 = int(round(50 * TWO_PI / 0.1))
    _, d = evolve(PhaseSpaceField.homogeneous(m, 4 * math.pi, 16), 0.1, n50, stride=50)
    e_max = float(np.max(d.arrays()["e_l2"]))
    checks["(a) |E|"] = e_max <= 1e-12
    checks["(a) mass"] = d.relative_drift("mass") <= 1e-12
    checks["(a) energy"] = d.relative_drift("energy") <= 1e-6
    parts.append(f"(a) |E|max {e_max:.1e} mass {d.relative_drift('mass'):.1e} "
                 f"energy {d.relative_drift('energy'):.1e}")
    # (b) BGK persistence in the co-moving frame
    gb = VelocityGrid.symmetric(8.0, 4097)
    mb = maxwellian(gb)
    for c, hw, r in ((0.0, 0.25, 5e-3), (1.35, 0.2, None)):
        task = {"T": TWO_PI, "c": c, "epsilon": 1e-2, "s": 1.2, "gamma": 0.3, "amplitude": r,
                "half_width": hw, "bump_v0": 2.0}
        w = build_wave(mb, task, 32)
        _, db = evolve(PhaseSpaceField.from_wave(w), 0.1, n50, stride=20)
        drift = db.relative_drift("e_l2")
        checks[f"(b) c={c} drift"] = drift <= 0.05
        parts.append(f"(b) c={c} |E| drift {drift:.2e}")
    # (c) Landau damping before recurrence
    k = 0.5
    t_rec = TWO_PI / (k * g.dv)
    _, dc = evolve(PhaseSpaceField.homogeneous(m, TWO_PI / k, 16, perturbation=1e-3), 0.1, 600)
    a = dc.arrays()
    early = float(np.max(a["e_mode"][a["t"] <= 5]))
    late = float(np.max(a["e_mode"][a["t"] >= 50]))
    checks["(c) 10x decay"] = early / late >= 10 and a["t"][-1] < t_rec
    parts.append(f"(c) envelope ratio {early / late:.0f} by t=60 (recurrence {t_rec:.0f})")
    # (d) unstable seed growth
    gd = VelocityGrid.symmetric(10.0, 1025)
    p = double_gaussian(gd, 2.4)
    kd = 0.3
    root = unstable_roots(p, kd)[0]
    _, dd = evolve(PhaseSpaceField.homogeneous(p, TWO_PI / kd, 16, perturbation=1e-6), 0.1, 600)
    ad = dd.arrays()
    rate = fit_growth(FieldTimeSeries(ad["t"], ad["e_mode"], kd), (20.0, 60.0))
    rel = abs(rate / root.growth_rate - 1)
    checks["(d) growth 5%"] = rel <= 0.05
    parts.append(f"(d) rate {rate:.5f} vs root {root.growth_rate:.5f} (rel {rel:.1e})")
    ok, failed = report(10, checks, "; ".join(parts), t0)
    assert ok, failed


def test_c11_unstable_neighbor(report):
    t0 = time.perf_counter()
    m = maxwellian(VelocityGrid.symmetric(8.0, 2**19 + 1))
    r = unstable_neighbor(m, TWO_PI, 1.2, 0.05)
    k = 2 * math.pi / TWO_PI
    # independent check on a twice-refined copy of the profile, Newton from the reported root
    check = dispersion_root(r.profile, k, r.root.c, dfun=DispersionFunction(r.profile, refine=2))
    try:
        unstable_neighbor(m, TWO_PI, 1.8, 1e-3)
        crossover = False
    except TargetNotReachable:
        crossover = True
    checks = {"s=1.2 distance": r.distance.total < 0.05, "unstable": check.c.imag > 0,
              "s=1.8 fails": crossover}
    ok, failed = report(11, checks, f"s=1.2 distance {r.distance.total:.4f}, Im c {check.c.imag:.2e} (|D| {check.residual:.1e}), "
                        f"s=1.8 TargetNotReachable={crossover}", t0)
    assert ok, failed
