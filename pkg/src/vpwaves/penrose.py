"""Linear stability of homogeneous states.

The dispersion function is Z(c) = int f0'(v)/(v - c) dv for Im c > 0 and its
boundary value Z(xi + i0) on the real line (the Nyquist curve).  A mode of
wave number k grows iff k^2 = Z(c) has a root with Im c > 0; by the argument
principle their number equals the winding number of Z(xi + i0) around k^2,
which only changes where the curve crosses the real axis, i.e. at the
extrema of f0.
"""
from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq

from .errors import (
    NoConvergence,
    NumericalError,
    RootCollapsedToRealAxis,
    TargetNotReachable,
)
from .profiles import (
    BumpFamily,
    VelocityProfile,
    find_extrema,
    modified_family,
    rescale_profile,
)
from .quadrature import (
    Distance,
    SobolevSpec,
    cauchy_integral,
    hilbert_boundary,
    profile_distance,
    pv_integral,
)

log = logging.getLogger(__name__)

NEUTRAL_IM = 1e-6


def extremum_integral(profile: VelocityProfile, v: float) -> float:
    """P int f0'(u)/(u - v) du, the real value of the Nyquist curve at xi = v."""
    return pv_integral(profile.grid, profile.derivative, v,
                       gc=float(profile(v, 1)), dgc=float(profile(v, 2)))


# ---------------------------------------------------------------------------
# Nyquist curve
# ---------------------------------------------------------------------------

@dataclass
class NyquistCurve:
    xi: np.ndarray
    z: np.ndarray
    real_axis_crossings: list  # (xi*, Z(xi*), kind)

    def to_csv(self, path) -> None:
        from .io import write_csv
        write_csv(path, ["xi", "re_z", "im_z"], [self.xi, self.z.real, self.z.imag])


def nyquist(profile: VelocityProfile, xi=None) -> NyquistCurve:
    """Z(xi + i0) = P int f0'/(v - xi) dv + i pi f0'(xi).

    ``xi=None`` evaluates on the velocity nodes in one FFT pass; otherwise each
    requested point gets its own principal value.  Crossings of the real axis
    are the extrema of f0, located by :func:`find_extrema`.
    """
    grid = profile.grid
    if xi is None:
        xi = grid.nodes.copy()
        z = hilbert_boundary(grid, profile.derivative, dg=profile.second_derivative)
    else:
        xi = np.asarray(xi, dtype=float)
        re = np.array([extremum_integral(profile, x) for x in xi])
        z = re + 1j * np.pi * np.asarray(profile(xi, 1), dtype=float)
    crossings = [(e.v, extremum_integral(profile, e.v), e.kind) for e in find_extrema(profile)]
    return NyquistCurve(xi, z, crossings)


# ---------------------------------------------------------------------------
# critical period and unstable intervals
# ---------------------------------------------------------------------------

@dataclass
class ExtremumIntegral:
    v: float
    integral: float
    kind: str
    degenerate: bool = False


@dataclass
class StabilityReport:
    T0: float
    extrema_integrals: list[ExtremumIntegral]
    unstable_k_intervals: list[tuple[float, float]]
    stability_gaps: list[tuple[float, float]]
    anomalies: list[str] = field(default_factory=list)

    @property
    def k_max(self) -> float:
        return 0.0 if math.isinf(self.T0) else 2 * math.pi / self.T0

    def is_unstable(self, k: float) -> bool:
        return any(lo < k < hi for lo, hi in self.unstable_k_intervals)

    def to_dict(self) -> dict:
        return {
            "t0": "inf" if math.isinf(self.T0) else repr(self.T0),
            "extrema": [{"v": repr(e.v), "integral": repr(e.integral), "kind": e.kind,
                         "degenerate": e.degenerate} for e in self.extrema_integrals],
            "unstable_intervals": [[repr(a), repr(b)] for a, b in self.unstable_k_intervals],
            "gaps": [[repr(a), repr(b)] for a, b in self.stability_gaps],
            "anomalies": list(self.anomalies),
        }

    def to_json(self, path) -> None:
        from .io import atomic_write_text
        atomic_write_text(path, json.dumps(self.to_dict(), indent=2) + "\n")


def winding_number(crossings: list[ExtremumIntegral], k2: float) -> int:
    """Number of growing modes at k^2: minima to the right of k^2 count +1, maxima -1."""
    return sum((1 if e.kind == "min" else -1) for e in crossings
               if not e.degenerate and e.integral > k2)


def critical_period(profile: VelocityProfile, degeneracy_tol: float = 1e-8) -> StabilityReport:
    """T0 with (2 pi/T0)^2 = max(0, max_i P int f0'/(v - v_i)), plus unstable k-intervals."""
    ext = find_extrema(profile, degeneracy_tol=degeneracy_tol)
    items = [ExtremumIntegral(e.v, extremum_integral(profile, e.v), e.kind, e.degenerate)
             for e in ext]
    anomalies = []
    for e in items:
        if e.degenerate:
            log.warning("degenerate extremum at v=%.6g excluded from T0", e.v)
            anomalies.append(f"degenerate extremum at v={e.v:.6g}")
    live = [e for e in items if not e.degenerate]
    kmax2 = max([0.0] + [e.integral for e in live])
    T0 = math.inf if kmax2 <= 0 else 2 * math.pi / math.sqrt(kmax2)
    if kmax2 > 0:
        top = max(live, key=lambda e: e.integral)
        if top.kind != "min":
            anomalies.append(f"largest crossing value sits at a maximum (v={top.v:.6g})")

    levels = sorted({e.integral for e in live if e.integral > 0})
    vals = [e.integral for e in live if e.integral > 0]
    if len(vals) != len(levels):
        anomalies.append("equal crossing values; pairing treated as degenerate")
    bounds = [0.0] + levels
    pieces = []
    for lo, hi in zip(bounds[:-1], bounds[1:]):
        n = winding_number(live, 0.5 * (lo + hi))
        if n < 0:
            anomalies.append(f"negative winding number on k^2 in ({lo:.6g}, {hi:.6g})")
        pieces.append((math.sqrt(lo), math.sqrt(hi), n > 0))
    unstable: list[tuple[float, float]] = []
    for a, b, bad in pieces:
        if not bad:
            continue
        if unstable and unstable[-1][1] == a:
            unstable[-1] = (unstable[-1][0], b)
        else:
            unstable.append((a, b))
    gaps = [(unstable[i][1], unstable[i + 1][0]) for i in range(len(unstable) - 1)]
    if unstable and unstable[0][0] > 0:
        gaps.insert(0, (0.0, unstable[0][0]))
    return StabilityReport(T0, items, unstable, gaps, anomalies)


# ---------------------------------------------------------------------------
# dispersion roots
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DispersionRoot:
    k: float
    c: complex
    growth_rate: float
    residual: float
    iterations: int = 0

    @property
    def neutral(self) -> bool:
        return self.c.imag <= NEUTRAL_IM


class DispersionFunction:
    """D(c) = k^2 - int f0'/(v - c) dv on the closed upper half-plane.

    Both f0' and f0'' are replaced by cubic splines and integrated exactly, so
    D and D' = -int f0''/(v - c) dv are analytic functions of c up to the
    real axis.  ``refine`` > 1 resamples a profile with a closed form onto a
    finer grid first, which matters when features span only a few nodes.
    """

    def __init__(self, profile: VelocityProfile, refine: int = 1):
        if refine > 1 and profile.func is not None:
            profile = profile.resample(profile.grid.refined(refine))
        self.profile = profile
        g = profile.grid
        self._s1 = CubicSpline(g.nodes, profile.derivative, bc_type="natural")
        self._s2 = CubicSpline(g.nodes, profile.second_derivative, bc_type="natural")

    def z(self, c: complex) -> complex:
        return cauchy_integral(self.profile.grid, None, c, spline=self._s1)

    def dz(self, c: complex) -> complex:
        return cauchy_integral(self.profile.grid, None, c, spline=self._s2)

    def __call__(self, k: float, c: complex) -> complex:
        return k * k - self.z(c)


def dispersion_root(profile: VelocityProfile, k: float, seed: complex, *,
                    tol: float = 1e-8, max_iter: int = 100,
                    dfun: DispersionFunction | None = None) -> DispersionRoot:
    """Newton iteration for k^2 = Z(c) started at ``seed`` (Im seed > 0).

    Steps that would cross into the lower half-plane are damped toward the
    axis; an iterate pinned at the axis raises RootCollapsedToRealAxis.
    """
    if k <= 0:
        raise ValueError("k must be positive")
    c = complex(seed)
    if c.imag <= 0:
        raise ValueError("seed must lie in the upper half-plane")
    D = dfun or DispersionFunction(profile)
    pinned = 0
    for it in range(1, max_iter + 1):
        val = D(k, c)
        if abs(val) <= tol:
            return DispersionRoot(k, c, k * c.imag, abs(val), it)
        dval = -D.dz(c)
        if dval == 0:
            raise NoConvergence("vanishing derivative in Newton iteration")
        step = val / dval
        new = c - step
        if new.imag <= 0:
            new = complex(new.real, 0.5 * c.imag)
            pinned = pinned + 1 if c.imag < NEUTRAL_IM else 0
            if pinned >= 5:
                raise RootCollapsedToRealAxis(f"iterate collapsed to the real axis near {c.real:.6g}")
        c = new
    val = D(k, c)
    if abs(val) <= tol:
        return DispersionRoot(k, c, k * c.imag, abs(val), max_iter)
    raise NoConvergence(f"Newton did not converge in {max_iter} iterations (|D|={abs(val):.3e})")


def default_seeds(profile: VelocityProfile, report: StabilityReport | None = None) -> list[complex]:
    report = report or critical_period(profile)
    seeds = []
    for e in report.extrema_integrals:
        if e.integral > 0 and not e.degenerate:
            seeds += [complex(e.v, h) for h in (0.2, 0.05, 0.01, 0.5)]
    return seeds


def unstable_roots(profile: VelocityProfile, k: float, seeds=None,
                   report: StabilityReport | None = None, refine: int = 1) -> list[DispersionRoot]:
    """All distinct growing roots reachable from the seeds, fastest first."""
    seeds = default_seeds(profile, report) if seeds is None else list(seeds)
    D = DispersionFunction(profile, refine)
    found: list[DispersionRoot] = []
    for s in seeds:
        try:
            r = dispersion_root(profile, k, s, dfun=D)
        except NumericalError:
            continue
        if r.neutral:
            continue
        if all(abs(r.c - q.c) > 1e-6 * max(1.0, abs(q.c)) for q in found):
            found.append(r)
    return sorted(found, key=lambda r: -r.growth_rate)


def growth_rate(profile: VelocityProfile, k: float, **kw) -> float:
    roots = unstable_roots(profile, k, **kw)
    return roots[0].growth_rate if roots else 0.0


# ---------------------------------------------------------------------------
# unstable homogeneous neighbours
# ---------------------------------------------------------------------------

@dataclass
class UnstableNeighbor:
    profile: VelocityProfile
    center: float
    gamma: float
    delta: float
    rescale: float
    extremum: float
    root: DispersionRoot
    distance: Distance
    overshoot: float = 0.0

    def summary(self) -> dict:
        return {"center": self.center, "gamma": self.gamma, "delta": self.delta,
                "rescale": self.rescale, "overshoot": self.overshoot, "extremum": self.extremum,
                "c": [self.root.c.real, self.root.c.imag], "growth_rate": self.root.growth_rate,
                "distance": list(self.distance), "distance_total": self.distance.total}


def _minimum_near(profile: VelocityProfile, v: float, width: float) -> float | None:
    """Local minimum of f0 within 4 widths of v, located on f0' by root finding."""
    grid = profile.grid
    lo = max(1, grid.index_of(v - 4 * width))
    hi = min(grid.n_v - 2, grid.index_of(v + 4 * width))
    nodes = grid.nodes[lo : hi + 1]
    d = np.asarray(profile(nodes, 1), dtype=float)
    idx = np.nonzero((d[:-1] < 0) & (d[1:] >= 0))[0]
    if idx.size == 0:
        return None
    j = idx[np.argmin(np.abs(nodes[idx] - v))]
    a, b = nodes[j], nodes[j + 1]
    if d[j + 1] == 0:
        return float(b)
    return brentq(lambda x: float(profile(x, 1)), a, b, xtol=1e-15, rtol=1e-15)


def bump_center(profile: VelocityProfile) -> float:
    """Node where the real part of the Nyquist curve is largest."""
    re = hilbert_boundary(profile.grid, profile.derivative, dg=profile.second_derivative).real
    return float(profile.grid.nodes[int(np.argmax(re[1:-1])) + 1])


def _crossing_delta(profile, bump, gamma, center, target):
    """delta with extremum integral of the bumped profile's minimum equal to ``target``.

    Returns (delta, modified profile, minimum location) or None.
    """
    grid = profile.grid
    p0 = extremum_integral(profile, center)

    def excess(d):
        try:
            f = modified_family(profile, bump, gamma, d, center)
        except NumericalError:
            return None, None, None
        vm = _minimum_near(f, center, gamma * d)
        if vm is None:
            return None, None, None
        return extremum_integral(f, vm) - target, f, vm

    need = target * (1 + bump.mass * gamma**2) - p0
    d_guess = math.sqrt(bump.pv_integral / need) if need > 0 and bump.pv_integral > 0 else 1.0
    d_min = 2 * grid.dv / gamma * 1.0001
    # the integral increases as delta decreases; walk outward from the guess
    hi = lo = max(d_guess, d_min)
    e_hi = excess(hi)[0]
    e_lo = e_hi
    for _ in range(40):
        if e_hi is not None and e_hi < 0:
            break
        hi *= 1.25
        e_hi = excess(hi)[0]
    else:
        return None
    for _ in range(40):
        if e_lo is not None and e_lo >= 0:
            break
        if lo <= d_min:
            return None
        lo = max(lo / 1.25, d_min)
        e_lo = excess(lo)[0]
    else:
        return None
    if e_lo == 0:
        d = lo
    else:
        d = brentq(lambda x: excess(x)[0], lo, hi, xtol=1e-15, rtol=1e-13)
    _, f, vm = excess(d)
    return d, f, vm


def _root_seeds(vm: float, scale: float) -> list[complex]:
    return [complex(vm, h * scale) for h in (1.0, 0.3, 3.0, 0.1, 10.0)]


def unstable_neighbor(profile: VelocityProfile, T: float, s: float, epsilon: float, *,
                      p: float = 2.0, bump: BumpFamily | None = None, center: float | None = None,
                      gamma0: float = 0.1, overshoot: float | None = None,
                      rescale_overshoot: float = 1e-4, im_target: float = 3 * NEUTRAL_IM,
                      max_tries: int = 12, verify_refine: int = 2) -> UnstableNeighbor:
    """A homogeneous state within ``epsilon`` of ``profile`` that is unstable at k = 2 pi/T.

    A bump of width w = gamma*delta is inserted at ``center`` (default: the peak
    of Re Z) with delta tuned so the new minimum v_m has extremum integral
    k^2 (1 + overshoot).  The result is then rescaled about v_m by
    1/sqrt(1 + rescale_overshoot), which raises the critical wave number by the
    same factor.  Near the threshold the growing root sits at
    Im c ~ w * (total overshoot), so by default the overshoot is adapted until
    Im c reaches ``im_target``.

    gamma starts at ``gamma0`` and is updated from the measured distance with
    the bump scaling laws (mass terms ~ gamma^2, Sobolev term ~ gamma^(1+1/p-s))
    until the distance drops below ``epsilon`` or the bump is no longer
    resolved by the grid.
    """
    if T <= 0 or epsilon <= 0:
        raise ValueError("need T > 0 and epsilon > 0")
    k = 2 * math.pi / T
    k2 = k * k
    bump = bump or BumpFamily("positive_nu", 2.0)
    grid = profile.grid
    spec = SobolevSpec(s, p, "spectral_p2" if p == 2 else "gagliardo")
    center = bump_center(profile) if center is None else center
    expo = 1 + 1 / p - s
    rho = 1.0 / math.sqrt(1.0 + rescale_overshoot)
    a_est = 0.5  # Im c / (w * overshoot), refined from measured roots

    def candidate(g):
        w_guess = max(g * 1.4, 2 * grid.dv)
        eta = overshoot if overshoot is not None else min(max(im_target / (a_est * w_guess), 1e-3), 0.5)
        roots = []
        for _ in range(4):
            hit = _crossing_delta(profile, bump, g, center, k2 * (1 + eta) / (1 + rescale_overshoot))
            if hit is None:
                return None
            d, f_exact, vm = hit
            f_new = rescale_profile(f_exact, vm, rho)
            dist = profile_distance(f_new, profile, spec)
            if dist.total >= epsilon:
                # too far away anyway; skip the root search
                break
            roots = unstable_roots(f_new, k, seeds=_root_seeds(vm, max(a_est * g * d * eta, 2 * NEUTRAL_IM)),
                                   refine=verify_refine)
            im = roots[0].c.imag if roots else 0.0
            if overshoot is not None or im >= im_target or eta >= 0.5:
                break
            eta = min(eta * (1.5 * im_target / im if im > 0 else 4.0), 0.5)
        return d, vm, eta, f_new, dist, (roots[0] if roots else None)

    tried: list[tuple[float, float]] = []
    best = None
    closest = math.inf
    g = gamma0
    for _ in range(max_tries):
        try:
            res = candidate(g)
        except NumericalError:
            res = None
        if res is None:
            tried.append((g, math.inf))
            if g * 4.0 < 2 * grid.dv:
                break
            g *= 0.5
            continue
        d, vm, eta, f_new, dist, root = res
        tried.append((g, dist.total))
        closest = min(closest, dist.total)
        log.info("gamma=%.4g delta=%.4g overshoot=%.3g distance=%.4g im_c=%s",
                 g, d, eta, dist.total, None if root is None else f"{root.c.imag:.3g}")
        ok = root is not None and not root.neutral
        if ok and root is not None:
            a_est = root.c.imag / (g * d * eta)
        if ok and (best is None or dist.total < best[4].total):
            best = (g, d, vm, f_new, dist, root, eta)
        if ok and dist.total < epsilon:
            break
        if expo <= 0:
            # shrinking the bump does not shrink the distance; nothing left to try
            if len(tried) >= 2:
                break
            g *= 0.5
            continue
        g_min = 2 * grid.dv * 1.01 / d
        if g <= g_min * 1.0001:
            break

        # mass-type terms scale like gamma^2, the Sobolev term like gamma^expo
        def predicted(x, dist=dist, g=g):
            r = x / g
            return (dist.l1 + dist.energy_l1) * r * r + dist.wsp * r**expo - 0.9 * epsilon

        g = g_min if predicted(g_min) > 0 else brentq(predicted, g_min, g, xtol=1e-12 * g)
        g = max(g, g_min)
    if best is None or best[4].total >= epsilon:
        got = f"closest distance {closest:.4g}"
        raise TargetNotReachable(
            f"no resolvable (gamma, delta) gives an unstable state at k={k:.6g} within "
            f"epsilon={epsilon:g} in W^({s},{p}) ({got}; tried gamma={[float(f'{t[0]:.4g}') for t in tried]})")
    g, d, vm, f_new, dist, root, eta = best
    return UnstableNeighbor(f_new, center, g, d, rho, vm, root, dist, eta)
