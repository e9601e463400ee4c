"""Small BGK waves near a homogeneous profile.

With particle energy e = (v-c)^2/2 - beta(x) the steady state is taken of the form

    f(x, v) = [g_s(2e) + (gamma/delta) G(2e/(gamma delta)^2)] / (1 + C0 gamma^2),

s = sign(v - c), where f0(c + s sqrt(y)) = g_s(y) and F(u) = G(u^2) is an even
bump.  Poisson's equation reduces to the potential ODE beta'' = h(beta) with
h(beta) = int f dv - 1; a periodic orbit around the center beta = 0 with the
requested period gives the wave.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from numpy.polynomial import chebyshev as C
from scipy.integrate import solve_ivp
from scipy.optimize import brentq, minimize_scalar

from .errors import (
    BracketNotFound,
    NotACenter,
    NotSymmetric,
    NumericalError,
    OrbitEscapesWell,
    OutOfTabulatedRange,
)
from .io import read_csv, write_csv, write_json
from .profiles import BumpFamily, VelocityGrid, VelocityProfile, modified_family
from .quadrature import pv_integral


# ---------------------------------------------------------------------------
# energy split
# ---------------------------------------------------------------------------

@dataclass
class EnergySplit:
    """g_+(y) = f(c + sqrt y), g_-(y) = f(c - sqrt y), continued to y < 0.

    Below ``half_width**2`` both branches use the even part of f about c; the
    continuation to negative y is a polynomial fitted to that even part.
    """

    profile: VelocityProfile
    c: float
    half_width: float
    poly: np.ndarray  # Chebyshev coefficients in y on [-y_fit, y_fit]
    y_fit: float
    y_min: float

    def _even(self, y):
        r = np.sqrt(y)
        return 0.5 * (self.profile(self.c + r) + self.profile(self.c - r))

    def __call__(self, y, sign) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        sign = np.broadcast_to(np.asarray(sign), y.shape)
        if np.any(y < self.y_min):
            raise OutOfTabulatedRange(f"energy argument below the tabulated range ({self.y_min:.3e})")
        out = np.empty(y.shape)
        neg = y < 0
        out[neg] = C.chebval(y[neg] / self.y_fit, self.poly)
        pos = ~neg
        r = np.sqrt(y[pos])
        s = np.where(sign[pos] > 0, 1.0, -1.0)
        near = y[pos] < self.half_width**2
        vals = self.profile(self.c + s * r)
        if np.any(near):
            vals = np.where(near, self._even(y[pos]), vals)
        out[pos] = vals
        return out

    def g_plus(self, y):
        return self(y, 1)

    def g_minus(self, y):
        return self(y, -1)


def energy_split(profile: VelocityProfile, c: float, half_width: float, *,
                 degree: int = 10, tol: float = 1e-8) -> EnergySplit:
    """Split f about v = c into energy branches (f must be even on c +- 2 half_width)."""
    grid = profile.grid
    if not (grid.v_min < c - 2 * half_width and c + 2 * half_width < grid.v_max):
        raise NotSymmetric("evenness window leaves the grid")
    u = np.linspace(0.0, 2 * half_width, 257)
    a, b = profile(c + u), profile(c - u)
    scale = max(float(np.max(profile.values)), 1e-300)
    bad = float(np.max(np.abs(a - b)))
    if bad > tol * scale:
        raise NotSymmetric(f"profile is not even about c={c:g} on the window (defect {bad:.3e})")
    y_fit = half_width**2
    # fit the even part on [0, y_fit] in the variable y / y_fit, Chebyshev-distributed samples
    theta = np.linspace(0, np.pi, 4 * degree + 1)
    ys = 0.5 * y_fit * (1 - np.cos(theta))
    ev = 0.5 * (profile(c + np.sqrt(ys)) + profile(c - np.sqrt(ys)))
    poly = C.chebfit(ys / y_fit, ev, degree)
    return EnergySplit(profile, float(c), float(half_width), poly, y_fit, -y_fit)


# ---------------------------------------------------------------------------
# density response h(beta)
# ---------------------------------------------------------------------------

class DensityResponse:
    """h(beta) = int f^beta dv - 1 for the bumped ansatz (gamma = 0: no bump).

    ``scale`` != 1 gives the Case-3 rescaled family f_s(v) = f(c + (v-c)/s)/s,
    whose response is h_1(beta / s^2).
    """

    def __init__(self, split: EnergySplit, bump: BumpFamily | None, gamma: float, delta: float,
                 scale: float = 1.0, n_u: int = 4097):
        self.split = split
        self.bump = bump
        self.gamma = float(gamma)
        self.delta = float(delta)
        self.scale = float(scale)
        self.norm = 1.0 / (1.0 + (bump.mass * gamma**2 if bump is not None and gamma > 0 else 0.0))
        self.width = gamma * delta
        grid = split.profile.grid
        self._u = grid.nodes - split.c
        self._sign = np.where(self._u > 0, 1, -1)
        self._dv = grid.dv
        if bump is not None and gamma > 0:
            span = getattr(bump, "v0", 0.0) + 14.0
            self._s = np.linspace(-span, span, n_u)
            self._ds = self._s[1] - self._s[0]

    def base(self, beta: float) -> float:
        y = self._u**2 - 2 * beta / self.scale**2
        vals = self.split(y, self._sign)
        return float(self._dv * (vals.sum() - 0.5 * (vals[0] + vals[-1])))

    def bump_integral(self, beta: float) -> float:
        """gamma^2 int G(s^2 - 2 beta/w^2) ds (equals C0 gamma^2 at beta = 0)."""
        if self.bump is None or self.gamma == 0:
            return 0.0
        vals = self.bump.energy_form(self._s**2 - 2 * beta / self.width**2)
        return float(self.gamma**2 * self._ds * (vals.sum() - 0.5 * (vals[0] + vals[-1])))

    def __call__(self, beta):
        b = np.atleast_1d(np.asarray(beta, dtype=float))
        out = np.array([self.norm * (self.base(x) + self.bump_integral(x)) - 1.0 for x in b])
        return out if np.ndim(beta) else float(out[0])

    def f(self, u, beta):
        """f^beta at relative velocity u = v - c (broadcasting)."""
        u = np.asarray(u, dtype=float)
        beta = np.asarray(beta, dtype=float)
        y = u**2 - 2 * beta
        sign = np.where(u > 0, 1, -1)
        val = self.split(y / self.scale**2, np.broadcast_to(sign, y.shape)) / self.scale
        if self.bump is not None and self.gamma > 0:
            val = val + (self.gamma / self.delta) * self.bump.energy_form(y / self.width**2)
        return self.norm * val


def density_response(split: EnergySplit, bump: BumpFamily | None, gamma: float, delta: float,
                     beta_value: float) -> float:
    return DensityResponse(split, bump, gamma, delta)(beta_value)


# ---------------------------------------------------------------------------
# orbit period
# ---------------------------------------------------------------------------

@dataclass
class Orbit:
    """Periodic orbit of beta'' = h(beta) with turning points beta_min < 0 < beta_max."""

    beta_max: float
    beta_min: float
    period: float
    omega0: float  # sqrt(-h'(0))
    _cheb: np.ndarray = field(repr=False, default=None)
    _R: float = 1.0

    def h(self, beta):
        return C.chebval(np.asarray(beta) / self._R, self._cheb)


def _interpolate(h, R: float, degree: int):
    nodes = np.cos(np.pi * (np.arange(degree + 1) + 0.5) / (degree + 1))
    vals = np.asarray([h(R * x) for x in nodes], dtype=float)
    return C.chebfit(nodes, vals, degree)


def orbit(h, amplitude: float, *, degree: int = 48, n_quad: int = 96, reach: float = 3.0) -> Orbit:
    """Turning points and period of the orbit through beta_max = amplitude.

    With W(beta) = -int_0^beta h and W_t = W(beta_max),
    T = sqrt(2) int dbeta / sqrt(W_t - W); writing W_t - W = (b+ - beta)(beta - b-) q(beta)
    the Gauss-Chebyshev rule integrates the inverse-square-root endpoints exactly.
    """
    if amplitude <= 0:
        raise ValueError("amplitude must be positive")
    R = reach * amplitude
    for _ in range(6):
        cheb = _interpolate(h, R, degree)
        d1 = C.chebder(cheb)
        slope = C.chebval(0.0, d1) / R
        if slope >= 0:
            raise NotACenter(f"h'(0) = {slope:.3e} is not negative")
        W = -C.chebint(cheb, lbnd=0.0) * R  # antiderivative in beta
        Wf = lambda b: float(C.chebval(b / R, W))
        x = np.linspace(0, amplitude, 257)
        if np.any(C.chebval(x[1:] / R, cheb) >= 0):
            raise OrbitEscapesWell("h changes sign between 0 and the turning point")
        Wt = Wf(amplitude)
        xs = np.linspace(0, -R, 1025)  # scanned downward from the center
        Ws = C.chebval(xs / R, W) - Wt
        hs = C.chebval(xs / R, cheb)
        up = np.nonzero(Ws >= 0)[0]
        stop = up[0] if up.size else xs.size
        if np.any(hs[1:stop] <= 0):
            # h has a root below zero before the energy level is reached
            raise OrbitEscapesWell("orbit leaves the potential well on the negative side")
        if not up.size:
            R *= 2
            continue
        j = up[0]
        bmin = brentq(lambda b: Wf(b) - Wt, xs[j], xs[j - 1], xtol=1e-15 * R, rtol=1e-15)
        break
    else:
        raise OrbitEscapesWell("no negative turning point within the search range")
    mid, half = 0.5 * (amplitude + bmin), 0.5 * (amplitude - bmin)
    th = np.pi * (np.arange(n_quad) + 0.5) / n_quad
    b = mid + half * np.cos(th)
    q = (Wt - C.chebval(b / R, W)) / ((amplitude - b) * (b - bmin))
    if np.any(q <= 0):
        raise OrbitEscapesWell("energy integral is not positive inside the orbit")
    period = math.sqrt(2) * math.pi / n_quad * float(np.sum(1 / np.sqrt(q)))
    return Orbit(amplitude, bmin, period, math.sqrt(-slope), cheb, R)


def orbit_period(h, amplitude: float, **kw) -> float:
    return orbit(h, amplitude, **kw).period


# ---------------------------------------------------------------------------
# period matching
# ---------------------------------------------------------------------------

@dataclass
class OrbitSpec:
    r: float  # beta_max
    gamma: float
    delta: float
    case: str  # case1 | case2 | case3
    c: float = 0.0
    half_width: float = 0.25
    period: float = float("nan")
    p0: float = float("nan")
    bump_v0: float = 2.0

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def classify(p0: float, k2: float, tol: float = 1e-8) -> str:
    if abs(p0 - k2) < tol:
        return "case3"
    return "case1" if p0 < k2 else "case2"


def _bump_for(case: str, v0: float) -> BumpFamily | None:
    if case == "case1":
        return BumpFamily("positive_nu", v0)
    if case == "case2":
        return BumpFamily("negative_nu")
    return None


def response_for(spec: OrbitSpec, split: EnergySplit) -> DensityResponse:
    bump = _bump_for(spec.case, spec.bump_v0)
    if spec.case == "case3":
        return DensityResponse(split, None, 0.0, 1.0, scale=spec.delta)
    return DensityResponse(split, bump, spec.gamma, spec.delta)


def match_period(profile: VelocityProfile, T_target: float, amplitude: float, *,
                 gamma: float = 0.1, c: float = 0.0, half_width: float = 0.25,
                 bump_v0: float = 2.0, rtol: float = 1e-12, split: EnergySplit | None = None
                 ) -> OrbitSpec:
    """Choose delta so the orbit through beta_max = amplitude has period T_target.

    The case follows the sign of P int f0'/(v - c) dv - (2pi/T)^2.  The linear
    prediction delta^2 = P_F / (k^2 (1 + C0 gamma^2) - P0) seeds a bracket that
    is validated at both ends; brentq refines it, with golden-section search
    on |T - T_target| as fallback if no sign change is found.
    """
    if T_target <= 0 or amplitude <= 0:
        raise ValueError("need T_target > 0 and amplitude > 0")
    k2 = (2 * math.pi / T_target) ** 2
    grid = profile.grid
    split = split or energy_split(profile, c, half_width)
    p0 = pv_integral(grid, profile.derivative, c, gc=float(profile(c, 1)), dgc=float(profile(c, 2)))
    case = classify(p0, k2)
    bump = _bump_for(case, bump_v0)

    def period(d):
        s = OrbitSpec(amplitude, gamma, d, case, c, half_width, p0=p0, bump_v0=bump_v0)
        try:
            return orbit_period(response_for(s, split), amplitude) - T_target
        except NumericalError:
            return None

    if case == "case3":
        d_star, lo_lim = 1.0, 0.5
    else:
        need = k2 * (1 + bump.mass * gamma**2) - p0
        ratio = bump.pv_integral / need
        if ratio <= 0:
            raise BracketNotFound("linear prediction has no positive delta")
        d_star = math.sqrt(ratio)
        lo_lim = 2 * grid.dv / gamma
        if d_star * 0.5 < lo_lim:
            raise BracketNotFound(
                f"bump width gamma*delta ~ {gamma * d_star:.3e} is not resolvable (dv={grid.dv:.3e})")
    lo, hi = d_star, d_star
    f_lo = f_hi = period(d_star)
    if f_lo == 0:
        return OrbitSpec(amplitude, gamma, d_star, case, c, half_width, T_target, p0, bump_v0)
    # the bump term moves the period monotonically in delta (up in Case 1, down in Case 2):
    # widen both ends until they straddle the target
    straddle = lambda a, b: a is not None and b is not None and a * b < 0
    for _ in range(30):
        if straddle(f_lo, f_hi):
            break
        if lo > lo_lim:
            lo = max(lo / 1.05, lo_lim)
            f_lo = period(lo)
        hi *= 1.05
        f_hi = period(hi)
    if straddle(f_lo, f_hi):
        d = brentq(period, lo, hi, xtol=1e-15, rtol=rtol)
    else:
        miss = lambda d: abs(r) if (r := period(d)) is not None else 1e300
        res = minimize_scalar(miss, bounds=(lo, hi), method="bounded",
                              options={"xatol": 1e-14 * hi})
        d = float(res.x)
        if miss(d) > 1e-6 * T_target:
            raise BracketNotFound(
                f"no delta in [{lo:.4g}, {hi:.4g}] gives a closed orbit with the target period")
    T = period(d) + T_target
    return OrbitSpec(amplitude, gamma, d, case, c, half_width, T, p0, bump_v0)


def gamma_for_epsilon(epsilon: float, T: float, bump: BumpFamily) -> float:
    """gamma with bump mass term 2 T C0 gamma^2 equal to epsilon/2."""
    return math.sqrt(epsilon / (4 * T * bump.mass))


# ---------------------------------------------------------------------------
# the wave
# ---------------------------------------------------------------------------

@dataclass
class BgkWave:
    x: np.ndarray
    beta: np.ndarray
    e_field: np.ndarray
    v_grid: VelocityGrid
    f: np.ndarray
    period: float
    speed: float
    amplitude: float
    length: float = float("nan")  # x-domain length (a multiple of period)
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if not np.isfinite(self.length):
            self.length = self.period

    @property
    def n_x(self) -> int:
        return self.x.size

    def field_zeros(self) -> int:
        """Zeros of E over the domain, from sign changes of its Fourier interpolant."""
        n = self.x.size
        up = 8 * n
        spec = np.fft.rfft(self.e_field)
        fine = np.fft.irfft(spec, up) * (up / n)
        scale = max(float(np.max(np.abs(fine))), 1e-300)
        s = np.sign(np.where(np.abs(fine) < 1e-9 * scale, 0.0, fine))
        s = s[s != 0]
        return int(np.count_nonzero(s != np.roll(s, 1)))

    def tile(self, m: int) -> "BgkWave":
        if m < 1:
            raise ValueError("m must be positive")
        dx = self.length / self.n_x
        n = self.n_x * m
        return BgkWave(np.arange(n) * dx, np.tile(self.beta, m), np.tile(self.e_field, m),
                       self.v_grid, np.tile(self.f, (m, 1)), self.period, self.speed,
                       self.amplitude, self.length * m, dict(self.meta))

    def h2_norm(self) -> float:
        """||beta||_{H^2(0, L)} from the Fourier series."""
        n = self.n_x
        b = np.fft.fft(self.beta) / n
        kx = 2 * np.pi * np.fft.fftfreq(n, d=self.length / n)
        return float(math.sqrt(self.length * np.sum((1 + kx**2 + kx**4) * np.abs(b) ** 2)))

    def save(self, directory) -> None:
        d = Path(directory)
        d.mkdir(parents=True, exist_ok=True)
        write_csv(d / "beta.csv", ["x", "beta", "e"], [self.x, self.beta, self.e_field])
        X, V = np.meshgrid(self.x, self.v_grid.nodes, indexing="ij")
        write_csv(d / "f.csv", ["x", "v", "f"], [X, V, self.f])
        meta = dict(self.meta)
        meta.update(T=self.period, c=self.speed, amplitude=self.amplitude, length=self.length,
                    v_min=self.v_grid.v_min, v_max=self.v_grid.v_max, n_v=self.v_grid.n_v,
                    n_x=self.n_x)
        write_json(d / "meta.json", meta)

    @classmethod
    def load(cls, directory) -> "BgkWave":
        d = Path(directory)
        meta = json.loads((d / "meta.json").read_text())
        _, b = read_csv(d / "beta.csv")
        _, fd = read_csv(d / "f.csv")
        grid = VelocityGrid(meta["v_min"], meta["v_max"], int(meta["n_v"]))
        n_x = int(meta["n_x"])
        f = fd[:, 2].reshape(n_x, grid.n_v)
        return cls(b[:, 0], b[:, 1], b[:, 2], grid, f, meta["T"], meta["c"], meta["amplitude"],
                   meta.get("length", meta["T"]), meta)


def trace_orbit(orb: Orbit, n_x: int, rtol: float = 1e-12) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """beta(x), beta'(x) on a uniform grid of one period, starting at the turning point beta_max.

    The half orbit is integrated with an 8th-order Runge-Kutta scheme and
    reflected (beta(T - x) = beta(x)); the grid is anchored to the quadrature
    period.
    """
    T = orb.period
    x = np.arange(n_x) * T / n_x
    rhs = lambda _, y: [y[1], float(orb.h(y[0]))]
    sol = solve_ivp(rhs, (0.0, T / 2), [orb.beta_max, 0.0], method="DOP853",
                    rtol=rtol, atol=rtol * orb.beta_max, dense_output=True)
    if not sol.success:
        raise NumericalError(f"orbit integration failed: {sol.message}")
    xr = np.where(x <= T / 2, x, T - x)
    y = sol.sol(xr)
    beta = y[0]
    dbeta = np.where(x <= T / 2, y[1], -y[1])
    return x, beta, dbeta


def assemble_bgk(spec: OrbitSpec, profile: VelocityProfile, *, n_x: int = 64,
                 split: EnergySplit | None = None) -> BgkWave:
    """Build (beta, E, f) over one period from a matched OrbitSpec."""
    split = split or energy_split(profile, spec.c, spec.half_width)
    resp = response_for(spec, split)
    orb = orbit(resp, spec.r)
    x, beta, dbeta = trace_orbit(orb, n_x)
    grid = profile.grid
    u = grid.nodes - spec.c
    f = resp.f(u[None, :], beta[:, None])
    if np.any(f < 0):
        raise NumericalError("assembled distribution has negative values")
    meta = {"gamma": spec.gamma, "delta": spec.delta, "case": spec.case, "r": spec.r,
            "beta_min": orb.beta_min, "omega0": orb.omega0, "half_width": spec.half_width,
            "bump_v0": spec.bump_v0, "p0": spec.p0}
    wave = BgkWave(x, beta, -dbeta, grid, f, orb.period, spec.c,
                   float(beta.max() - beta.min()), orb.period, meta)
    wave.meta["h2_norm"] = wave.h2_norm()
    return wave


def homogeneous_wave(profile: VelocityProfile, T: float, n_x: int = 64) -> BgkWave:
    """The trivial state (f0(v), E = 0) in BgkWave form."""
    x = np.arange(n_x) * T / n_x
    z = np.zeros(n_x)
    return BgkWave(x, z, z.copy(), profile.grid, np.tile(profile.values, (n_x, 1)), T, 0.0, 0.0)


def _dv4(f: np.ndarray, dv: float) -> np.ndarray:
    """Fourth-order central difference along the last axis (second order at the ends)."""
    d = np.empty_like(f)
    d[..., 2:-2] = (f[..., :-4] - 8 * f[..., 1:-3] + 8 * f[..., 3:-1] - f[..., 4:]) / (12 * dv)
    d[..., 1] = (f[..., 2] - f[..., 0]) / (2 * dv)
    d[..., -2] = (f[..., -1] - f[..., -3]) / (2 * dv)
    d[..., 0] = (f[..., 1] - f[..., 0]) / dv
    d[..., -1] = (f[..., -1] - f[..., -2]) / dv
    return d


def verify_steady(wave: BgkWave) -> tuple[float, float]:
    """Discrete L2 norms of (v-c) f_x - E f_v and of E_x + int f dv - 1."""
    n = wave.n_x
    dx = wave.length / n
    kx = 2 * np.pi * np.fft.fftfreq(n, d=dx)
    fx = np.real(np.fft.ifft(1j * kx[:, None] * np.fft.fft(wave.f, axis=0), axis=0))
    g = wave.v_grid
    fv = _dv4(wave.f, g.dv)
    r1 = (g.nodes - wave.speed)[None, :] * fx - wave.e_field[:, None] * fv
    vlasov = math.sqrt(dx * g.dv * float(np.sum(r1**2)))
    ex = np.real(np.fft.ifft(1j * kx * np.fft.fft(wave.e_field)))
    rho = g.trapezoid(wave.f, axis=1)
    poisson = math.sqrt(dx * float(np.sum((ex + rho - 1) ** 2)))
    return vlasov, poisson
