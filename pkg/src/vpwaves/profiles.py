"""Homogeneous velocity profiles f0(v) on a truncated uniform grid.

Profiles are immutable.  A profile built from a closed form keeps that closed
form (``func``) next to its samples so that off-grid evaluation and derivatives
stay exact; profiles produced by numerical operations (mollification, CSV
input) fall back to a quintic interpolating spline.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Optional

import numpy as np
from scipy import integrate
from scipy.interpolate import make_interp_spline

from .errors import (
    ConfigError,
    NegativeDensity,
    OutOfDomain,
    UnresolvableKernel,
    UnresolvedBump,
    ZeroMass,
)

SQRT2PI = math.sqrt(2.0 * math.pi)
DEFAULT_TAIL_TOL = 1e-12

# func(v, nu) -> nu-th derivative of the profile at v (nu in 0, 1, 2)
ProfileFunc = Callable[[np.ndarray, int], np.ndarray]


@dataclass(frozen=True)
class VelocityGrid:
    v_min: float
    v_max: float
    n_v: int

    def __post_init__(self):
        if not self.v_min < self.v_max:
            raise ConfigError(f"v_min={self.v_min} must be < v_max={self.v_max}")
        if int(self.n_v) != self.n_v or self.n_v < 16:
            raise ConfigError(f"n_v must be an integer >= 16, got {self.n_v}")

    @classmethod
    def symmetric(cls, v_max: float = 8.0, n_v: int = 4096) -> "VelocityGrid":
        return cls(-float(v_max), float(v_max), int(n_v))

    @cached_property
    def nodes(self) -> np.ndarray:
        v = np.linspace(self.v_min, self.v_max, self.n_v)
        v.flags.writeable = False
        return v

    @property
    def dv(self) -> float:
        return (self.v_max - self.v_min) / (self.n_v - 1)

    @property
    def length(self) -> float:
        return self.v_max - self.v_min

    def trapezoid(self, y: np.ndarray, axis: int = -1) -> np.ndarray:
        return integrate.trapezoid(y, dx=self.dv, axis=axis)

    def refined(self, factor: int = 2) -> "VelocityGrid":
        """Grid with ``factor`` times smaller spacing and the same end points."""
        return VelocityGrid(self.v_min, self.v_max, factor * (self.n_v - 1) + 1)

    def index_of(self, v: float) -> int:
        return int(round((v - self.v_min) / self.dv))


class VelocityProfile:
    """Sampled non-negative homogeneous distribution f0 on a VelocityGrid."""

    def __init__(
        self,
        grid: VelocityGrid,
        values,
        *,
        func: Optional[ProfileFunc] = None,
        tail_tol: float = DEFAULT_TAIL_TOL,
        name: str = "custom",
    ):
        values = np.array(values, dtype=float)
        if values.shape != (grid.n_v,):
            raise ConfigError(f"expected {grid.n_v} samples, got shape {values.shape}")
        if not np.all(np.isfinite(values)):
            raise ConfigError("profile samples must be finite")
        scale = max(float(np.max(np.abs(values))), 1.0)
        if np.any(values < -1e-14 * scale):
            raise NegativeDensity(f"profile has negative samples (min {values.min():.3e})")
        np.maximum(values, 0.0, out=values)
        if max(values[0], values[-1]) > tail_tol:
            raise OutOfDomain(
                f"profile does not decay at the grid ends "
                f"(f(v_min)={values[0]:.3e}, f(v_max)={values[-1]:.3e}, tol={tail_tol:.1e})"
            )
        values.flags.writeable = False
        self.grid = grid
        self.values = values
        self.func = func
        self.tail_tol = tail_tol
        self.name = name

    def __repr__(self):
        return f"VelocityProfile({self.name!r}, n_v={self.grid.n_v}, mass={self.mass:.6g})"

    @cached_property
    def mass(self) -> float:
        return float(self.grid.trapezoid(self.values))

    @cached_property
    def second_moment(self) -> float:
        return float(self.grid.trapezoid(self.grid.nodes**2 * self.values))

    @cached_property
    def _spline(self):
        return make_interp_spline(self.grid.nodes, self.values, k=5)

    def __call__(self, v, nu: int = 0) -> np.ndarray:
        """Evaluate the profile (or its ``nu``-th derivative) at arbitrary v.

        Outside the grid the profile is taken to be zero.
        """
        v = np.asarray(v, dtype=float)
        if self.func is not None:
            return self.func(v, nu)
        out = self._spline(v, nu)
        return np.where((v < self.grid.v_min) | (v > self.grid.v_max), 0.0, out)

    @cached_property
    def derivative(self) -> np.ndarray:
        d = np.asarray(self(self.grid.nodes, 1), dtype=float)
        d.flags.writeable = False
        return d

    @cached_property
    def second_derivative(self) -> np.ndarray:
        d = np.asarray(self(self.grid.nodes, 2), dtype=float)
        d.flags.writeable = False
        return d

    def with_values(self, values, *, func=None, name=None, tail_tol=None) -> "VelocityProfile":
        return VelocityProfile(
            self.grid,
            values,
            func=func,
            tail_tol=self.tail_tol if tail_tol is None else tail_tol,
            name=self.name if name is None else name,
        )

    def resample(self, grid: VelocityGrid) -> "VelocityProfile":
        """Same profile on another grid (exact if a closed form is attached)."""
        return VelocityProfile(grid, self(grid.nodes), func=self.func,
                               tail_tol=self.tail_tol, name=self.name)


# ---------------------------------------------------------------------------
# cutoff and bump families
# ---------------------------------------------------------------------------

def cutoff(x, nu: int = 0) -> np.ndarray:
    """Even plateau cutoff: 1 on |x| <= 1, 0 on |x| >= 2.

    Quintic smoothstep in |x| on [1, 2], so it is C^2.  ``nu`` selects the
    derivative (0, 1 or 2).
    """
    x = np.asarray(x, dtype=float)
    t = np.clip(2.0 - np.abs(x), 0.0, 1.0)
    if nu == 0:
        return t**3 * (10.0 - 15.0 * t + 6.0 * t * t)
    if nu == 1:
        return -np.sign(x) * 30.0 * t * t * (1.0 - t) ** 2
    if nu == 2:
        return 60.0 * t * (1.0 - t) * (1.0 - 2.0 * t)
    raise ValueError("cutoff derivatives available up to order 2")


@dataclass(frozen=True)
class BumpFamily:
    """Even positive bump F used to shift principal-value integrals.

    ``positive_nu``: F(v) = exp(-(v-v0)^2/2) + exp(-(v+v0)^2/2), whose
    integral of F'(v)/v is positive for v0 large enough.
    ``negative_nu``: F(v) = exp(-v^2/2), for which that integral is -sqrt(2 pi).
    """

    sign: str = "positive_nu"
    v0: float = 2.0

    def __post_init__(self):
        if self.sign not in ("positive_nu", "negative_nu"):
            raise ConfigError(f"unknown bump sign {self.sign!r}")

    def __call__(self, v, nu: int = 0) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        if self.sign == "negative_nu":
            return _gauss(v, nu)
        return _gauss(v - self.v0, nu) + _gauss(v + self.v0, nu)

    def energy_form(self, y) -> np.ndarray:
        """G with F(v) = G(v^2), continued analytically to y < 0."""
        y = np.asarray(y, dtype=float)
        if self.sign == "negative_nu":
            return np.exp(-0.5 * y)
        r = np.sqrt(np.abs(y))
        even = np.where(y >= 0, np.cosh(self.v0 * r), np.cos(self.v0 * r))
        return 2.0 * np.exp(-0.5 * (y + self.v0**2)) * even

    @property
    def mass(self) -> float:
        return (2.0 if self.sign == "positive_nu" else 1.0) * SQRT2PI

    @property
    def second_moment(self) -> float:
        if self.sign == "negative_nu":
            return SQRT2PI
        return 2.0 * SQRT2PI * (1.0 + self.v0**2)

    @cached_property
    def pv_integral(self) -> float:
        """Integral of F'(v)/v, i.e. of (F(v) - F(0))/v^2, by adaptive quadrature."""
        if self.sign == "negative_nu":
            return -SQRT2PI
        f0 = float(self(0.0))
        # symmetric integrand; integrate the half line and double
        g = lambda v: (float(self(v)) - f0) / (v * v) if v > 0 else float(self(0.0, 2)) / 2
        inner, _ = integrate.quad(g, 0.0, self.v0 + 12.0, points=[self.v0], limit=400,
                                  epsabs=1e-14, epsrel=1e-13)
        tail = -f0 / (self.v0 + 12.0)  # F is negligible beyond, -F(0)/v^2 integrates exactly
        return 2.0 * (inner + tail)


def _gauss(u, nu):
    e = np.exp(-0.5 * u * u)
    if nu == 0:
        return e
    if nu == 1:
        return -u * e
    if nu == 2:
        return (u * u - 1.0) * e
    raise ValueError("derivatives available up to order 2")


# ---------------------------------------------------------------------------
# named profiles
# ---------------------------------------------------------------------------

def maxwellian(grid: VelocityGrid, vth: float = 1.0, drift: float = 0.0) -> VelocityProfile:
    def func(v, nu=0):
        u = (np.asarray(v, dtype=float) - drift) / vth
        return _gauss(u, nu) / (SQRT2PI * vth ** (1 + nu))

    return VelocityProfile(grid, func(grid.nodes), func=func, name="maxwellian")


def double_gaussian(grid: VelocityGrid, v0: float = 3.0) -> VelocityProfile:
    """Normalized two-stream profile F(v)/C0 with F the positive_nu bump."""
    bump = BumpFamily("positive_nu", v0)
    c0 = bump.mass

    def func(v, nu=0):
        return bump(v, nu) / c0

    return VelocityProfile(grid, func(grid.nodes), func=func, name=f"double_gaussian(v0={v0:g})")


def lorentzian(grid: VelocityGrid, tail_tol: float = 1e-3) -> VelocityProfile:
    """(1/pi)/(1+v^2).  Algebraic tails: needs a wide grid and a loose tail tolerance."""

    def func(v, nu=0):
        v = np.asarray(v, dtype=float)
        q = 1.0 + v * v
        if nu == 0:
            return 1.0 / (math.pi * q)
        if nu == 1:
            return -2.0 * v / (math.pi * q * q)
        if nu == 2:
            return (6.0 * v * v - 2.0) / (math.pi * q**3)
        raise ValueError("derivatives available up to order 2")

    return VelocityProfile(grid, func(grid.nodes), func=func, tail_tol=tail_tol, name="lorentzian")


def weizner(grid: VelocityGrid, alpha: float = 0.0) -> VelocityProfile:
    """(v-alpha)^2 exp(-(v-alpha)^2) for v >= alpha, zero below (C^1, not C^2)."""

    def func(v, nu=0):
        u = np.asarray(v, dtype=float) - alpha
        e = np.exp(-u * u)
        if nu == 0:
            out = u * u * e
        elif nu == 1:
            out = (2.0 * u - 2.0 * u**3) * e
        elif nu == 2:
            out = (2.0 - 10.0 * u * u + 4.0 * u**4) * e
        else:
            raise ValueError("derivatives available up to order 2")
        return np.where(u >= 0.0, out, 0.0)

    return VelocityProfile(grid, func(grid.nodes), func=func, name=f"weizner(alpha={alpha:g})")


NAMED_PROFILES = {
    "maxwellian": maxwellian,
    "double_gaussian": double_gaussian,
    "lorentzian": lorentzian,
    "weizner": weizner,
}


def named_profile(name: str, grid: VelocityGrid, **params) -> VelocityProfile:
    try:
        factory = NAMED_PROFILES[name]
    except KeyError:
        raise ConfigError(f"unknown profile {name!r}; choose from {sorted(NAMED_PROFILES)}") from None
    return factory(grid, **params)


# ---------------------------------------------------------------------------
# operations
# ---------------------------------------------------------------------------

def normalize(profile: VelocityProfile) -> VelocityProfile:
    mass = profile.mass
    if mass <= profile.tail_tol:
        raise ZeroMass(f"cannot normalize a profile of mass {mass:.3e}")
    scale = 1.0 / mass
    func = None
    if profile.func is not None:
        base = profile.func
        func = lambda v, nu=0: scale * base(v, nu)
    return profile.with_values(profile.values * scale, func=func)


def mollify(profile: VelocityProfile, delta1: float) -> VelocityProfile:
    """Convolve with the standard C-infinity mollifier of radius ``delta1``."""
    dv = profile.grid.dv
    if not delta1 > 0 or delta1 < 2 * dv:
        raise UnresolvableKernel(f"mollifier radius {delta1} below two grid spacings ({2 * dv:.3e})")
    m = int(math.floor(delta1 / dv))
    u = np.arange(-m, m + 1) * dv / delta1
    with np.errstate(divide="ignore", over="ignore"):
        kernel = np.where(np.abs(u) < 1.0, np.exp(-1.0 / np.maximum(1.0 - u * u, 1e-300)), 0.0)
    kernel /= kernel.sum()
    # zero padding: the kernel sees f = 0 beyond the grid ends
    padded = np.concatenate([np.zeros(m), profile.values, np.zeros(m)])
    out = np.convolve(padded, kernel, mode="same")[m:-m]
    return profile.with_values(out, name=f"mollify({profile.name})",
                               tail_tol=max(profile.tail_tol, float(max(out[0], out[-1]))))


def symmetrize_near(profile: VelocityProfile, c: float, delta2: float) -> VelocityProfile:
    """Make the profile even about ``c`` on [c - delta2, c + delta2].

    f_sym(v) = f(v) - (f(v) - f(2c - v))/2 * cutoff((v - c)/delta2).  The
    correction is odd about c times an even window, so mass is preserved.
    """
    g = profile.grid
    if delta2 <= 0:
        raise ConfigError("delta2 must be positive")
    if c - 2 * delta2 < g.v_min or c + 2 * delta2 > g.v_max:
        raise OutOfDomain(f"symmetrization window [{c - 2 * delta2}, {c + 2 * delta2}] leaves the grid")
    base = profile

    def func(v, nu=0):
        v = np.asarray(v, dtype=float)
        w = (v - c) / delta2
        odd = 0.5 * (base(v, 0) - base(2 * c - v, 0))
        if nu == 0:
            return base(v, 0) - odd * cutoff(w)
        odd1 = 0.5 * (base(v, 1) + base(2 * c - v, 1))
        if nu == 1:
            return base(v, 1) - odd1 * cutoff(w) - odd * cutoff(w, 1) / delta2
        odd2 = 0.5 * (base(v, 2) - base(2 * c - v, 2))
        if nu == 2:
            return (base(v, 2) - odd2 * cutoff(w) - 2 * odd1 * cutoff(w, 1) / delta2
                    - odd * cutoff(w, 2) / delta2**2)
        raise ValueError("derivatives available up to order 2")

    values = func(g.nodes)
    if np.any(values < -1e-14 * max(1.0, float(np.max(np.abs(values))))):
        raise NegativeDensity("symmetrization produced negative values; reduce delta2")
    return profile.with_values(np.maximum(values, 0.0), func=func,
                               name=f"symmetrize({profile.name}, c={c:g})")


def modified_family(
    profile: VelocityProfile,
    bump: BumpFamily,
    gamma: float,
    delta: float,
    center: float = 0.0,
) -> VelocityProfile:
    """f_{gamma,delta} = [f0 + (gamma/delta) F((v-center)/(gamma delta))] / (1 + C0 gamma^2)."""
    if gamma < 0 or delta <= 0:
        raise ConfigError("need gamma >= 0 and delta > 0")
    if gamma == 0:
        return profile
    width = gamma * delta
    if width < 2 * profile.grid.dv:
        raise UnresolvedBump(f"bump width gamma*delta={width:.3e} below two grid spacings")
    norm = 1.0 / (1.0 + bump.mass * gamma**2)
    amp = gamma / delta
    base = profile

    def func(v, nu=0):
        v = np.asarray(v, dtype=float)
        return norm * (base(v, nu) + amp * bump((v - center) / width, nu) / width**nu)

    return profile.with_values(func(profile.grid.nodes), func=func,
                               name=f"modified({profile.name}, gamma={gamma:g}, delta={delta:g})")


def rescale_profile(profile: VelocityProfile, center: float, delta: float) -> VelocityProfile:
    """f_delta(v) = f(center + (v - center)/delta) / delta."""
    if delta <= 0:
        raise ConfigError("delta must be positive")
    if delta == 1:
        return profile
    base = profile

    def func(v, nu=0):
        v = np.asarray(v, dtype=float)
        return base(center + (v - center) / delta, nu) / delta ** (1 + nu)

    g = profile.grid
    values = func(g.nodes)
    if delta > 1:
        # support of the original pulled inside the grid must carry negligible mass
        lost = (profile.mass - g.trapezoid(values))
        if abs(lost) > max(1e-10, 1e3 * profile.tail_tol):
            raise OutOfDomain(f"rescaled support leaves the grid (mass defect {lost:.3e})")
    if max(values[0], values[-1]) > profile.tail_tol:
        raise OutOfDomain("rescaled profile does not decay at the grid ends")
    return profile.with_values(values, func=func,
                               name=f"rescale({profile.name}, delta={delta:g})")


@dataclass(frozen=True)
class Extremum:
    v: float
    kind: str  # "max" or "min"
    curvature: float
    degenerate: bool = False


def find_extrema(
    profile: VelocityProfile,
    degeneracy_tol: float = 1e-8,
    floor: float = 1e-10,
) -> list[Extremum]:
    """Interior extrema from sign changes of f0', refined by a local quadratic fit.

    Sign changes where f0 is below ``floor * max f0`` are ignored (roundoff in
    the tails).  When a closed form is attached the location is polished by
    root finding on f0'.
    """
    from scipy.optimize import brentq

    f = profile.values
    n = f.size
    if n < 3:
        return []
    v = profile.grid.nodes
    dv = profile.grid.dv
    d = profile.derivative
    live = f > floor * f.max()
    out: list[Extremum] = []
    i = 1
    while i < n - 1:
        s0, s1 = np.sign(d[i - 1]), np.sign(d[i])
        hit = None
        if live[i - 1] and live[i]:
            if s0 * s1 < 0:
                hit = i - 1
            elif s1 == 0 and i + 1 < n and np.sign(d[i + 1]) * s0 < 0:
                hit = i - 1
        if hit is None:
            i += 1
            continue
        # pick the node of the bracketing pair with the more extreme value, fit a parabola
        j = hit if abs(d[hit]) < abs(d[hit + 1]) else hit + 1
        j = min(max(j, 1), n - 2)
        denom = f[j - 1] - 2 * f[j] + f[j + 1]
        vx = v[j] + (0.5 * dv * (f[j - 1] - f[j + 1]) / denom if denom != 0 else 0.0)
        if profile.func is not None:
            a, b = v[hit], v[hit + 1]
            fa, fb = profile(a, 1), profile(b, 1)
            if fa * fb < 0:
                vx = brentq(lambda x: float(profile(x, 1)), a, b, xtol=1e-15, rtol=1e-15)
            elif fa == 0:
                vx = a
        curv = float(profile(vx, 2)) if profile.func is not None else denom / dv**2
        kind = "max" if s0 > 0 else "min"
        out.append(Extremum(float(vx), kind, curv, abs(curv) < degeneracy_tol))
        i = hit + 2
    return out


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def write_profile_csv(path, profile: VelocityProfile) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["v", "f"])
        for vi, fi in zip(profile.grid.nodes, profile.values):
            w.writerow([f"{vi:.17g}", f"{fi:.17g}"])


def read_profile_csv(path, tail_tol: float = DEFAULT_TAIL_TOL) -> VelocityProfile:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or [h.strip() for h in rows[0]] != ["v", "f"]:
        raise ConfigError(f"{path}: expected header 'v,f'")
    data = np.array([[float(a), float(b)] for a, b in rows[1:]])
    v, f = data[:, 0], data[:, 1]
    grid = VelocityGrid(float(v[0]), float(v[-1]), len(v))
    if not np.allclose(v, grid.nodes, rtol=0, atol=1e-9 * grid.dv):
        raise ConfigError(f"{path}: velocity nodes are not uniform")
    return VelocityProfile(grid, f, tail_tol=tail_tol, name=str(path))
