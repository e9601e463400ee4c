"""Linear Landau damping for a single spatial Fourier mode.

The linearized system is d_t h_k + i k v h_k - E_k f0' = 0 with
E_k = -(1/ik) int h_k dv.  For stable k the field is given by the contour
formula on the real line,

    E_k(t) = (k/2pi) int H_k(x) exp(-i k x t) dx,  H_k = G_k(x+i0) / (k^2 - F(x+i0)),

with G_k, F the boundary values of the Cauchy integrals of g_k and f0'.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from math import comb

import numpy as np

from .errors import DenominatorNearZero, InsufficientPoints, StepTooLarge, UnstableMode
from .io import write_csv, write_json
from .profiles import VelocityGrid, VelocityProfile
from .quadrature import SobolevSpec, hilbert_boundary, sobolev_norm


@dataclass
class ModeInitialData:
    """k-th Fourier coefficient g_k(v) of the initial perturbation."""

    k: float
    g: np.ndarray
    dg: np.ndarray | None = None
    name: str = "custom"

    def __post_init__(self):
        if self.k == 0:
            raise ValueError("the homogeneous mode k=0 does not evolve")
        self.g = np.asarray(self.g)
        if self.dg is not None:
            self.dg = np.asarray(self.dg)

    def conj(self) -> "ModeInitialData":
        dg = None if self.dg is None else np.conj(self.dg)
        return ModeInitialData(-self.k, np.conj(self.g), dg, self.name)

    def e0(self, grid: VelocityGrid) -> complex:
        """Poisson field at t = 0: -(1/ik) int g dv."""
        return complex(1j / self.k * grid.trapezoid(self.g))


@dataclass
class FieldTimeSeries:
    t: np.ndarray
    e_k: np.ndarray
    k: float

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=float)
        self.e_k = np.asarray(self.e_k, dtype=complex)
        if self.t.shape != self.e_k.shape:
            raise ValueError("t and e_k differ in length")

    @property
    def abs(self) -> np.ndarray:
        return np.abs(self.e_k)

    def to_csv(self, path) -> None:
        e = self.e_k
        write_csv(path, ["t", "re_e", "im_e", "abs_e"], [self.t, e.real, e.imag, np.abs(e)])


# ---------------------------------------------------------------------------
# initial data
# ---------------------------------------------------------------------------

def gaussian_data(grid: VelocityGrid, k: float, amplitude: float = 1.0,
                  center: float = 0.0, width: float = 1.0) -> ModeInitialData:
    u = (grid.nodes - center) / width
    g = amplitude * np.exp(-0.5 * u * u) / (width * math.sqrt(2 * math.pi))
    return ModeInitialData(k, g, -u / width * g, "gaussian")


def weizner_data(grid: VelocityGrid, k: float, alpha: float = 0.0,
                 amplitude: float = 1.0) -> ModeInitialData:
    """g = (v-alpha)^2 exp(-(v-alpha)^2) for v >= alpha, else 0 (C^1, not C^2)."""
    u = grid.nodes - alpha
    on = u >= 0
    e = np.exp(-u * u)
    g = np.where(on, amplitude * u * u * e, 0.0)
    dg = np.where(on, amplitude * (2 * u - 2 * u**3) * e, 0.0)
    return ModeInitialData(k, g, dg, "weizner")


def hat_data(grid: VelocityGrid, k: float, center: float = 0.0, half_width: float = 1.0,
             amplitude: float = 1.0) -> ModeInitialData:
    """Piecewise-linear hat: the n = 1 member of the Akhiezer family (kinks in g)."""
    u = (grid.nodes - center) / half_width
    g = amplitude * np.clip(1 - np.abs(u), 0.0, None)
    dg = np.where(np.abs(u) < 1, -amplitude * np.sign(u) / half_width, 0.0)
    return ModeInitialData(k, g, dg, "hat")


DATA_FACTORIES = {"gaussian": gaussian_data, "weizner": weizner_data, "hat": hat_data}


# ---------------------------------------------------------------------------
# contour formula
# ---------------------------------------------------------------------------

def _tail_coefficients(grid: VelocityGrid, g: np.ndarray, profile: VelocityProfile,
                       k: float, order: int) -> np.ndarray:
    """h_n with H_k(x) = sum_{n=1}^{order} h_n x^{-n} + O(x^{-order-1}).

    G(z) = -sum m_{n-1}[g] z^{-n} and F(z) = sum (n-1) m_{n-2}[f0] z^{-n}.
    """
    v = grid.nodes
    gs = np.zeros(order + 1, dtype=complex)
    fs = np.zeros(order + 1, dtype=complex)
    for n in range(1, order + 1):
        gs[n] = -grid.trapezoid(v ** (n - 1) * g)
        if n >= 2:
            fs[n] = (n - 1) * grid.trapezoid(v ** (n - 2) * profile.values)
    # 1/(k^2 - F) as a power series in 1/z
    den = -fs.copy()
    den[0] += k * k
    inv = np.zeros(order + 1, dtype=complex)
    inv[0] = 1 / den[0]
    for n in range(1, order + 1):
        inv[n] = -np.dot(den[1 : n + 1], inv[n - 1 :: -1][:n]) / den[0]
    h = np.array([np.dot(gs[: n + 1], inv[n::-1]) for n in range(order + 1)])
    return h


def _pole_weights(h: np.ndarray, lam: float) -> np.ndarray:
    """a_n with sum a_n (z - i lam)^{-n} matching sum h_n z^{-n} through z^{-order}."""
    order = h.size - 1
    a = np.zeros(order + 1, dtype=complex)
    rem = h.copy()
    for n in range(1, order + 1):
        a[n] = rem[n]
        # (z - i lam)^{-n} = sum_j C(n+j-1, j) (i lam)^j z^{-n-j}
        for j in range(1, order - n + 1):
            rem[n + j] -= a[n] * comb(n + j - 1, j) * (1j * lam) ** j
    return a


def boundary_integrand(profile: VelocityProfile, data: ModeInitialData, *, extend: float = 4.0):
    """(x, H_k(x), F(x+i0)) on the velocity grid extended by zero padding."""
    grid = profile.grid
    n_side = int(round((extend - 1) * (grid.n_v - 1) / 2))
    ext = VelocityGrid(grid.v_min - n_side * grid.dv, grid.v_max + n_side * grid.dv,
                       grid.n_v + 2 * n_side)
    pad = lambda a: np.concatenate([np.zeros(n_side, dtype=a.dtype), a, np.zeros(n_side, dtype=a.dtype)])
    fp, fpp = pad(profile.derivative), pad(profile.second_derivative)
    g = pad(data.g)
    dg = None if data.dg is None else pad(data.dg)
    F = hilbert_boundary(ext, fp, dg=fpp)
    G = hilbert_boundary(ext, g, dg=dg)
    k = abs(data.k)
    return ext, G / (k * k - F), F


def landau_field(profile: VelocityProfile, data: ModeInitialData, t_grid, *,
                 extend: float = 4.0, tail_order: int = 6, lam: float = 2.0,
                 check_stability: bool = True, chunk: int = 256) -> FieldTimeSeries:
    """E_k(t) from the real-line contour formula.

    The 1/x^n tail of H_k is removed analytically by subtracting
    sum a_n/(x - i lam)^n, whose transform vanishes for t > 0; the smooth
    remainder is summed directly.  The value at t = 0 is the limit t -> 0+.
    """
    if data.k < 0:
        s = landau_field(profile, data.conj(), t_grid, extend=extend, tail_order=tail_order,
                         lam=lam, check_stability=check_stability, chunk=chunk)
        return FieldTimeSeries(s.t, np.conj(s.e_k), data.k)
    k = data.k
    t = np.asarray(t_grid, dtype=float)
    if np.any(t < 0):
        raise ValueError("t must be non-negative")
    if check_stability:
        from .penrose import critical_period
        rep = critical_period(profile)
        if rep.is_unstable(k):
            raise UnstableMode(f"k={k:g} lies in an unstable interval {rep.unstable_k_intervals}")
    if not np.any(data.g):
        return FieldTimeSeries(t, np.zeros_like(t, dtype=complex), k)
    ext, H, F = boundary_integrand(profile, data, extend=extend)
    margin = np.min(np.abs(k * k - F))
    if margin < 1e-3 * k * k:
        raise DenominatorNearZero(f"min |k^2 - F(x+i0)| = {margin:.3e} (marginal stability)")
    x = ext.nodes
    h = _tail_coefficients(profile.grid, data.g, profile, k, tail_order)
    a = _pole_weights(h, lam)
    zs = x - 1j * lam
    S = sum(a[n] / zs**n for n in range(1, tail_order + 1))
    R = (H - S) * ext.dv
    R[0] *= 0.5
    R[-1] *= 0.5
    out = np.empty(t.size, dtype=complex)
    for i in range(0, t.size, chunk):
        tt = t[i : i + chunk]
        out[i : i + chunk] = np.exp(-1j * k * np.outer(tt, x)) @ R
    return FieldTimeSeries(t, k / (2 * math.pi) * out, k)


# ---------------------------------------------------------------------------
# time-domain oracle
# ---------------------------------------------------------------------------

def linearized_evolve(profile: VelocityProfile, data: ModeInitialData, dt: float, n_steps: int,
                      *, coupling: bool = True, stride: int = 1) -> FieldTimeSeries:
    """Strang splitting: half free-streaming, field kick, half free-streaming.

    Free streaming is the exact factor exp(-i k v dt/2).  The kick
    h += dt E_k f0' leaves int h dv (hence E_k) unchanged because int f0' = 0,
    so it is exact as well; the only error is the O(dt^2) splitting error.
    With ``coupling=False`` the series is the Poisson field of pure phase mixing.
    """
    grid = profile.grid
    k = data.k
    if dt * abs(k) * max(abs(grid.v_min), abs(grid.v_max)) > 0.5:
        raise StepTooLarge("dt k v_max must not exceed 0.5")
    v = grid.nodes
    h = np.array(data.g, dtype=complex)
    half = np.exp(-0.5j * k * v * dt)
    fp = profile.derivative
    e_of = lambda hh: 1j / k * grid.trapezoid(hh)
    ts = [0.0]
    es = [e_of(h)]
    for n in range(1, n_steps + 1):
        h *= half
        if coupling:
            h += dt * e_of(h) * fp
        h *= half
        if n % stride == 0:
            ts.append(n * dt)
            es.append(e_of(h))
    return FieldTimeSeries(np.array(ts), np.array(es), k)


# ---------------------------------------------------------------------------
# decay fits and norms
# ---------------------------------------------------------------------------

@dataclass
class DecayFit:
    exponent: float
    prefactor: float
    window: tuple[float, float]
    r_squared: float
    n_points: int = 0

    def to_dict(self) -> dict:
        return {"exponent": self.exponent, "prefactor": self.prefactor,
                "window": list(self.window), "r_squared": self.r_squared, "n_points": self.n_points}

    def to_json(self, path) -> None:
        write_json(path, self.to_dict())


def envelope(series: FieldTimeSeries, window, period: float | None = None):
    """Block maxima of |E| over consecutive blocks of length ``period`` (default 2pi/k)."""
    t_lo, t_hi = window
    period = 2 * math.pi / abs(series.k) if period is None else period
    t, a = series.t, series.abs
    edges = np.arange(t_lo, t_hi + 1e-12 * max(1.0, t_hi), period)
    tm, am = [], []
    for lo, hi in zip(edges[:-1], edges[1:]):
        sel = np.nonzero((t >= lo) & (t < hi))[0]
        if sel.size == 0:
            continue
        j = sel[np.argmax(a[sel])]
        tm.append(t[j])
        am.append(a[j])
    return np.array(tm), np.array(am)


def fit_decay(series: FieldTimeSeries, window, period: float | None = None,
              min_points: int = 20) -> DecayFit:
    """Least-squares fit |E| ~ C t^{-p} to the block-maximum envelope.

    ``period`` defaults to one plasma period 2pi/k; it is shrunk automatically
    if that leaves fewer than ``min_points`` blocks in the window.
    """
    t_lo, t_hi = window
    if not (0 < t_lo < t_hi) or t_hi > series.t[-1] + 1e-9 or t_lo < series.t[0]:
        raise ValueError("window must lie inside the series support with 0 < t_lo < t_hi")
    period = 2 * math.pi / abs(series.k) if period is None else period
    span = t_hi - t_lo
    if span / period < min_points:
        period = span / min_points
    tm, am = envelope(series, window, period)
    keep = am > 0
    tm, am = tm[keep], am[keep]
    if tm.size < min_points:
        raise InsufficientPoints(f"only {tm.size} usable envelope points (need {min_points})")
    x, y = np.log(tm), np.log(am)
    slope, icpt = np.polyfit(x, y, 1)
    resid = y - (slope * x + icpt)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    return DecayFit(float(-slope), float(math.exp(icpt)), (float(t_lo), float(t_hi)),
                    float(min(max(r2, 0.0), 1.0)), int(tm.size))


def fit_growth(series: FieldTimeSeries, window) -> float:
    """Exponential rate of |E| over a window (log-linear least squares)."""
    t_lo, t_hi = window
    sel = (series.t >= t_lo) & (series.t <= t_hi) & (series.abs > 0)
    if np.count_nonzero(sel) < 3:
        raise InsufficientPoints("too few samples in the growth window")
    return float(np.polyfit(series.t[sel], np.log(series.abs[sel]), 1)[0])


@dataclass
class DecayNorm:
    value: float
    tail_fraction: float  # share of the squared norm from the last quarter of the time range


def integral_decay_norm(series_set, s_x: float = 0.0, s_v: float = 0.0) -> DecayNorm:
    """(sum_k |k|^{3+2 s_v+2 s_x} int t^{2 s_v} |E_k|^2 dt)^{1/2}, truncated at each series' t_max."""
    if s_v < 0:
        raise ValueError("negative s_v is not supported")
    total = 0.0
    tail = 0.0
    for s in series_set:
        w = abs(s.k) ** (3 + 2 * s_v + 2 * s_x)
        integrand = s.t ** (2 * s_v) * s.abs**2
        total += w * np.trapezoid(integrand, s.t)
        cut = s.t >= s.t[0] + 0.75 * (s.t[-1] - s.t[0])
        if np.count_nonzero(cut) > 1:
            tail += w * np.trapezoid(integrand[cut], s.t[cut])
    value = math.sqrt(total)
    return DecayNorm(value, tail / total if total > 0 else 0.0)


def data_norm(grid: VelocityGrid, data_set, s_x: float = 0.0, s_v: float = 1.0) -> float:
    """(sum_k |k|^{2 s_x} ||g_k||^2_{H^{s_v}})^{1/2}."""
    spec = SobolevSpec(s_v)
    return math.sqrt(sum(abs(d.k) ** (2 * s_x) * sobolev_norm(grid, d.g, spec) ** 2 for d in data_set))
