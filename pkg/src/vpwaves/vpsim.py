"""Nonlinear 1D1V Vlasov-Poisson evolution, periodic in x and truncated in v.

Strang splitting: half x-advection, Poisson solve, full v-advection, half
x-advection.  x-advection is an exact spectral phase shift; the v-shift is
six-point Lagrange (default) or a zero-padded spectral shift.  Travelling
waves are evolved in the co-moving frame: the x-advection uses v - c.
"""
from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np
from scipy import fft as sfft

from .errors import AccuracyBoundExceeded, GridMismatch, NeutralityViolated
from .io import read_csv, write_csv, write_json
from .profiles import VelocityGrid, VelocityProfile


@dataclass
class PhaseSpaceField:
    length: float
    v_grid: VelocityGrid
    f: np.ndarray  # (n_x, n_v)
    t: float = 0.0
    speed: float = 0.0  # frame speed c

    def __post_init__(self):
        self.f = np.asarray(self.f, dtype=float)
        if self.f.ndim != 2 or self.f.shape[1] != self.v_grid.n_v:
            raise GridMismatch(f"f has shape {self.f.shape}, v-grid has {self.v_grid.n_v} nodes")

    @property
    def n_x(self) -> int:
        return self.f.shape[0]

    @property
    def dx(self) -> float:
        return self.length / self.n_x

    @property
    def x(self) -> np.ndarray:
        return np.arange(self.n_x) * self.dx

    @property
    def kx(self) -> np.ndarray:
        return 2 * np.pi * sfft.rfftfreq(self.n_x, d=self.dx)

    def density(self) -> np.ndarray:
        return self.v_grid.trapezoid(self.f, axis=1)

    def mass(self) -> float:
        return float(self.dx * np.sum(self.density()))

    def copy(self) -> "PhaseSpaceField":
        return PhaseSpaceField(self.length, self.v_grid, self.f.copy(), self.t, self.speed)

    def undershoot(self) -> bool:
        """True when f dips below -1e-12 max f (interpolation undershoot)."""
        return bool(self.f.min() < -1e-12 * self.f.max())

    def save(self, directory) -> None:
        d = Path(directory)
        d.mkdir(parents=True, exist_ok=True)
        X, V = np.meshgrid(self.x, self.v_grid.nodes, indexing="ij")
        write_csv(d / "f.csv", ["x", "v", "f"], [X, V, self.f])
        g = self.v_grid
        write_json(d / "meta.json", {"t": self.t, "c": self.speed, "length": self.length,
                                     "T": self.length, "n_x": self.n_x, "v_min": g.v_min,
                                     "v_max": g.v_max, "n_v": g.n_v})

    @classmethod
    def load(cls, directory) -> "PhaseSpaceField":
        d = Path(directory)
        meta = json.loads((d / "meta.json").read_text())
        _, data = read_csv(d / "f.csv")
        grid = VelocityGrid(meta["v_min"], meta["v_max"], int(meta["n_v"]))
        f = data[:, 2].reshape(int(meta["n_x"]), grid.n_v)
        return cls(meta.get("length", meta["T"]), grid, f, meta.get("t", 0.0), meta.get("c", 0.0))

    @classmethod
    def homogeneous(cls, profile: VelocityProfile, length: float, n_x: int, *,
                    perturbation: float = 0.0, mode: int = 1, speed: float = 0.0) -> "PhaseSpaceField":
        """f0(v) (1 + eps cos(2 pi mode x / L))."""
        x = np.arange(n_x) * length / n_x
        mod = 1 + perturbation * np.cos(2 * np.pi * mode * x / length)
        return cls(length, profile.grid, mod[:, None] * profile.values[None, :], 0.0, speed)

    @classmethod
    def from_wave(cls, wave) -> "PhaseSpaceField":
        """Initial state from a BgkWave, in the wave's co-moving frame."""
        return cls(wave.length, wave.v_grid, wave.f.copy(), 0.0, wave.speed)


def poisson_solve(state: PhaseSpaceField, tol: float = 1e-8) -> np.ndarray:
    """E with E_x = 1 - rho and zero mean, by spectral antiderivative."""
    rho = state.density()
    defect = abs(float(np.mean(rho)) - 1.0)
    if defect > tol:
        raise NeutralityViolated(f"mean density differs from 1 by {defect:.3e}")
    rhs = sfft.rfft(1.0 - rho)
    k = state.kx
    ek = np.zeros_like(rhs)
    ek[1:] = rhs[1:] / (1j * k[1:])
    if state.n_x % 2 == 0:
        ek[-1] = 0.0  # Nyquist mode has no real antiderivative
    return sfft.irfft(ek, state.n_x)


@lru_cache(maxsize=8)
def _phase(n_x: int, length: float, v_min: float, v_max: float, n_v: int, speed: float,
           dt: float) -> np.ndarray:
    kx = 2 * np.pi * sfft.rfftfreq(n_x, d=length / n_x)
    u = np.linspace(v_min, v_max, n_v) - speed
    return np.exp(-1j * kx[:, None] * u[None, :] * dt)


def _advect_x(state: PhaseSpaceField, dt: float) -> None:
    g = state.v_grid
    fk = sfft.rfft(state.f, axis=0)
    fk *= _phase(state.n_x, state.length, g.v_min, g.v_max, g.n_v, state.speed, dt)
    state.f = sfft.irfft(fk, state.n_x, axis=0)


def _lagrange6_weights(theta: np.ndarray) -> np.ndarray:
    """Weights at offsets -2..3 for interpolation at fractional position theta."""
    offs = np.arange(-2, 4)
    w = np.ones((theta.size, 6))
    for i, oi in enumerate(offs):
        for oj in offs:
            if oj != oi:
                w[:, i] *= (theta - oj) / (oi - oj)
    return w


def _shift_v(f: np.ndarray, a: np.ndarray, dv: float, method: str) -> np.ndarray:
    """Rows of f evaluated at v + a (zero inflow outside the grid)."""
    n_x, n_v = f.shape
    if method == "spectral":
        m = sfft.next_fast_len(2 * n_v)
        fk = sfft.rfft(f, m, axis=1)
        xi = 2 * np.pi * sfft.rfftfreq(m, d=dv)
        fk *= np.exp(1j * xi[None, :] * a[:, None])
        return sfft.irfft(fk, m, axis=1)[:, :n_v]
    if method != "lagrange6":
        raise ValueError(f"unknown v interpolation {method!r}")
    p = a / dv
    s = np.floor(p).astype(int)
    w = _lagrange6_weights(p - s)
    pad = int(np.max(np.abs(s))) + 4
    fp = np.zeros((n_x, n_v + 2 * pad))
    fp[:, pad:pad + n_v] = f
    flat = fp.ravel()
    base = (np.arange(n_x) * fp.shape[1] + pad + s)[:, None] + np.arange(n_v)[None, :]
    out = np.zeros_like(f)
    for i, o in enumerate(range(-2, 4)):
        out += w[:, i:i + 1] * np.take(flat, base + o)
    return out


def step(state: PhaseSpaceField, dt: float, *, v_interp: str = "lagrange6",
         accuracy_bound: float = 2.0, strict: bool = False, coupling: bool = True) -> PhaseSpaceField:
    """One Strang step (returns a new state)."""
    out = state.copy()
    if dt == 0:
        return out
    g = state.v_grid
    cfl_x = abs(dt) * float(np.max(np.abs(g.nodes - state.speed))) / state.dx
    if cfl_x > accuracy_bound:
        msg = f"dt*max|v|/dx = {cfl_x:.3g} exceeds {accuracy_bound:g}"
        if strict:
            raise AccuracyBoundExceeded(msg)
        warnings.warn(msg, RuntimeWarning, stacklevel=2)
    _advect_x(out, 0.5 * dt)
    if coupling:
        e = poisson_solve(out)
        cfl_v = abs(dt) * float(np.max(np.abs(e))) / g.dv
        if cfl_v > accuracy_bound:
            msg = f"dt*max|E|/dv = {cfl_v:.3g} exceeds {accuracy_bound:g}"
            if strict:
                raise AccuracyBoundExceeded(msg)
            warnings.warn(msg, RuntimeWarning, stacklevel=2)
        out.f = _shift_v(out.f, e * dt, g.dv, v_interp)
    _advect_x(out, 0.5 * dt)
    out.t = state.t + dt
    return out


# ---------------------------------------------------------------------------
# diagnostics
# ---------------------------------------------------------------------------

def distance_tracker(state: PhaseSpaceField, reference: VelocityProfile, s: float,
                     pad: int = 2) -> float:
    """(sum_x dx ||f(x,.) - f0||^2_{H^s_v})^{1/2} with the spectral H^s norm."""
    if s > 4:
        raise ValueError("s must be at most 4")
    g = state.v_grid
    diff = state.f - reference.values[None, :]
    m = sfft.next_fast_len(pad * g.n_v)
    spec = sfft.rfft(diff, m, axis=1) * g.dv
    xi = 2 * np.pi * sfft.rfftfreq(m, d=g.dv)
    wts = np.full(xi.size, 2.0)  # rfft keeps one half of the symmetric spectrum
    wts[0] = 1.0
    if m % 2 == 0:
        wts[-1] = 1.0
    h = 2 * np.pi / (m * g.dv)
    per_row = h * np.sum(wts * (1 + xi**2) ** s * np.abs(spec) ** 2, axis=1) / (2 * np.pi)
    return float(math.sqrt(state.dx * float(np.sum(per_row))))


@dataclass
class SimDiagnostics:
    s_values: tuple = ()
    t: list = field(default_factory=list)
    mass: list = field(default_factory=list)
    momentum: list = field(default_factory=list)
    energy: list = field(default_factory=list)
    e_l2: list = field(default_factory=list)
    f_l2: list = field(default_factory=list)
    e_mode: list = field(default_factory=list)  # |E_k| of the first Fourier mode
    dist: dict = field(default_factory=dict)
    undershoot: list = field(default_factory=list)
    density_bound: list = field(default_factory=list)

    def record(self, state: PhaseSpaceField, e: np.ndarray, reference: VelocityProfile | None):
        g, dx = state.v_grid, state.dx
        v = g.nodes
        rho = state.density()
        m2 = g.trapezoid(state.f * v**2, axis=1)
        self.t.append(state.t)
        self.mass.append(float(dx * rho.sum()))
        self.momentum.append(float(dx * np.sum(g.trapezoid(state.f * v, axis=1))))
        e2 = float(dx * np.sum(e**2))
        self.energy.append(float(dx * m2.sum()) + e2)
        self.e_l2.append(math.sqrt(e2))
        self.f_l2.append(math.sqrt(float(dx * np.sum(g.trapezoid(state.f**2, axis=1)))))
        self.e_mode.append(float(np.abs(sfft.rfft(e)[1]) * 2 / state.n_x) if state.n_x > 2 else 0.0)
        for s in self.s_values:
            self.dist.setdefault(s, []).append(
                distance_tracker(state, reference, s) if reference is not None else float("nan"))
        self.undershoot.append(state.undershoot())
        # rho <= 3 ||f||_inf^{2/3} (int v^2 f)^{1/3}, from splitting |v| < R and |v| > R
        fmax = np.max(np.abs(state.f), axis=1)
        self.density_bound.append(bool(np.all(rho <= 3 * fmax ** (2 / 3) * np.maximum(m2, 0) ** (1 / 3) + 1e-14)))

    def arrays(self) -> dict:
        out = {k: np.asarray(getattr(self, k)) for k in
               ("t", "mass", "momentum", "energy", "e_l2", "f_l2", "e_mode")}
        for s, vals in self.dist.items():
            out[f"dist_{s:g}"] = np.asarray(vals)
        return out

    def to_csv(self, path) -> None:
        a = self.arrays()
        write_csv(path, list(a), list(a.values()))

    def relative_drift(self, name: str) -> float:
        x = np.asarray(getattr(self, name))
        return float(np.max(np.abs(x - x[0])) / abs(x[0])) if x[0] != 0 else float(np.max(np.abs(x)))


def evolve(state: PhaseSpaceField, dt: float, n_steps: int, *, stride: int = 1,
           reference: VelocityProfile | None = None, s_values=(), checkpoint_dir=None,
           checkpoint_stride: int = 0, **step_kw) -> tuple[PhaseSpaceField, SimDiagnostics]:
    """Run n_steps of `step`, recording diagnostics every `stride` steps."""
    if stride < 1:
        raise ValueError("stride must be positive")
    diag = SimDiagnostics(tuple(s_values))
    cur = state.copy()
    coupled = step_kw.get("coupling", True)
    for n in range(n_steps + 1):
        if n % stride == 0 or n == n_steps:
            e = poisson_solve(cur) if coupled else np.zeros(cur.n_x)
            diag.record(cur, e, reference)
        if checkpoint_dir is not None and checkpoint_stride and n % checkpoint_stride == 0:
            cur.save(Path(checkpoint_dir) / f"step_{n:07d}")
        if n < n_steps:
            cur = step(cur, dt, **step_kw)
    return cur, diag
