"""Independent closed-form references, computed without the package."""
import math

import numpy as np
from scipy import integrate, special


def gaussian_pv(c: float) -> float:
    """P int exp(-v^2/2)/(v - c) dv = -2 sqrt(pi) D(c/sqrt 2), D the Dawson function."""
    return -2.0 * math.sqrt(math.pi) * special.dawsn(c / math.sqrt(2.0))


def maxwellian_penrose(c: float) -> float:
    """P int M'(v)/(v - c) dv for the unit Maxwellian M."""
    # M'(v) = -v M(v); -v/(v-c) = -1 - c/(v-c)
    return -1.0 - c * gaussian_pv(c) / math.sqrt(2 * math.pi)


def lorentzian_penrose_at_zero() -> float:
    """int f'/v for f = 1/(pi(1+v^2)): int -2/(pi (1+v^2)^2) = -1."""
    return -1.0


def pendulum_period(amplitude: float) -> float:
    """Period of beta'' = -sin(beta) through the turning point `amplitude`: 4 K(sin^2(a/2))."""
    return 4.0 * special.ellipk(math.sin(amplitude / 2) ** 2)


def pendulum_period_quad(amplitude: float) -> float:
    """Same period by direct quadrature after the substitution sin(b/2) = k sin(phi)."""
    k = math.sin(amplitude / 2)
    val, _ = integrate.quad(lambda p: 1 / math.sqrt(1 - (k * math.sin(p)) ** 2), 0, math.pi / 2,
                            epsabs=1e-13, epsrel=1e-13)
    return 4 * val


def gaussian_seminorm_sq(s: float) -> float:
    """|| |D|^s exp(-v^2/2) ||_2^2 = Gamma(s + 1/2) (Plancherel with ghat = sqrt(2pi) e^{-xi^2/2})."""
    return special.gamma(s + 0.5)


def free_streaming_density(eps: float, k: float, t: float) -> float:
    """|rho_k(t)| for f = M(v)(1 + eps cos kx) under free streaming."""
    return 0.5 * eps * math.exp(-0.5 * k * k * t * t)


def gaussian_lp_norm(p: float) -> float:
    """|| exp(-v^2/2) ||_p = (sqrt(2 pi / p))^{1/p}."""
    return math.sqrt(2 * math.pi / p) ** (1 / p)


def bump_lp_norm(gamma: float, delta: float, p: float) -> float:
    """|| (gamma/delta) F(v/(gamma delta)) ||_p for F = exp(-v^2/2)."""
    return gamma ** (1 + 1 / p) * delta ** (1 / p - 1) * gaussian_lp_norm(p)


def harmonic_period(omega: float) -> float:
    return 2 * math.pi / omega


def gaussian_field_e0(k: float) -> complex:
    """E_k(0) = (i/k) int g for g the unit Gaussian."""
    return 1j / k


def dispersion_residual(c: complex, k: float, f1, v_lo=-12.0, v_hi=12.0) -> complex:
    """k^2 - int f0'(v)/(v - c) dv for Im c > 0 by adaptive quadrature."""
    re = integrate.quad(lambda v: (f1(v) / (v - c)).real, v_lo, v_hi, limit=400)[0]
    im = integrate.quad(lambda v: (f1(v) / (v - c)).imag, v_lo, v_hi, limit=400)[0]
    return k * k - (re + 1j * im)


def elliptic_oracle_table():
    """Pendulum periods for a few amplitudes from two independent formulas."""
    return [(a, pendulum_period(a), pendulum_period_quad(a)) for a in (0.1, 0.5, 1.0, 2.0)]


def trapezoid_exact_gaussian_mass(v_max: float) -> float:
    return math.erf(v_max / math.sqrt(2))


__all__ = [n for n in dir() if not n.startswith("_") and n not in ("math", "np", "integrate", "special")]
