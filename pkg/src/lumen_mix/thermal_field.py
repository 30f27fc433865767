"""Blackbody reference quantities.

Every spectral integral is done in the dimensionless variable
``u = beta*hbar*c*k = k / k_T``; SI units are restored by powers of the
thermal wavenumber ``k_T = k_B T / (hbar c)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .constants import EPS0, HBAR, HBAR_C, K_B, SOLAR_TEMPERATURE
from .numerics import QuadratureSpec, integrate_semi_infinite, zeta

# tight enough that two independent quadrature paths agree to ~1e-12
SPECTRAL_SPEC = QuadratureSpec(relative_tolerance=1e-13, absolute_tolerance=1e-16)


@dataclass(frozen=True)
class ThermalEnvironment:
    temperature: float = SOLAR_TEMPERATURE
    beta: float = field(init=False)
    thermal_wavenumber: float = field(init=False)
    coherence_time: float = field(init=False)

    def __post_init__(self):
        T = float(self.temperature)
        if not (T > 0 and math.isfinite(T)):
            raise ValueError(f"temperature must be positive and finite, got {self.temperature!r}")
        kT = K_B * T
        object.__setattr__(self, "beta", 1.0 / kT)
        object.__setattr__(self, "thermal_wavenumber", kT / HBAR_C)
        object.__setattr__(self, "coherence_time", HBAR / kT)

    @property
    def kT(self):
        """k_B T in joules."""
        return K_B * self.temperature

    @property
    def k_T(self):
        return self.thermal_wavenumber


@dataclass(frozen=True)
class CorrelationSample:
    """delta_ij coefficient of the equal-point first-order correlation (V^2/m^2)."""

    tau: float
    value: complex


def _u(k, env):
    return np.asarray(k, dtype=float) / env.thermal_wavenumber


def planck_occupancy(k, env: ThermalEnvironment):
    """Mean photon number 1/(exp(beta hbar c k) - 1) of a mode with wavenumber k."""
    k = np.asarray(k, dtype=float)
    if np.any(k <= 0):
        raise ValueError("planck_occupancy needs k > 0")
    out = 1.0 / np.expm1(_u(k, env))
    return out if out.ndim else float(out)


def g1_prefactor(env: ThermalEnvironment):
    """hbar c k_T^4 / (6 pi^2 eps0): converts the u-integral of the thermal G1 to V^2/m^2."""
    return HBAR_C * env.k_T ** 4 / (6 * math.pi ** 2 * EPS0)


def g1_thermal(tau, env: ThermalEnvironment, spec: QuadratureSpec = SPECTRAL_SPEC) -> CorrelationSample:
    """Thermal first-order correlation at delay ``tau`` (seconds).

    The integrand ``u^3 exp(-i u s)/(exp(u) - 1)`` with ``s = tau / coherence_time``.
    """
    tau = float(tau)
    if not math.isfinite(tau):
        raise ValueError("tau must be finite")
    s = tau / env.coherence_time
    if s == 0.0:
        integrand = lambda u: u ** 3 / np.expm1(u)
    else:
        integrand = lambda u: u ** 3 * np.exp(-1j * s * u) / np.expm1(u)
    res = integrate_semi_infinite(integrand, spec)
    return CorrelationSample(tau, complex(res.value) * g1_prefactor(env))


def g1_thermal_closed_form_zero(env: ThermalEnvironment) -> float:
    return g1_prefactor(env) * math.gamma(4) * zeta(4)


def photon_density(env: ThermalEnvironment) -> float:
    """Blackbody photon number density (1/m^3), both polarizations."""
    return 2 * zeta(3) / math.pi ** 2 * env.k_T ** 3


def energy_density(env: ThermalEnvironment) -> float:
    """Blackbody energy density (J/m^3)."""
    return math.pi ** 2 / 15 * env.kT * env.k_T ** 3


def photon_density_quadrature(env: ThermalEnvironment, spec: QuadratureSpec = SPECTRAL_SPEC) -> float:
    val = integrate_semi_infinite(lambda u: u ** 2 / np.expm1(u), spec).value
    return val * env.k_T ** 3 / math.pi ** 2


def energy_density_quadrature(env: ThermalEnvironment, spec: QuadratureSpec = SPECTRAL_SPEC) -> float:
    val = integrate_semi_infinite(lambda u: u ** 3 / np.expm1(u), spec).value
    return val * env.kT * env.k_T ** 3 / math.pi ** 2


def coherence_time(env: ThermalEnvironment) -> float:
    """hbar / (k_B T) in seconds."""
    return env.coherence_time


def g1_abs_fwhm(env: ThermalEnvironment) -> float:
    """Full width at half maximum of |g1(tau)| (seconds); diagnostic only."""
    from scipy.optimize import brentq

    g0 = abs(g1_thermal(0.0, env).value)

    def excess(s):
        return abs(g1_thermal(s * env.coherence_time, env).value) / g0 - 0.5

    s_half = brentq(excess, 1e-3, 10.0, xtol=1e-12)
    return 2 * s_half * env.coherence_time


def thermal_integral(power: int, spec: QuadratureSpec = SPECTRAL_SPEC) -> float:
    """Quadrature of u^power / (exp(u) - 1) over [0, inf)."""
    return integrate_semi_infinite(lambda u: u ** power / np.expm1(u), spec).value


def thermal_integral_closed_form(power: int) -> float:
    return math.gamma(power + 1) * zeta(power + 1)


__all__ = [
    "ThermalEnvironment",
    "CorrelationSample",
    "planck_occupancy",
    "g1_thermal",
    "g1_thermal_closed_form_zero",
    "g1_prefactor",
    "photon_density",
    "energy_density",
    "photon_density_quadrature",
    "energy_density_quadrature",
    "coherence_time",
    "g1_abs_fwhm",
    "thermal_integral",
    "thermal_integral_closed_form",
]
