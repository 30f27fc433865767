"""Broadband "thermal" pulses.

Each pulse has the spectral profile ``l(k) * v(k_hat . m_hat)`` with the
lineshape ``l(k) = 1 / (k sqrt(exp(beta hbar c k) - 1))`` and an angular
profile ``v`` peaked along the mean propagation direction ``m_hat``.  A
uniform mixture of such pulses over positions, directions and polarizations
has exactly the thermal first-order equal-point correlation function.

Wavenumber integrals run over ``u = k / k_T``; field integrals additionally
over ``x = k_hat . m_hat`` after the azimuth has been done analytically
(which brings in J0 and J1).
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .constants import EPS0, EV, HBAR_C
from .numerics import (
    Dyadic3,
    PropagationFrame,
    QuadratureSpec,
    bessel_j0,
    bessel_j1,
    erf,
    integrate_finite,
    integrate_semi_infinite,
    zeta,
)
from .thermal_field import (
    SPECTRAL_SPEC,
    CorrelationSample,
    ThermalEnvironment,
    energy_density,
    photon_density,
)

R_MAX_KT = 40.0
DEFAULT_GAMMA = 0.1
_NEGLIGIBLE_PROFILE = 1e-18


class ProfileKind(str, Enum):
    TRUNCATED_GAUSSIAN = "truncated_gaussian"
    TRUNCATED_PARABOLA = "truncated_parabola"
    UNIFORM_HEMISPHERE = "uniform_hemisphere"
    UNIFORM_SPHERE = "uniform_sphere"


@dataclass(frozen=True)
class AngularProfile:
    """Direction-spread function v(x), x = cos of the angle to m_hat.

    ``C[n]`` caches the moments ``int x^n v(x)^2 dx`` for n = 0..4.
    """

    kind: ProfileKind = ProfileKind.TRUNCATED_GAUSSIAN
    gamma: float = DEFAULT_GAMMA
    C: tuple = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "kind", ProfileKind(self.kind))
        if self.kind is ProfileKind.TRUNCATED_GAUSSIAN and not self.gamma > 0:
            raise ValueError(f"gamma must be positive, got {self.gamma!r}")
        object.__setattr__(self, "C", angular_moments(self))

    @classmethod
    def truncated_gaussian(cls, gamma=DEFAULT_GAMMA):
        return cls(ProfileKind.TRUNCATED_GAUSSIAN, gamma)

    @classmethod
    def truncated_parabola(cls):
        return cls(ProfileKind.TRUNCATED_PARABOLA, float("nan"))

    @classmethod
    def uniform_hemisphere(cls):
        return cls(ProfileKind.UNIFORM_HEMISPHERE, float("nan"))

    @classmethod
    def uniform_sphere(cls):
        return cls(ProfileKind.UNIFORM_SPHERE, float("nan"))

    @classmethod
    def from_name(cls, name, gamma=DEFAULT_GAMMA):
        kind = ProfileKind(name)
        if kind is ProfileKind.TRUNCATED_GAUSSIAN:
            return cls.truncated_gaussian(gamma)
        return cls(kind, float("nan"))

    @property
    def support(self):
        return (-1.0, 1.0) if self.kind is ProfileKind.UNIFORM_SPHERE else (0.0, 1.0)

    @property
    def effective_support(self):
        """Support trimmed to where v exceeds 1e-18 (only differs for the Gaussian)."""
        lo, hi = self.support
        if self.kind is ProfileKind.TRUNCATED_GAUSSIAN:
            lo = max(lo, 1.0 - self.gamma * math.sqrt(-math.log(_NEGLIGIBLE_PROFILE)))
        return lo, hi

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        lo, hi = self.support
        inside = (x >= lo) & (x <= hi)
        if self.kind is ProfileKind.TRUNCATED_GAUSSIAN:
            val = np.exp(-((x - 1.0) / self.gamma) ** 2)
        elif self.kind is ProfileKind.TRUNCATED_PARABOLA:
            val = 1.0 - (x - 1.0) ** 2
        else:
            val = np.ones_like(x)
        return np.where(inside, val, 0.0)

    @property
    def label(self):
        if self.kind is ProfileKind.TRUNCATED_GAUSSIAN:
            return f"{self.kind.value}(gamma={self.gamma:g})"
        return self.kind.value


def angular_moments(profile: AngularProfile, spec: QuadratureSpec | None = None):
    """C_0..C_4 by adaptive quadrature over the profile's support."""
    spec = spec or QuadratureSpec(relative_tolerance=1e-13, absolute_tolerance=0.0)
    lo, hi = profile.effective_support
    powers = np.arange(5)

    def integrand(x):
        v = profile(x)
        return (x[:, None] ** powers[None, :]) * (v * v)[:, None]

    vals = integrate_finite(integrand, lo, hi, spec).value
    return tuple(float(c) for c in vals)


# --- lineshape ---------------------------------------------------------------

def lineshape_l(k, env: ThermalEnvironment):
    """l(k) = k^-1 (exp(beta hbar c k) - 1)^-1/2, with the small-k series below u = 1e-6."""
    k = np.asarray(k, dtype=float)
    if np.any(k <= 0):
        raise ValueError("lineshape_l needs k > 0")
    u = k / env.k_T
    out = np.where(
        u < 1e-6,
        k ** -1.5 * math.sqrt(env.k_T) * (1.0 - u / 4.0),
        1.0 / (k * np.sqrt(np.expm1(np.maximum(u, 1e-300)))),
    )
    return out if out.ndim else float(out)


def lineshape_moment(n: int, env: ThermalEnvironment, spec: QuadratureSpec = SPECTRAL_SPEC) -> float:
    """int_0^inf k^n l(k)^2 dk by quadrature of the lineshape itself."""
    kT = env.k_T

    def integrand(u):
        k = u * kT
        return k ** n * lineshape_l(k, env) ** 2 * kT

    return integrate_semi_infinite(integrand, spec).value


def lineshape_moment_closed_form(n: int, env: ThermalEnvironment) -> float:
    """k_T^(n-1) Gamma(n-1) zeta(n-1), valid for n = 3..6."""
    return env.k_T ** (n - 1) * math.gamma(n - 1) * zeta(n - 1)


# --- pulse and mixture specs ---------------------------------------------------

@dataclass(frozen=True)
class ThermalPulseSpec:
    env: ThermalEnvironment = field(default_factory=ThermalEnvironment)
    profile: AngularProfile = field(default_factory=AngularProfile)
    alpha: complex = 1.0
    frame: PropagationFrame = field(default_factory=PropagationFrame.standard)

    @property
    def C(self):
        return self.profile.C

    @property
    def normalization(self) -> float:
        """N_b from the closed form int k^4 l^2 dk = 2 zeta(3) k_T^3."""
        C0, _, C2, _, _ = self.C
        return (math.pi * (C0 + C2) * 2 * zeta(3) * self.env.k_T ** 3) ** -0.5

    def normalization_quadrature(self) -> float:
        C0, _, C2, _, _ = self.C
        return (math.pi * (C0 + C2) * lineshape_moment(4, self.env)) ** -0.5

    def spectral_weight(self, k, cos_theta, phi):
        """sum over helicities of |f(k)|^2 in pulse-frame spherical coordinates."""
        k = np.asarray(k, dtype=float)
        x = np.asarray(cos_theta, dtype=float)
        s2 = 1.0 - x * x
        v = self.profile(x)
        return (self.normalization ** 2 * lineshape_l(k, self.env) ** 2 * k * k
                * (x * x + s2 * np.sin(phi) ** 2) * v * v)


@dataclass(frozen=True)
class MixtureSpec:
    """Uniform weighting density ``p`` (1/m^3) of a thermal-pulse mixture.

    ``V_script`` is the volume with ``int ds p = 8 pi^2 p = 1 / V_script``.
    """

    p: float
    V_script: float
    alpha_sq: float
    p_alpha_sq_quadrature: float
    p_alpha_sq_closed_form: float
    p_alpha_sq_alternative_closed_form: float

    @property
    def p_alpha_sq(self):
        return self.p * self.alpha_sq

    @property
    def alternative_discrepancy_factor(self):
        return self.p_alpha_sq_alternative_closed_form / self.p_alpha_sq_closed_form


class ConsistencyError(ArithmeticError):
    pass


def mixture_density_constraint(env: ThermalEnvironment, alpha_sq: float = 1.0,
                               rtol: float = 1e-8) -> MixtureSpec:
    """The product p |alpha|^2 that makes the mixture match thermal light.

    Computed from ``(1/8 pi^4) int k^2/(exp(beta hbar c k) - 1) dk``, then
    checked against the thermal photon and energy densities.  The alternative
    closed form ``4 zeta(3) k_T^3 / pi^4`` is carried along for reporting; it
    is 16 times the integral.
    """
    if not alpha_sq > 0:
        raise ValueError("alpha_sq must be positive")
    kT = env.k_T
    integral = integrate_semi_infinite(lambda u: u ** 2 / np.expm1(u), SPECTRAL_SPEC).value
    p_alpha_sq = kT ** 3 * integral / (8 * math.pi ** 4)
    closed = zeta(3) * kT ** 3 / (4 * math.pi ** 4)
    alternative = 4 * zeta(3) * kT ** 3 / math.pi ** 4

    n_mix = 8 * math.pi ** 2 * p_alpha_sq
    if abs(n_mix / photon_density(env) - 1) > rtol:
        raise ConsistencyError(f"mixture photon density {n_mix:.6e} != thermal {photon_density(env):.6e}")
    e_mix = n_mix * energy_mean(ThermalPulseSpec(env, AngularProfile.uniform_sphere())) * EV
    if abs(e_mix / energy_density(env) - 1) > rtol:
        raise ConsistencyError(f"mixture energy density {e_mix:.6e} != thermal {energy_density(env):.6e}")

    p = p_alpha_sq / alpha_sq
    return MixtureSpec(p, 1.0 / (8 * math.pi ** 2 * p), alpha_sq, p_alpha_sq, closed, alternative)


def g1_thermal_pulse_mixture(tau, env: ThermalEnvironment, profile: AngularProfile,
                             mixture: MixtureSpec, spec: QuadratureSpec = SPECTRAL_SPEC) -> CorrelationSample:
    """delta_ij coefficient of the mixture's equal-point correlation at delay ``tau``.

    Assembled from the pulse normalization and the angular moments,
    ``(2pi)^3 |alpha N|^2 p (hbar c / 16 pi^3 eps0) pi^2 (C0 + C2) (8 pi / 3) int k^5 l^2 e^{-ick tau} dk``,
    so the profile drops out only if N_b and the moments are consistent.
    """
    pulse = ThermalPulseSpec(env, profile)
    C0, _, C2, _, _ = profile.C
    N = pulse.normalization_quadrature()
    kT = env.k_T
    s = float(tau) / env.coherence_time

    def integrand(u):
        k = u * kT
        return k ** 5 * lineshape_l(k, env) ** 2 * np.exp(-1j * s * u) * kT

    radial = integrate_semi_infinite(integrand, spec).value
    pref = ((2 * math.pi) ** 3 * mixture.p * mixture.alpha_sq * N ** 2 * HBAR_C / (16 * math.pi ** 3 * EPS0)
            * math.pi ** 2 * (C0 + C2) * 8 * math.pi / 3)
    return CorrelationSample(float(tau), complex(pref * radial))


# --- energy and momentum statistics ------------------------------------------------

def _k5_over_k4(env, method):
    if method == "closed_form":
        return math.pi ** 4 / (30 * zeta(3)) * env.k_T
    return lineshape_moment(5, env) / lineshape_moment(4, env)


def _k6_over_k4(env, method):
    if method == "closed_form":
        return 12 * zeta(5) / zeta(3) * env.k_T ** 2
    return lineshape_moment(6, env) / lineshape_moment(4, env)


def _check_method(method):
    if method not in ("closed_form", "quadrature"):
        raise ValueError(f"method must be 'closed_form' or 'quadrature', got {method!r}")


def energy_mean(spec: ThermalPulseSpec, method="closed_form") -> float:
    """Mean pulse energy in eV for |alpha|^2 = 1."""
    _check_method(method)
    return HBAR_C * _k5_over_k4(spec.env, method) / EV


def energy_std(spec: ThermalPulseSpec, method="closed_form") -> float:
    """Energy standard deviation in eV for |alpha| = 1."""
    _check_method(method)
    return HBAR_C * math.sqrt(_k6_over_k4(spec.env, method)) / EV


def momentum_mean(spec: ThermalPulseSpec, method="closed_form") -> np.ndarray:
    """Mean momentum (eV/c, |alpha|^2 = 1) as a lab-frame vector along m_hat."""
    _check_method(method)
    C0, C1, C2, C3, _ = spec.C
    mag = (C1 + C3) / (C0 + C2) * HBAR_C * _k5_over_k4(spec.env, method) / EV
    return mag * spec.frame.m_hat


def momentum_mean_erf(gamma: float, env: ThermalEnvironment) -> float:
    """Closed-form |<P>| (eV/c) for the truncated Gaussian profile.

    Evaluates the error-function expression with ``exp(-8/gamma^2)`` folded
    in so small ``gamma`` does not overflow.  The expression integrates the
    Gaussian over the full x range [-1, 1]; the truncation at x = 0 changes
    it by terms of order exp(-2/gamma^2).
    """
    g = float(gamma)
    g2 = g * g
    ef = erf(2 * math.sqrt(2) / g)
    s2p = math.sqrt(2 * math.pi)
    num = s2p * (3 * g2 + 8) * ef - 2 * g * (g2 + 8) + 2 * g * (g2 + 4) * math.exp(-8 / g2)
    den = s2p * (g2 + 8) * ef - 8 * g
    return math.pi ** 4 * num / (30 * zeta(3) * den) * env.kT / EV


def momentum_variance_coefficients(C, convention="reduced"):
    """Unitless (m, n, u) coefficients multiplying hbar^2 (pi/4) N^2 int k^6 l^2.

    ``convention="reduced"`` uses ``2(C4 + C2)`` along m_hat, half the
    direct value.  ``"direct"`` uses ``4(C4 + C2)``, which is what a
    direct angular integration of ``k_m^2 (x^2 + (1 - x^2) sin^2 phi)`` gives and
    makes the trace equal the energy variance over c^2.
    """
    C0, _, C2, _, C4 = C
    if convention == "reduced":
        mm = 2 * (C4 + C2)
    elif convention == "direct":
        mm = 4 * (C4 + C2)
    else:
        raise ValueError(f"unknown convention {convention!r}")
    return mm, C0 + 2 * C2 - 3 * C4, 3 * C0 - 2 * C2 - C4


def momentum_variance(spec: ThermalPulseSpec, method="closed_form", convention="reduced") -> Dyadic3:
    """Momentum variance dyadic in (eV/c)^2 for |alpha|^2 = 1; diagonal in (m, n, u)."""
    _check_method(method)
    C0, _, C2, _, _ = spec.C
    # hbar^2 (pi/4) N^2 int k^6 l^2 = (hbar c)^2 <k^2> / (4 (C0 + C2)), in (eV)^2
    scale = HBAR_C ** 2 * _k6_over_k4(spec.env, method) / (4 * (C0 + C2)) / EV ** 2
    mm, nn, uu = (scale * c for c in momentum_variance_coefficients(spec.C, convention))
    if min(mm, nn, uu) < 0:
        raise ConsistencyError(f"negative momentum variance component: {(mm, nn, uu)}")
    return Dyadic3.from_frame_diagonal(spec.frame, mm, nn, uu)


def momentum_std(spec: ThermalPulseSpec, method="closed_form", convention="reduced") -> Dyadic3:
    """Componentwise square root of the (frame-diagonal) variance, eV/c for |alpha| = 1."""
    return momentum_variance(spec, method, convention).sqrt_in_frame(spec.frame)


@dataclass(frozen=True)
class MomentReport:
    energy_mean: float
    energy_std: float
    momentum_mean: np.ndarray
    momentum_variance: Dyadic3
    momentum_std: Dyadic3
    frame: PropagationFrame

    def variance_mnu(self):
        d = self.momentum_variance.in_frame(self.frame)
        return d[2, 2], d[0, 0], d[1, 1]

    def std_mnu(self):
        d = self.momentum_std.in_frame(self.frame)
        return d[2, 2], d[0, 0], d[1, 1]

    def momentum_mean_mnu(self):
        f = self.frame
        p = self.momentum_mean
        return float(p @ f.m_hat), float(p @ f.n_hat), float(p @ f.u_hat)


def moment_report(spec: ThermalPulseSpec, method="closed_form", convention="reduced") -> MomentReport:
    return MomentReport(
        energy_mean(spec, method),
        energy_std(spec, method),
        momentum_mean(spec, method),
        momentum_variance(spec, method, convention),
        momentum_std(spec, method, convention),
        spec.frame,
    )


# --- electric field ----------------------------------------------------------------

@dataclass(frozen=True)
class FieldSample:
    """Positive-frequency field of one pulse at a point relative to its centre.

    ``E_u`` and ``E_m`` are complex components in V/m along u_hat and m_hat;
    there is no n_hat component.
    """

    R: float
    Theta: float
    Phi: float
    t: float
    E_u: complex
    E_m: complex

    @property
    def intensity(self):
        return abs(self.E_u) ** 2 + abs(self.E_m) ** 2

    def vector(self, frame: PropagationFrame):
        return self.E_u * frame.u_hat + self.E_m * frame.m_hat


class OutOfRangeError(ValueError):
    pass


# the field amplitude falls off only like u^3.5 exp(-u/2)
FIELD_U_MAX = 64.0
_FIELD_BLOCK = 512
FIELD_INNER_SPEC = QuadratureSpec(relative_tolerance=1e-8, absolute_tolerance=0.0, max_subdivisions=20000)
FIELD_OUTER_SPEC = QuadratureSpec(relative_tolerance=1e-7, absolute_tolerance=0.0, max_subdivisions=20000)


def _with_floor(spec: QuadratureSpec, scale: float) -> QuadratureSpec:
    floor = spec.relative_tolerance * scale
    return QuadratureSpec(spec.relative_tolerance, max(spec.absolute_tolerance, floor), spec.max_subdivisions)


def _field_pair(spec: ThermalPulseSpec, R, Theta, t, inner_spec, outer_spec, r_max_kt):
    """(E_u, E_m / sin Phi) at (R, Theta, t).

    The azimuthal integral is done analytically (Bessel J0, J1); the
    remaining double integral over u = k/k_T and theta is nested adaptive
    quadrature, the inner theta integral being vector-valued over blocks of
    outer nodes.
    """
    env = spec.env
    kT = env.k_T
    if R < 0:
        raise ValueError("R must be non-negative")
    if R * kT > r_max_kt:
        raise OutOfRangeError(f"k_T R = {R * kT:.3g} exceeds the supported maximum {r_max_kt:g}")
    profile = spec.profile
    cos_T = math.cos(Theta)
    sin_T = math.sin(Theta)
    lo, hi = profile.effective_support
    N = spec.normalization
    t_scaled = float(t) / env.coherence_time
    kR = kT * R

    # inner integral in theta (x = cos theta) keeps sqrt(1 - x^2) smooth at x = +-1
    th_lo = math.acos(hi)
    th_hi = math.acos(lo)

    # Tolerances are relative to the field scale of the pulse (the k R = 0
    # integrals), not to the local value, which far from the centre comes
    # out of near-total cancellation.
    def amplitude(u):
        k = u * kT
        return k ** 2 * np.sqrt(HBAR_C * k / (16 * math.pi ** 3 * EPS0)) * k * lineshape_l(k, env) * kT

    v_scale = integrate_finite(lambda th: profile(np.cos(th)) * np.sin(th), th_lo, th_hi).value
    a_scale = integrate_semi_infinite(amplitude, u_max=FIELD_U_MAX).value
    inner_spec = _with_floor(inner_spec, v_scale)
    outer_spec = _with_floor(outer_spec, v_scale * a_scale)

    def inner_group(kr):
        def f(th):
            x = np.cos(th)
            s = np.sin(th)
            v = profile(x) * s
            phase = np.exp(1j * np.outer(x * cos_T, kr))
            arg = np.outer(s * sin_T, kr)
            eu = (v * x)[:, None] * phase * bessel_j0(arg)
            em = (v * s)[:, None] * phase * bessel_j1(arg)
            return np.stack((eu, em), axis=-1)

        # seed the subdivision with about one panel per oscillation period
        n_osc = int(math.ceil(float(kr.max()) * (abs(cos_T) + sin_T) * (th_hi - th_lo) / (2 * math.pi)))
        bps = np.linspace(th_lo, th_hi, min(n_osc, 4000) + 1)[1:-1] if n_osc > 1 else ()
        return integrate_finite(f, th_lo, th_hi, inner_spec, breakpoints=bps).value

    def inner(u):
        kr = u * kR  # k R at every outer node
        out = np.empty((u.size, 2), dtype=complex)
        # nodes with similar k R share a subdivision; blocks bound the memory footprint
        band = np.floor(np.log2(1.0 + kr)).astype(int)
        for b in np.unique(band):
            idx = np.flatnonzero(band == b)
            for start in range(0, idx.size, _FIELD_BLOCK):
                sel = idx[start:start + _FIELD_BLOCK]
                out[sel] = inner_group(kr[sel])
        return out

    def outer(u):
        return (amplitude(u) * np.exp(-1j * t_scaled * u))[:, None] * inner(u)

    n_osc_outer = int(math.ceil(FIELD_U_MAX * (kR + abs(t_scaled)) / (2 * math.pi)))
    bps = np.linspace(0.0, FIELD_U_MAX, min(n_osc_outer, 2000) + 1)[1:-1] if n_osc_outer > 1 else ()
    total = integrate_semi_infinite(outer, outer_spec, u_max=FIELD_U_MAX, breakpoints=bps).value
    pref = 2 * math.pi * spec.alpha * N
    return 1j * pref * total[0], pref * total[1]


def field_components(spec: ThermalPulseSpec, R, Theta, Phi, t=0.0,
                     inner_spec: QuadratureSpec = FIELD_INNER_SPEC,
                     outer_spec: QuadratureSpec = FIELD_OUTER_SPEC,
                     r_max_kt: float = R_MAX_KT) -> FieldSample:
    """Field of a pulse at ``R = R (sin T cos P n + sin T sin P u + cos T m)``.

    ``R`` in metres, angles in radians, ``t`` in seconds.
    """
    E_u, E_m1 = _field_pair(spec, float(R), float(Theta), t, inner_spec, outer_spec, r_max_kt)
    return FieldSample(float(R), float(Theta), float(Phi), float(t), complex(E_u),
                       complex(E_m1 * math.sin(Phi)))


def field_vector(spec: ThermalPulseSpec, r_vec, t=0.0, **kwargs) -> np.ndarray:
    """Complex lab-frame field vector at lab position ``r_vec`` (relative to the pulse centre)."""
    R, Theta, Phi = spec.frame.spherical(r_vec)
    return field_components(spec, R, Theta, Phi, t, **kwargs).vector(spec.frame)


@dataclass(frozen=True)
class IntensityGrid:
    """Intensity sampled on a spherical (R, Theta, Phi) grid.

    ``A`` and ``B`` hold the Phi-independent pieces of
    ``I = A(R, Theta) + sin^2(Phi) B(R, Theta)``; ``R`` is in units of 1/k_T.
    """

    R_kT: np.ndarray
    Theta: np.ndarray
    Phi: np.ndarray
    A: np.ndarray
    B: np.ndarray
    t: float

    @property
    def intensity(self):
        return self.A[:, :, None] + np.sin(self.Phi)[None, None, :] ** 2 * self.B[:, :, None]

    @property
    def max(self):
        return float(self.intensity.max())

    def cartesian_kT(self):
        """Grid point coordinates (n, u, m components) in units of 1/k_T, shape (nR, nT, nP, 3)."""
        R = self.R_kT[:, None, None]
        T = self.Theta[None, :, None]
        P = self.Phi[None, None, :]
        x = R * np.sin(T) * np.cos(P)
        y = R * np.sin(T) * np.sin(P)
        z = R * np.cos(T) * np.ones_like(P)
        return np.stack(np.broadcast_arrays(x, y, z), axis=-1)

    def half_max_region(self):
        """Grid points at or above I_max/2 that have a grid neighbour below it.

        Neighbours are taken along each grid axis; Phi wraps around when the
        grid spans a full turn.  Returns an (n, 3) array of (x, y, z) in 1/k_T.
        """
        I = self.intensity
        above = I >= 0.5 * I.max()
        edge = np.zeros_like(above)
        for axis in range(3):
            wrap = axis == 2 and self.Phi.size > 2 and np.isclose(
                self.Phi[-1] - self.Phi[0] + (self.Phi[1] - self.Phi[0]), 2 * math.pi)
            for shift in (1, -1):
                nb = np.roll(above, shift, axis=axis)
                if not wrap:
                    idx = [slice(None)] * 3
                    idx[axis] = 0 if shift == 1 else -1
                    nb[tuple(idx)] = above[tuple(idx)]
                edge |= above & ~nb
        return self.cartesian_kT()[edge]


def thread_count() -> int:
    """Worker threads for grid evaluations: LUMEN_MIX_THREADS, else the CPU count."""
    raw = os.environ.get("LUMEN_MIX_THREADS", "").strip()
    if raw:
        try:
            n = int(raw)
        except ValueError:
            raise ValueError(f"LUMEN_MIX_THREADS must be a positive integer, got {raw!r}") from None
        if n < 1:
            raise ValueError(f"LUMEN_MIX_THREADS must be a positive integer, got {raw!r}")
        return n
    return os.cpu_count() or 1


def parallel_map(fn, items):
    """``list(map(fn, items))`` on a thread pool; results keep the input order."""
    items = list(items)
    n = min(thread_count(), len(items))
    if n <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


def field_line(spec: ThermalPulseSpec, points, t=0.0, **kwargs):
    """field_components at a list of (R, Theta, Phi) points, evaluated in parallel."""
    return parallel_map(lambda p: field_components(spec, *p, t=t, **kwargs), points)


def intensity_profile(spec: ThermalPulseSpec, R_kT, Theta, Phi, t=0.0,
                      inner_spec: QuadratureSpec = FIELD_INNER_SPEC,
                      outer_spec: QuadratureSpec = FIELD_OUTER_SPEC,
                      r_max_kt: float = R_MAX_KT) -> IntensityGrid:
    """Intensity on a spherical grid, computing only the two Phi-independent planes."""
    R_kT = np.asarray(R_kT, dtype=float)
    Theta = np.asarray(Theta, dtype=float)
    Phi = np.asarray(Phi, dtype=float)
    if np.any(R_kT > r_max_kt):
        raise OutOfRangeError(f"grid reaches k_T R = {R_kT.max():g} > {r_max_kt:g}")
    kT = spec.env.k_T
    # every R = 0 point is the same point; compute it once
    tasks = [(r, th) for r in R_kT for th in (Theta if r > 0 else Theta[:1])]

    def one(task):
        eu, em1 = _field_pair(spec, task[0] / kT, task[1], t, inner_spec, outer_spec, r_max_kt)
        return abs(eu) ** 2, abs(em1) ** 2

    values = dict(zip(tasks, parallel_map(one, tasks)))
    A = np.empty((R_kT.size, Theta.size))
    B = np.empty_like(A)
    for i, r in enumerate(R_kT):
        for j, th in enumerate(Theta):
            A[i, j], B[i, j] = values[(r, th) if r > 0 else (r, Theta[0])]
    return IntensityGrid(R_kT, Theta, Phi, A, B, float(t))
