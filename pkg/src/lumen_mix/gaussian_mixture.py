"""Mixtures of Gaussian-lineshape pulses.

A pulse of this family has the spectral profile
``exp(-|k - k_o|^2 / (2 sigma^2))``.  Averaging the pulse correlation over
positions, polarizations and directions leaves a kernel ``M(k, k_o)``, and
the mixture reproduces the thermal correlation exactly when a nonnegative
weight density ``p(k_o)`` solves ``int p(k_o) M(k, k_o) dk_o = nbar(k)/|alpha|^2``.
That condition is discretized here and solved by nonnegative least squares.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .constants import C, EPS0, HBAR_C
from .nnls import nnls
from .numerics import PropagationFrame, QuadratureSpec, integrate_finite, levi_civita
from .thermal_field import CorrelationSample, ThermalEnvironment, planck_occupancy

FEASIBILITY_THRESHOLD = 1e-3
DEFAULT_GRID_POINTS = 240
DEFAULT_GRID_SPAN = (0.02, 12.0)  # in units of k_T

_SQRT_PI = math.sqrt(math.pi)
_KERNEL_WINDOW = 10.0  # half-width in sigma beyond which M is below exp(-100)
_SERIES_BELOW = 1.0


def fwhm_thz_to_sigma(fwhm_thz: float) -> float:
    """Lineshape width sigma (1/m) for a spectral intensity FWHM in THz.

    The FWHM is that of ``|L|^2 = exp(-(k - k_o)^2 / sigma^2)``, i.e.
    ``2 sigma sqrt(ln 2)`` in wavenumber, converted to ordinary frequency.
    """
    if not fwhm_thz > 0:
        raise ValueError("FWHM must be positive")
    return 2 * math.pi * fwhm_thz * 1e12 / (2 * C * math.sqrt(math.log(2)))


def sigma_to_fwhm_thz(sigma: float) -> float:
    return C * 2 * sigma * math.sqrt(math.log(2)) / (2 * math.pi) / 1e12


@dataclass(frozen=True)
class GaussianPulseSpec:
    sigma: float
    k_o: float
    frame: PropagationFrame = field(default_factory=PropagationFrame.standard)
    alpha: complex = 1.0

    def __post_init__(self):
        if not (self.sigma > 0 and self.k_o > 0):
            raise ValueError("sigma and k_o must be positive")

    @property
    def normalization(self) -> float:
        return (math.pi * _SQRT_PI * self.sigma ** 3 * (self.k_o ** 2 + self.sigma ** 2)) ** -0.5

    def spectral_weight(self, k_vec):
        """sum over helicities of |f(k)|^2 at lab-frame wavevectors ``k_vec`` (shape (..., 3))."""
        k_vec = np.asarray(k_vec, dtype=float)
        k_o_vec = self.k_o * self.frame.m_hat
        d2 = np.sum((k_vec - k_o_vec) ** 2, axis=-1)
        cross = np.cross(k_vec, self.frame.n_hat)
        return self.normalization ** 2 * np.exp(-d2 / self.sigma ** 2) * np.sum(cross ** 2, axis=-1)


@dataclass(frozen=True)
class WeightSolution:
    sigma: float
    k_grid: np.ndarray
    k_o_grid: np.ndarray
    cell_widths: np.ndarray
    p_values: np.ndarray
    relative_residual: float
    feasible: bool
    alpha_sq: float = 1.0
    threshold: float = FEASIBILITY_THRESHOLD

    @property
    def fwhm_thz(self):
        return sigma_to_fwhm_thz(self.sigma)


# --- kernel ------------------------------------------------------------------

def _odd_series(a):
    """(f(a) - f(-a)) / a with f(a) = (a^2 - a + 1) e^a, summed as
    sum_{m>=1} 8 m^2 a^(2m) / (2m+1)!  (every term positive)."""
    a2 = a * a
    term = np.ones_like(a)  # a^(2m) / (2m+1)! at m = 0 is 1
    total = np.zeros_like(a)
    for m in range(1, 20):
        term = term * a2 / ((2 * m) * (2 * m + 1))
        total = total + 8 * m * m * term
    return total


def kernel_M(k, k_o, sigma):
    """Reduced Gaussian-mixture kernel M(k, k_o); broadcasts over k and k_o.

    Large ``a = 2 k k_o / sigma^2`` is handled by factoring out
    ``exp(-((k - k_o)/sigma)^2)`` so nothing overflows; small ``a`` uses the
    positive-term series of the bracket, which also avoids cancellation.
    """
    k = np.asarray(k, dtype=float)
    k_o = np.asarray(k_o, dtype=float)
    if np.any(k <= 0) or np.any(k_o <= 0) or not sigma > 0:
        raise ValueError("kernel_M needs k > 0, k_o > 0, sigma > 0")
    k, k_o = np.broadcast_arrays(k, k_o)
    s2 = sigma * sigma
    a = 2 * k * k_o / s2
    pref = 4 * math.pi ** 3 * _SQRT_PI * sigma / (s2 + k_o ** 2)
    out = np.empty(a.shape)

    small = a < _SERIES_BELOW
    if np.any(small):
        ks, kos, as_ = k[small], k_o[small], a[small]
        D = np.exp(-(ks ** 2 + kos ** 2) / s2)
        out[small] = pref[small] * D * _odd_series(as_)
    big = ~small
    if np.any(big):
        kb, kob, ab = k[big], k_o[big], a[big]
        e_minus = np.exp(-((kb - kob) / sigma) ** 2)
        bracket = (ab * ab - ab + 1) - (ab * ab + ab + 1) * np.exp(-2 * ab)
        out[big] = pref[big] * e_minus * bracket / ab
    return out if out.ndim else float(out)


def angular_oracle_Tij(k_vec, m_hat):
    """Closed form of the polarization-angle integral of (i.(k x n))(j.(k x n)).

    ``pi (delta_ij k^2 - k_i k_j) - pi eps_ine eps_jsv k_e k_s m_n m_v``.
    """
    k_vec = np.asarray(k_vec, dtype=float)
    m_hat = np.asarray(m_hat, dtype=float)
    eps = levi_civita()
    k2 = k_vec @ k_vec
    first = math.pi * (np.eye(3) * k2 - np.outer(k_vec, k_vec))
    # eps_{i e n} k_e m_n = (k x m)_i
    kxm = np.einsum("ien,e,n->i", eps, k_vec, m_hat)
    return first - math.pi * np.outer(kxm, kxm)


def psi_integral_Tij(k_vec, m_hat, n_points=4096):
    """Trapezoid rule over the polarization angle for the same dyadic.

    The integrand is a trigonometric polynomial of degree 2, so the periodic
    trapezoid rule is exact once ``n_points > 2``.
    """
    frame = PropagationFrame.from_vectors(m_hat)
    psi = 2 * math.pi * np.arange(n_points) / n_points
    n = np.cos(psi)[:, None] * frame.n_hat + np.sin(psi)[:, None] * frame.u_hat
    v = np.cross(np.asarray(k_vec, dtype=float), n)
    return (2 * math.pi / n_points) * np.einsum("pi,pj->ij", v, v)


# --- discretized inversion -----------------------------------------------------

def default_grid(env: ThermalEnvironment, n_points=DEFAULT_GRID_POINTS, span=DEFAULT_GRID_SPAN):
    return np.geomspace(span[0], span[1], n_points) * env.k_T


def cell_edges(k_o_grid):
    """Cell boundaries for a piecewise-constant weight density.

    Interior edges are geometric midpoints of neighbouring nodes; the first
    cell reaches down to k = 0 and the last extends half a grid ratio past the
    final node.
    """
    g = np.asarray(k_o_grid, dtype=float)
    if g.ndim != 1 or g.size < 2 or np.any(np.diff(g) <= 0) or g[0] <= 0:
        raise ValueError("k_o_grid must be positive and strictly increasing with at least two points")
    inner = np.sqrt(g[:-1] * g[1:])
    return np.concatenate(([0.0], inner, [g[-1] * math.sqrt(g[-1] / g[-2])]))


_GL8_X, _GL8_W = np.polynomial.legendre.leggauss(8)


def system_matrix(k_grid, k_o_grid, sigma, window=_KERNEL_WINDOW):
    """A_ij = integral of M(k_i, k_o) over the j-th k_o cell.

    Each row is integrated over ``k_i +- window*sigma`` (outside it the kernel
    is below exp(-window^2)) with 8-point Gauss-Legendre panels no wider than
    sigma/2, split at cell edges so every panel lies in one cell.  This stays
    accurate when sigma is much narrower than the grid spacing, where sampling
    M at the nodes would miss the kernel entirely.
    """
    k_grid = np.asarray(k_grid, dtype=float)
    edges = cell_edges(k_o_grid)
    A = np.zeros((k_grid.size, edges.size - 1))
    for i, k in enumerate(k_grid):
        lo = max(edges[0], k - window * sigma)
        hi = min(edges[-1], k + window * sigma)
        if hi <= lo:
            continue
        bps = np.concatenate(([lo], edges[(edges > lo) & (edges < hi)], [hi]))
        n_sub = np.maximum(1, np.ceil(np.diff(bps) / (0.5 * sigma)).astype(int))
        starts = np.concatenate([np.linspace(a, b, n + 1)[:-1] for a, b, n in zip(bps[:-1], bps[1:], n_sub)])
        widths = np.concatenate([np.full(n, (b - a) / n) for a, b, n in zip(bps[:-1], bps[1:], n_sub)])
        mid = starts + 0.5 * widths
        x = (mid[:, None] + 0.5 * widths[:, None] * _GL8_X[None, :]).ravel()
        w = (0.5 * widths[:, None] * _GL8_W[None, :]).ravel()
        vals = kernel_M(k, x, sigma) * w
        cell = np.repeat(np.searchsorted(edges, mid, side="right") - 1, _GL8_X.size)
        A[i] = np.bincount(cell, weights=vals, minlength=edges.size - 1)
    return A


def solve_weights(env: ThermalEnvironment, sigma: float, k_grid=None, k_o_grid=None,
                  alpha_sq: float = 1.0, threshold: float = FEASIBILITY_THRESHOLD,
                  ridge: float = 0.0) -> WeightSolution:
    """Nonnegative weight density p(k_o) for a Gaussian mixture at width ``sigma``.

    Solves ``min ||A p - b||`` with ``p >= 0`` and ``b_i = nbar(k_i)/alpha_sq``,
    ``p`` being piecewise constant on the cells around ``k_o_grid``.  The
    solve is declared feasible when ``||A p - b|| / ||b|| < threshold``.
    """
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    if not alpha_sq > 0:
        raise ValueError("alpha_sq must be positive")
    k_grid = default_grid(env) if k_grid is None else np.asarray(k_grid, dtype=float)
    k_o_grid = default_grid(env) if k_o_grid is None else np.asarray(k_o_grid, dtype=float)
    if k_grid.ndim != 1 or k_grid.size < 1 or np.any(np.diff(k_grid) <= 0) or k_grid[0] <= 0:
        raise ValueError("k_grid must be positive and strictly increasing")
    widths = np.diff(cell_edges(k_o_grid))

    A = system_matrix(k_grid, k_o_grid, sigma)
    b = planck_occupancy(k_grid, env) / alpha_sq
    return _solve(A, b, sigma, k_grid, k_o_grid, widths, alpha_sq, threshold, ridge)


def _solve(A, b, sigma, k_grid, k_o_grid, widths, alpha_sq, threshold, ridge):
    bmax = float(np.max(np.abs(b)))
    if bmax == 0.0:
        p = np.zeros(k_o_grid.size)
        return WeightSolution(sigma, k_grid, k_o_grid, widths, p, 0.0, True, alpha_sq, threshold)
    # uniform row scaling leaves the relative residual unchanged
    As = A / bmax
    bs = b / bmax
    p, _ = nnls(As, bs, ridge=ridge * float(np.max(np.abs(As))) ** 2 if ridge else 0.0)
    rel = float(np.linalg.norm(A @ p - b) / np.linalg.norm(b))
    return WeightSolution(sigma, k_grid, k_o_grid, widths, p, rel, rel < threshold, alpha_sq, threshold)


@dataclass(frozen=True)
class SweepRow:
    sigma: float
    fwhm_thz: float
    relative_residual: float
    feasible: bool
    error: str = ""


def feasibility_sweep(env: ThermalEnvironment, sigma_list, **solve_kwargs):
    """Solve at each sigma; a failing solve is recorded in its row rather than raised."""
    sigma_list = list(sigma_list)
    if not sigma_list:
        raise ValueError("sigma_list must be nonempty")
    rows = []
    for sigma in sigma_list:
        try:
            sol = solve_weights(env, sigma, **solve_kwargs)
            rows.append(SweepRow(sigma, sigma_to_fwhm_thz(sigma), sol.relative_residual, sol.feasible))
        except (ArithmeticError, ValueError, np.linalg.LinAlgError) as exc:
            rows.append(SweepRow(sigma, sigma_to_fwhm_thz(sigma), float("nan"), False, str(exc)))
    return rows


def residual_trend_is_monotone(rows) -> bool:
    """True when residuals do not decrease with sigma (diagnostic, never enforced)."""
    ordered = sorted((r for r in rows if not r.error), key=lambda r: r.sigma)
    res = [r.relative_residual for r in ordered]
    return all(b >= a - 1e-12 for a, b in zip(res, res[1:]))


# --- mixture correlation -------------------------------------------------------

def assemble_g1_gaussian(weights: WeightSolution, tau: float, env: ThermalEnvironment,
                         alpha_sq: float = 1.0, spec: QuadratureSpec | None = None) -> CorrelationSample:
    """delta_ij coefficient of the Gaussian-mixture correlation at delay ``tau``.

    The k_o integral is the midpoint rule over the solution's cells; the k
    integral is done adaptively per column over the window where the kernel
    is non-negligible.
    """
    spec = spec or QuadratureSpec(relative_tolerance=1e-11, absolute_tolerance=0.0)
    sigma = weights.sigma
    omega_tau = C * float(tau)
    pref = HBAR_C / (6 * math.pi ** 2 * EPS0)
    total = 0.0 + 0.0j
    for k_o, dk_o, p in zip(weights.k_o_grid, weights.cell_widths, weights.p_values):
        if p == 0.0:
            continue
        lo = max(0.0, k_o - _KERNEL_WINDOW * sigma)
        hi = k_o + _KERNEL_WINDOW * max(sigma, 0.1 * k_o)

        def integrand(k, k_o=k_o):
            k = np.where(k > 0, k, np.finfo(float).tiny)
            return pref * k ** 3 * kernel_M(k, k_o, sigma) * np.exp(-1j * omega_tau * k)

        col = integrate_finite(integrand, lo, hi, spec, breakpoints=(k_o,)).value
        total += p * dk_o * col
    return CorrelationSample(float(tau), alpha_sq * complex(total))
