import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st
from scipy import integrate as sint

from lumen_mix.gaussian_mixture import (
    GaussianPulseSpec,
    WeightSolution,
    angular_oracle_Tij,
    assemble_g1_gaussian,
    cell_edges,
    default_grid,
    feasibility_sweep,
    fwhm_thz_to_sigma,
    kernel_M,
    psi_integral_Tij,
    residual_trend_is_monotone,
    sigma_to_fwhm_thz,
    solve_weights,
    system_matrix,
    _solve,
)
from lumen_mix.constants import EPS0, HBAR_C
from lumen_mix.numerics import PropagationFrame
from lumen_mix.thermal_field import ThermalEnvironment, g1_thermal

ENV = ThermalEnvironment()


def test_bandwidth_conversion():
    assert fwhm_thz_to_sigma(1.0) == pytest.approx(1.2587e4, rel=1e-4)
    assert fwhm_thz_to_sigma(100.0) == pytest.approx(1.2587e6, rel=1e-4)
    assert sigma_to_fwhm_thz(fwhm_thz_to_sigma(3.7)) == pytest.approx(3.7, rel=1e-15)


# --- kernel ------------------------------------------------------------------

def _chain_oracle(k, k_o, sigma, n_psi=64, n_phi=64):
    """M from the step-by-step angular chain: Psi, then phi-bar, then theta.

    k lies along z; m_hat sweeps the sphere around it.  Every angular
    integral is numerical, and the theta integral is done by scipy.
    """
    k_vec = np.array([0.0, 0.0, k])
    psi = np.linspace(0, 2 * np.pi, n_psi, endpoint=False)
    phib = np.linspace(0, 2 * np.pi, n_phi, endpoint=False)

    def trace_T_phi(theta):
        total = 0.0
        for p in phib:
            m = np.array([math.sin(theta) * math.cos(p), math.sin(theta) * math.sin(p), math.cos(theta)])
            e1 = np.cross(m, [1.0, 0.0, 0.0] if abs(m[0]) < 0.9 else [0.0, 1.0, 0.0])
            e1 /= np.linalg.norm(e1)
            e2 = np.cross(m, e1)
            n = np.outer(np.cos(psi), e1) + np.outer(np.sin(psi), e2)
            kxn = np.cross(k_vec, n)
            total += np.sum(kxn * kxn) * (2 * np.pi / n_psi)  # trace of T_ij
        return total * (2 * np.pi / n_phi)

    def integrand(theta):
        expo = -(k * k + k_o * k_o - 2 * k * k_o * math.cos(theta)) / sigma ** 2
        return math.sin(theta) * math.exp(expo) * trace_T_phi(theta)

    ang, _ = sint.quad(integrand, 0.0, math.pi, epsabs=0.0, epsrel=1e-12, limit=200,
                       points=[min(math.pi / 2, 4 * sigma / math.sqrt(k * k_o + 1e-300))])
    # ang is the trace of c (delta k^2 - k k), i.e. 2 k^2 c.  The solid-angle
    # integral over k then gives (8 pi / 3) k^2 c; with the k^2 dk measure, the
    # hbar c k / (16 pi^3 eps0) factor and (2 pi)^3 |N^g|^2 k_o^2 in front,
    # dividing by the hbar c k^3 / (6 pi^2 eps0) of the reduced form leaves M.
    c_ang = ang / (2 * k * k)
    n_sq = 1.0 / (math.pi * math.sqrt(math.pi) * sigma ** 3 * (sigma ** 2 + k_o ** 2))
    return 6 * math.pi ** 2 * (2 * math.pi) ** 3 / (16 * math.pi ** 3) * n_sq * k_o ** 2 * (8 * math.pi / 3) * k * k * c_ang


def test_kernel_matches_angular_chain_oracle():
    rng = np.random.default_rng(11)
    for _ in range(20):
        sigma = 10 ** rng.uniform(3, 6)
        k = sigma * 10 ** rng.uniform(-1.5, 1.0)
        k_o = sigma * 10 ** rng.uniform(-1.5, 1.0)
        assert kernel_M(k, k_o, sigma) == pytest.approx(_chain_oracle(k, k_o, sigma), rel=1e-8)


def test_kernel_at_k_equals_ko_ten_sigma():
    s = 1e4
    assert kernel_M(10 * s, 10 * s, s) == pytest.approx(_chain_oracle(10 * s, 10 * s, s), rel=1e-8)


def test_kernel_positive_on_random_samples():
    rng = np.random.default_rng(5)
    sigma = 10 ** rng.uniform(2, 7, 1000)
    k = sigma * 10 ** rng.uniform(-4, 3, 1000)
    k_o = sigma * 10 ** rng.uniform(-4, 3, 1000)
    M = np.array([kernel_M(a, b, s) for a, b, s in zip(k, k_o, sigma)])
    assert np.all(M[np.isfinite(M)] >= 0)
    # away from total underflow the kernel is strictly positive
    a = 2 * k * k_o / sigma ** 2
    close = np.abs(k - k_o) / sigma < 20
    assert np.all(M[close & (a > 1e-100)] > 0)


def test_bracket_inequality_scan():
    # (a^2 - a + 1) e^{2a} >= a^2 + a + 1 on (0, 50]
    a = np.linspace(1e-6, 50, 200001)
    assert np.all((a * a - a + 1) * np.exp(2 * a) >= a * a + a + 1)


def test_kernel_quadratic_at_small_k():
    s, k_o = 1e5, 3e5
    m1 = kernel_M(1e-5 * s, k_o, s)
    m2 = kernel_M(2e-5 * s, k_o, s)
    assert m2 / m1 == pytest.approx(4.0, rel=1e-8)


def test_kernel_continuous_across_series_switch():
    s = 1.0
    k_o = 2.0
    k_lo = 0.25 * (1 - 1e-12)  # a just below 1
    k_hi = 0.25 * (1 + 1e-12)
    assert kernel_M(k_lo, k_o, s) == pytest.approx(kernel_M(k_hi, k_o, s), rel=1e-10)


def test_kernel_no_overflow_for_huge_a():
    val = kernel_M(1e8, 1e8, 1e2)
    assert np.isfinite(val) and val > 0


def test_kernel_domain():
    with pytest.raises(ValueError):
        kernel_M(0.0, 1.0, 1.0)
    with pytest.raises(ValueError):
        kernel_M(1.0, 1.0, 0.0)


# --- angular oracle -----------------------------------------------------------

def test_Tij_closed_form_vs_psi_integration():
    rng = np.random.default_rng(2)
    for _ in range(20):
        k = rng.normal(size=3) * 1e5
        m = rng.normal(size=3)
        m /= np.linalg.norm(m)
        np.testing.assert_allclose(psi_integral_Tij(k, m, n_points=10000), angular_oracle_Tij(k, m),
                                   rtol=1e-10, atol=1e-10 * np.dot(k, k))


def test_Tij_parallel_is_transverse_projector():
    m = np.array([0.0, 0.6, 0.8])
    k = 3.0 * m
    T = angular_oracle_Tij(k, m)
    np.testing.assert_allclose(T, math.pi * (9.0 * np.eye(3) - np.outer(k, k)), atol=1e-12)


@pytest.mark.parametrize("theta", [0.2, 1.1, 2.5])
def test_Tij_azimuthal_average(theta):
    k = np.array([0.3, -1.2, 0.7])
    kh = k / np.linalg.norm(k)
    e1 = np.cross(kh, [1.0, 0.0, 0.0])
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(kh, e1)
    phis = np.linspace(0, 2 * np.pi, 400, endpoint=False)
    acc = np.zeros((3, 3))
    for p in phis:
        m = kh * math.cos(theta) + math.sin(theta) * (e1 * math.cos(p) + e2 * math.sin(p))
        acc += angular_oracle_Tij(k, m)
    acc *= 2 * np.pi / phis.size
    k2 = np.dot(k, k)
    expected = 2 * math.pi ** 2 * (np.eye(3) * k2 - np.outer(k, k)) * (1 - 0.5 * math.sin(theta) ** 2)
    np.testing.assert_allclose(acc, expected, atol=1e-12 * k2)


# --- pulse normalization --------------------------------------------------------

@pytest.mark.parametrize("seed", range(5))
def test_gaussian_normalization_by_spherical_quadrature(seed):
    rng = np.random.default_rng(seed)
    sigma = 10 ** rng.uniform(3, 6)
    k_o = sigma * rng.uniform(0.5, 20)
    frame = PropagationFrame.from_vectors(rng.normal(size=3), rng.normal(size=3))
    spec = GaussianPulseSpec(sigma, k_o, frame)
    # spherical coordinates around the spectral centre k_o m_hat
    xq, wq = np.polynomial.legendre.leggauss(120)
    q = 4.5 * sigma * (xq + 1)
    wq = 4.5 * sigma * wq
    xt, wt = np.polynomial.legendre.leggauss(60)
    ph = np.linspace(0, 2 * np.pi, 64, endpoint=False)
    Q, CT, PH = np.meshgrid(q, xt, ph, indexing="ij")
    ST = np.sqrt(1 - CT ** 2)
    dirs = np.stack((ST * np.cos(PH), ST * np.sin(PH), CT), axis=-1)
    kvec = k_o * frame.m_hat + Q[..., None] * dirs
    W = wq[:, None, None] * wt[None, :, None] * (2 * np.pi / ph.size) * Q ** 2
    total = np.sum(W * spec.spectral_weight(kvec))
    assert total == pytest.approx(1.0, rel=1e-8)


def test_gaussian_spec_validation():
    with pytest.raises(ValueError):
        GaussianPulseSpec(-1.0, 1.0)
    with pytest.raises(ValueError):
        GaussianPulseSpec(1.0, 0.0)


# --- inversion ----------------------------------------------------------------

def test_cell_edges_cover_from_zero():
    g = default_grid(ENV, 10)
    e = cell_edges(g)
    assert e[0] == 0.0
    assert np.all(np.diff(e) > 0)
    assert np.all((g > e[:-1]) & (g < e[1:]))
    with pytest.raises(ValueError):
        cell_edges([2.0, 1.0])


def test_system_matrix_rows_sum_to_kernel_integral():
    sigma = fwhm_thz_to_sigma(1.0)
    g = default_grid(ENV, 60)
    A = system_matrix(g, g, sigma)
    i = 30
    k = g[i]
    exact, _ = sint.quad(lambda x: kernel_M(k, x, sigma), k - 10 * sigma, k + 10 * sigma,
                         epsrel=1e-12, limit=200)
    assert A[i].sum() == pytest.approx(exact, rel=1e-9)


def test_zero_target_gives_zero_weights():
    g = default_grid(ENV, 20)
    sol = _solve(np.ones((20, 20)), np.zeros(20), 1.0, g, g, np.ones(20), 1.0, 1e-3, 0.0)
    assert sol.feasible and sol.relative_residual == 0.0 and not sol.p_values.any()


def test_feasible_at_one_thz():
    sol = solve_weights(ENV, fwhm_thz_to_sigma(1.0))
    assert sol.feasible
    assert sol.relative_residual < 1e-3
    assert np.all(sol.p_values >= 0)
    assert sol.fwhm_thz == pytest.approx(1.0, rel=1e-12)


def test_infeasible_at_hundred_thz():
    sol = solve_weights(ENV, fwhm_thz_to_sigma(100.0))
    assert not sol.feasible
    assert sol.relative_residual > 0.05
    assert np.all(sol.p_values >= 0)


def test_residual_invariant_under_alpha_rescaling():
    sigma = fwhm_thz_to_sigma(10.0)
    g = default_grid(ENV, 80)
    a = solve_weights(ENV, sigma, g, g, alpha_sq=1.0)
    b = solve_weights(ENV, sigma, g, g, alpha_sq=7.5)
    assert b.relative_residual == pytest.approx(a.relative_residual, rel=1e-12, abs=1e-15)
    np.testing.assert_allclose(b.p_values * 7.5, a.p_values, rtol=1e-9, atol=1e-12 * a.p_values.max())


def test_solve_is_deterministic():
    sigma = fwhm_thz_to_sigma(3.0)
    g = default_grid(ENV, 60)
    a = solve_weights(ENV, sigma, g, g)
    b = solve_weights(ENV, sigma, g, g)
    assert np.array_equal(a.p_values, b.p_values)
    assert a.relative_residual == b.relative_residual


def test_solve_validation():
    with pytest.raises(ValueError):
        solve_weights(ENV, -1.0)
    with pytest.raises(ValueError):
        solve_weights(ENV, 1e4, alpha_sq=0.0)
    with pytest.raises(ValueError):
        solve_weights(ENV, 1e4, k_grid=np.array([3.0, 2.0, 1.0]))


def test_sweep_boundary_between_one_and_ten_thz():
    fwhm = [0.1, 1.0, 10.0, 100.0]
    rows = feasibility_sweep(ENV, [fwhm_thz_to_sigma(f) for f in fwhm])
    assert [r.feasible for r in rows] == [True, True, False, False]
    assert all(not r.error for r in rows)
    assert residual_trend_is_monotone(rows)


def test_sweep_rows_and_errors():
    rows = feasibility_sweep(ENV, [fwhm_thz_to_sigma(5.0)] * 2, k_grid=default_grid(ENV, 40),
                             k_o_grid=default_grid(ENV, 40))
    assert rows[0] == rows[1]
    bad = feasibility_sweep(ENV, [-1.0])
    assert len(bad) == 1 and bad[0].error and not bad[0].feasible
    with pytest.raises(ValueError):
        feasibility_sweep(ENV, [])


# --- assembled correlation ---------------------------------------------------------

def _spike(sigma, j, value):
    g = default_grid(ENV, 60)
    widths = np.diff(cell_edges(g))
    p = np.zeros(g.size)
    p[j] = value
    return WeightSolution(sigma, g, g, widths, p, 0.0, True)


def test_empty_mixture_is_zero():
    sol = _spike(1e4, 0, 0.0)
    assert assemble_g1_gaussian(sol, 0.0, ENV).value == 0.0


def test_single_spike_normalized_to_thermal():
    sigma = fwhm_thz_to_sigma(1.0)
    sol = _spike(sigma, 30, 1.0)
    k_o = sol.k_o_grid[30]
    width = sol.cell_widths[30]
    pref = HBAR_C / (6 * math.pi ** 2 * EPS0)
    raw, _ = sint.quad(lambda k: pref * k ** 3 * kernel_M(k, k_o, sigma), k_o - 10 * sigma,
                       k_o + 10 * sigma, epsrel=1e-13, limit=400)
    target = g1_thermal(0.0, ENV).value.real
    sol = _spike(sigma, 30, target / (raw * width))
    assert assemble_g1_gaussian(sol, 0.0, ENV).value.real == pytest.approx(target, rel=1e-8)


def test_assembled_conjugate_symmetry():
    sol = _spike(fwhm_thz_to_sigma(10.0), 25, 1.0)
    tau = 0.7 * ENV.coherence_time
    a = assemble_g1_gaussian(sol, tau, ENV).value
    b = assemble_g1_gaussian(sol, -tau, ENV).value
    assert abs(a - b.conjugate()) <= 1e-12 * abs(a)


def test_feasible_mixture_reproduces_thermal_correlation():
    sol = solve_weights(ENV, fwhm_thz_to_sigma(1.0))
    g_mix = assemble_g1_gaussian(sol, 0.0, ENV).value.real
    g_th = g1_thermal(0.0, ENV).value.real
    # the discrete inversion targets n(k) only on [0.02, 12] k_T, piecewise constant in k_o
    assert g_mix == pytest.approx(g_th, rel=0.03)


@given(st.floats(1e2, 1e7), st.floats(1e-3, 30.0), st.floats(1e-3, 30.0))
@settings(max_examples=200, deadline=None)
def test_kernel_positive_property(sigma, rk, rko):
    assume(abs(rk - rko) < 25.0)
    # |k - k_o| < 25 sigma keeps exp(-((k - k_o)/sigma)^2) above underflow
    assert kernel_M(rk * sigma, rko * sigma, sigma) > 0
