"""Numerical substrate: adaptive quadrature, a few special functions, and
3D frame/dyadic algebra.

Integrands are expected to be vectorized: ``f(x)`` receives a 1D array of
abscissae and returns an array whose leading axis matches ``x``.  Trailing
axes are allowed, so one adaptive pass can integrate a whole family of
functions (vector-valued integrands) on a shared subdivision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import special as _sp

__all__ = [
    "QuadratureSpec",
    "QuadratureResult",
    "QuadratureError",
    "integrate_finite",
    "integrate_semi_infinite",
    "bessel_j0",
    "bessel_j1",
    "erf",
    "zeta",
    "PropagationFrame",
    "Dyadic3",
    "levi_civita",
]

DEFAULT_U_MAX = 45.0
_GL_ORDER = 15
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(_GL_ORDER)


@dataclass(frozen=True)
class QuadratureSpec:
    relative_tolerance: float = 1e-10
    absolute_tolerance: float = 1e-14
    max_subdivisions: int = 4000

    def __post_init__(self):
        if not self.relative_tolerance > 0:
            raise ValueError("relative_tolerance must be positive")
        if self.absolute_tolerance < 0:
            raise ValueError("absolute_tolerance must be non-negative")
        if self.max_subdivisions < 1:
            raise ValueError("max_subdivisions must be >= 1")


DEFAULT_SPEC = QuadratureSpec()


@dataclass(frozen=True)
class QuadratureResult:
    value: complex | float | np.ndarray
    error: float
    n_intervals: int

    def __iter__(self):
        # allows ``value, err = integrate_finite(...)``
        yield self.value
        yield self.error


class QuadratureError(ArithmeticError):
    """Adaptive quadrature ran out of subdivisions.

    ``best_estimate`` and ``error`` hold the last (unconverged) result.
    """

    def __init__(self, message, best_estimate, error):
        super().__init__(message)
        self.best_estimate = best_estimate
        self.error = error


def _panel(f, lo, hi):
    """Gauss-Legendre sums on many panels at once; returns shape (n, ...)."""
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    x = (mid[:, None] + half[:, None] * _GL_NODES[None, :]).ravel()
    y = np.asarray(f(x))
    y = y.reshape((lo.size, _GL_ORDER) + y.shape[1:])
    w = (half[:, None] * _GL_WEIGHTS[None, :]).reshape((lo.size, _GL_ORDER) + (1,) * (y.ndim - 2))
    wy = w * y
    return wy.sum(axis=1), _norm(np.abs(wy).sum(axis=1))


def _norm(v):
    v = np.abs(v)
    return v.reshape(v.shape[0], -1).max(axis=1) if v.ndim > 1 else v


def integrate_finite(f, a, b, spec: QuadratureSpec = DEFAULT_SPEC, breakpoints=()) -> QuadratureResult:
    """Adaptive integral of ``f`` over ``[a, b]``.

    Each panel is integrated with a 15-point Gauss-Legendre rule and with the
    same rule on its two halves; the difference is the panel's error estimate
    and the halved sum its value.  Panels whose error exceeds their share of
    the tolerance are bisected, all of them in one vectorized sweep.
    """
    a = float(a)
    b = float(b)
    if not a < b:
        if a == b:
            return QuadratureResult(0.0, 0.0, 0)
        raise ValueError(f"integrate_finite needs a < b, got a={a}, b={b}")

    edges = np.unique(np.clip(np.concatenate(([a], np.asarray(breakpoints, float), [b])), a, b))
    lo = edges[:-1]
    hi = edges[1:]
    mid = 0.5 * (lo + hi)
    whole, _ = _panel(f, lo, hi)
    left, left_abs = _panel(f, lo, mid)
    right, right_abs = _panel(f, mid, hi)

    done_val = None
    done_err = 0.0
    done_abs = 0.0
    n_panels = lo.size
    while True:
        val = left + right
        err = _norm(whole - val)
        mag = left_abs + right_abs
        total = val.sum(axis=0) if done_val is None else done_val + val.sum(axis=0)
        total_err = done_err + err.sum()
        scale = float(np.max(np.abs(total)))
        # cancellation in oscillatory integrands sets a floor on reachable accuracy
        roundoff = 50 * np.finfo(float).eps * (done_abs + mag.sum())
        tol = max(spec.absolute_tolerance, spec.relative_tolerance * scale, roundoff)
        if total_err <= tol:
            return QuadratureResult(_unwrap(total), float(total_err), n_panels)

        # A panel keeps being refined while its error exceeds a width-weighted
        # share of the tolerance; converged panels are retired.
        share = tol * (hi - lo) / (b - a)
        bad = err > share
        if not bad.any():
            bad = err >= err.max()
        retired_val = val[~bad].sum(axis=0)
        done_val = retired_val if done_val is None else done_val + retired_val
        done_err += err[~bad].sum()
        done_abs += mag[~bad].sum()

        if n_panels + bad.sum() > spec.max_subdivisions:
            raise QuadratureError(
                f"quadrature did not converge within {spec.max_subdivisions} subdivisions "
                f"(error {total_err:.3e} > tolerance {tol:.3e})",
                _unwrap(total),
                float(total_err),
            )

        lo_b, hi_b, mid_b = lo[bad], hi[bad], mid[bad]
        lo = np.concatenate((lo_b, mid_b))
        hi = np.concatenate((mid_b, hi_b))
        whole = np.concatenate((left[bad], right[bad]))
        n_panels += int(bad.sum())
        mid = 0.5 * (lo + hi)
        left, left_abs = _panel(f, lo, mid)
        right, right_abs = _panel(f, mid, hi)


def _unwrap(v):
    v = np.asarray(v)
    if v.ndim == 0:
        return complex(v) if np.iscomplexobj(v) else float(v)
    return v


def integrate_semi_infinite(f, spec: QuadratureSpec = DEFAULT_SPEC, scale: float = 1.0,
                            u_max: float | None = None, breakpoints=()) -> QuadratureResult:
    """Integral of ``f`` over ``[0, inf)`` for exponentially decaying integrands.

    ``f`` is written in a dimensionless variable ``u`` (``u = beta*hbar*c*k``
    for Planck-weighted integrands).  The range is truncated at ``u_max``,
    chosen so that ``exp(-u_max) < absolute_tolerance / 100`` but never below
    the default of 45.  ``scale`` stretches the range for integrands that
    decay on a scale other than 1.
    """
    if u_max is None:
        u_max = DEFAULT_U_MAX
        if spec.absolute_tolerance > 0:
            u_max = max(u_max, -math.log(spec.absolute_tolerance / 100.0))
    return integrate_finite(f, 0.0, u_max * scale, spec, breakpoints=breakpoints)


# --- special functions ------------------------------------------------------

def bessel_j0(x):
    """Bessel function of the first kind, order 0."""
    return _sp.j0(x)


def bessel_j1(x):
    """Bessel function of the first kind, order 1."""
    return _sp.j1(x)


def erf(x):
    return _sp.erf(x)


@lru_cache(maxsize=None)
def zeta(n: int) -> float:
    """Riemann zeta at the integers 2..5 (cached)."""
    if int(n) != n or not 2 <= n <= 5:
        raise ValueError(f"zeta is only provided for n in 2..5, got {n!r}")
    if n == 2:
        return math.pi ** 2 / 6
    if n == 4:
        return math.pi ** 4 / 90
    return float(_sp.zeta(int(n), 1))


# --- 3D frames and dyadics --------------------------------------------------

def levi_civita():
    eps = np.zeros((3, 3, 3))
    eps[0, 1, 2] = eps[1, 2, 0] = eps[2, 0, 1] = 1.0
    eps[0, 2, 1] = eps[2, 1, 0] = eps[1, 0, 2] = -1.0
    return eps


@dataclass(frozen=True)
class PropagationFrame:
    """Right-handed orthonormal triple (n, u, m) with u = m x n.

    ``m_hat`` is the mean propagation direction and ``n_hat`` the direction in
    which the pulse field has no component.
    """

    m_hat: np.ndarray
    n_hat: np.ndarray
    u_hat: np.ndarray

    @classmethod
    def from_vectors(cls, m, n=None):
        """Build a frame from a propagation direction and a rough polarization.

        ``n`` is Gram-Schmidt projected onto the plane normal to ``m``; when
        omitted, any perpendicular direction is chosen.
        """
        m = np.asarray(m, dtype=float)
        mnorm = np.linalg.norm(m)
        if mnorm == 0 or not np.isfinite(mnorm):
            raise ValueError("propagation direction must be a finite nonzero vector")
        m = m / mnorm
        if n is None:
            trial = np.eye(3)[int(np.argmin(np.abs(m)))]
        else:
            trial = np.asarray(n, dtype=float)
        n = trial - np.dot(trial, m) * m
        nnorm = np.linalg.norm(n)
        if nnorm < 1e-12 * max(1.0, np.linalg.norm(trial)):
            raise ValueError("polarization vector is parallel to the propagation direction")
        n = n / nnorm
        # second pass removes the residual from the first projection
        n = n - np.dot(n, m) * m
        n = n / np.linalg.norm(n)
        return cls(m_hat=m, n_hat=n, u_hat=np.cross(m, n))

    @classmethod
    def standard(cls):
        """n = x, u = y, m = z."""
        return cls(m_hat=np.array([0.0, 0.0, 1.0]), n_hat=np.array([1.0, 0.0, 0.0]),
                   u_hat=np.array([0.0, 1.0, 0.0]))

    def matrix(self):
        """Rows are (n, u, m); maps lab vectors to frame components."""
        return np.vstack((self.n_hat, self.u_hat, self.m_hat))

    def to_frame(self, v):
        return self.matrix() @ np.asarray(v, dtype=float)

    def to_lab(self, components):
        return self.matrix().T @ np.asarray(components)

    def spherical(self, r):
        """(R, Theta, Phi) of a lab-frame point; Theta is measured from m, Phi from n toward u."""
        cn, cu, cm = self.to_frame(r)
        R = math.sqrt(cn * cn + cu * cu + cm * cm)
        if R == 0.0:
            return 0.0, 0.0, 0.0
        return R, math.acos(max(-1.0, min(1.0, cm / R))), math.atan2(cu, cn)

    def point(self, R, Theta, Phi):
        st = math.sin(Theta)
        return R * (st * math.cos(Phi) * self.n_hat + st * math.sin(Phi) * self.u_hat
                    + math.cos(Theta) * self.m_hat)


@dataclass(frozen=True)
class Dyadic3:
    """A 3x3 real tensor with helpers for frame-diagonal construction."""

    components: np.ndarray

    @classmethod
    def from_frame_diagonal(cls, frame: PropagationFrame, mm, nn, uu):
        c = (mm * np.outer(frame.m_hat, frame.m_hat) + nn * np.outer(frame.n_hat, frame.n_hat)
             + uu * np.outer(frame.u_hat, frame.u_hat))
        return cls(np.asarray(c, dtype=float))

    def project(self, a, b=None):
        b = a if b is None else b
        return float(np.asarray(a) @ self.components @ np.asarray(b))

    def in_frame(self, frame: PropagationFrame):
        R = frame.matrix()
        return R @ self.components @ R.T

    def is_symmetric(self, atol=1e-12):
        return bool(np.allclose(self.components, self.components.T, atol=atol, rtol=0))

    def sqrt_in_frame(self, frame: PropagationFrame):
        """Componentwise square root of a frame-diagonal dyadic."""
        d = self.in_frame(frame)
        diag = np.diag(d)
        if np.any(diag < 0):
            raise ArithmeticError(f"negative diagonal entry in dyadic: {diag}")
        return Dyadic3.from_frame_diagonal(frame, math.sqrt(diag[2]), math.sqrt(diag[0]),
                                           math.sqrt(diag[1]))

    @property
    def trace(self):
        return float(np.trace(self.components))
