"""Lawson-Hanson active-set nonnegative least squares."""

from __future__ import annotations

import numpy as np


class NNLSError(ArithmeticError):
    def __init__(self, message, x, residual_norm, iterations):
        super().__init__(message)
        self.x = x
        self.residual_norm = residual_norm
        self.iterations = iterations


def _ls(A, b, cols, ridge):
    As = A[:, cols]
    if ridge > 0:
        n = len(cols)
        As = np.vstack((As, np.sqrt(ridge) * np.eye(n)))
        b = np.concatenate((b, np.zeros(n)))
    return np.linalg.lstsq(As, b, rcond=None)[0]


def nnls(A, b, max_iter=None, tol=None, ridge=0.0):
    """Solve ``min ||A x - b||_2`` subject to ``x >= 0``.

    Returns ``(x, residual_norm)``.  ``max_iter`` bounds the number of
    outer (column-activation) iterations, defaulting to ``10 * n``.  A
    positive ``ridge`` adds ``ridge * ||x||^2`` to every subproblem, which
    keeps nearly dependent columns from producing wild passive-set solutions.
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    m, n = A.shape
    if b.shape != (m,):
        raise ValueError(f"b has shape {b.shape}, expected ({m},)")
    if max_iter is None:
        max_iter = 10 * n
    if tol is None:
        tol = 10 * max(m, n) * np.finfo(float).eps * np.linalg.norm(A, 1) * np.linalg.norm(b)

    x = np.zeros(n)
    passive = np.zeros(n, dtype=bool)
    w = A.T @ (b - A @ x)
    it = 0
    while not passive.all() and np.max(np.where(passive, -np.inf, w)) > tol:
        if it >= max_iter:
            raise NNLSError(f"NNLS did not converge in {max_iter} iterations", x,
                            float(np.linalg.norm(A @ x - b)), it)
        it += 1
        j = int(np.argmax(np.where(passive, -np.inf, w)))
        passive[j] = True
        cols = np.flatnonzero(passive)
        z = _ls(A, b, cols, ridge)

        # inner loop: step back toward feasibility until every passive z > 0
        while np.any(z <= 0):
            xp = x[cols]
            neg = np.flatnonzero(z <= 0)
            ratios = xp[neg] / (xp[neg] - z[neg])
            alpha = ratios.min()
            x[cols] = xp + alpha * (z - xp)
            x[cols[neg[np.argmin(ratios)]]] = 0.0  # the blocking variable, exactly
            drop = passive & (x <= 1e-15 * float(np.abs(x).max()))
            passive &= ~drop
            x[drop] = 0.0
            cols = np.flatnonzero(passive)
            if cols.size == 0:
                z = np.zeros(0)
                break
            z = _ls(A, b, cols, ridge)
        x[:] = 0.0
        x[cols] = z
        w = A.T @ (b - A @ x)
    return x, float(np.linalg.norm(A @ x - b))
