"""Primal active-set method for small strictly convex quadratic programs."""
from __future__ import annotations

import numpy as np

from .lp import SolveReport


def solve_qp(Q, q, A_ub, b_ub, A_eq=None, b_eq=None, x0=None, max_iter=None, tol=1e-10):
    """Minimize ``0.5 x@Q@x + q@x`` s.t. ``A_ub x <= b_ub``, ``A_eq x == b_eq``.

    ``Q`` must be positive definite and ``x0`` feasible.  Linearly dependent
    working sets are handled through least squares.

    Returns
    -------
    x : ndarray
    report : SolveReport
    """
    Q = np.asarray(Q, dtype=float)
    q = np.asarray(q, dtype=float)
    n = q.size
    A_ub = np.zeros((0, n)) if A_ub is None else np.atleast_2d(np.asarray(A_ub, dtype=float))
    b_ub = np.zeros(0) if b_ub is None else np.asarray(b_ub, dtype=float).ravel()
    A_eq = np.zeros((0, n)) if A_eq is None else np.atleast_2d(np.asarray(A_eq, dtype=float))
    b_eq = np.zeros(0) if b_eq is None else np.asarray(b_eq, dtype=float).ravel()
    if x0 is None:
        raise ValueError("a feasible starting point is required")
    x = np.asarray(x0, dtype=float).copy()
    p = A_ub.shape[0]
    if max_iter is None:
        max_iter = 50 * (n + p + 1)
    scale = max(1.0, np.abs(b_ub).max(initial=0.0))
    act_tol = 1e-12 * scale
    work = [i for i in range(p) if A_ub[i] @ x >= b_ub[i] - act_tol]
    work = _independent(A_ub, A_eq, work)
    for it in range(max_iter):
        g = Q @ x + q
        C = np.vstack([A_eq, A_ub[work]]) if work else A_eq
        step = _eqp_step(Q, g, C)
        if np.linalg.norm(step) <= tol * (1.0 + np.linalg.norm(x)):
            if not work:
                return x, SolveReport("optimal", it, _obj(Q, q, x), float(np.abs(g).max()))
            lam, *_ = np.linalg.lstsq(C.T, -g, rcond=None)
            lam_ub = lam[A_eq.shape[0]:]
            k = int(np.argmin(lam_ub))
            if lam_ub[k] >= -1e-10 * (1.0 + np.abs(g).max()):
                return x, SolveReport("optimal", it, _obj(Q, q, x), float(np.abs(C.T @ lam + g).max()))
            work.pop(k)
            continue
        alpha = 1.0
        block = -1
        rate = A_ub @ step
        for i in range(p):
            if i in work or rate[i] <= 1e-14:
                continue
            t = (b_ub[i] - A_ub[i] @ x) / rate[i]
            if t < alpha:
                alpha, block = max(t, 0.0), i
        x = x + alpha * step
        if block >= 0:
            work.append(block)
            work = _independent(A_ub, A_eq, work)
    return x, SolveReport("max_iter", max_iter, _obj(Q, q, x), np.inf, "active-set iteration cap")


def _obj(Q, q, x):
    return float(0.5 * x @ Q @ x + q @ x)


def _eqp_step(Q, g, C):
    """Minimizer of ``0.5 p@Q@p + g@p`` over the null space of ``C``."""
    n = g.size
    if C.shape[0] == 0:
        return -np.linalg.solve(Q, g)
    _, sv, vt = np.linalg.svd(C)
    rank = int(np.sum(sv > 1e-12 * max(sv[0], 1.0)))
    Z = vt[rank:].T
    if Z.shape[1] == 0:
        return np.zeros(n)
    red = Z.T @ Q @ Z
    return -Z @ np.linalg.solve(red, Z.T @ g)


def _independent(A_ub, A_eq, work):
    """Drop working-set rows that are linearly dependent on earlier ones."""
    keep = []
    base = A_eq.copy()
    r0 = np.linalg.matrix_rank(base) if base.shape[0] else 0
    for i in work:
        trial = np.vstack([base, A_ub[i]])
        r = np.linalg.matrix_rank(trial)
        if r > r0:
            keep.append(i)
            base, r0 = trial, r
    return keep
