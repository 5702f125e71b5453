"""Dense two-phase simplex for small linear programs.

The primal problem

    minimize  c @ x   s.t.  A_ub @ x <= b_ub,  A_eq @ x == b_eq,  lo <= x <= hi

is solved through its dual in standard form.  The dual basis has one row per
primal variable, so the tall constraint matrices that come out of the minimax
linearisation (a handful of variables, thousands of rows) stay cheap: every
pivot works with an ``n x n`` basis inverse.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

OPTIMAL = "optimal"
MAX_ITER = "max_iter"
INFEASIBLE = "infeasible"
DUAL_INFEASIBLE = "dual_infeasible"
NUMERICAL = "numerical"


@dataclass
class SolveReport:
    """Outcome of a solver call, shared by every solver in the package."""

    status: str
    iterations: int
    objective: float
    kkt_residual: float
    message: str = ""

    @property
    def ok(self) -> bool:
        return self.status == OPTIMAL

    def to_dict(self) -> dict:
        return {
            "status": self.status,
            "iterations": int(self.iterations),
            "objective": float(self.objective),
            "kkt_residual": float(self.kkt_residual),
            "message": self.message,
        }


@dataclass
class LinearProgram:
    """``min c@x`` subject to inequality, equality and bound constraints.

    ``bounds`` is a sequence of ``(lo, hi)`` pairs with ``None`` for a
    missing side, or ``None`` for all-free variables.
    """

    objective: np.ndarray
    A_ub: Optional[np.ndarray] = None
    b_ub: Optional[np.ndarray] = None
    A_eq: Optional[np.ndarray] = None
    b_eq: Optional[np.ndarray] = None
    bounds: Optional[Sequence] = None
    lower: np.ndarray = field(init=False)
    upper: np.ndarray = field(init=False)

    def __post_init__(self):
        self.objective = np.asarray(self.objective, dtype=float).ravel()
        n = self.objective.size
        self.A_ub, self.b_ub = _pair(self.A_ub, self.b_ub, n, "inequality")
        self.A_eq, self.b_eq = _pair(self.A_eq, self.b_eq, n, "equality")
        lo = np.full(n, -np.inf)
        hi = np.full(n, np.inf)
        if self.bounds is not None:
            if len(self.bounds) != n:
                raise ValueError(f"bounds has {len(self.bounds)} entries, expected {n}")
            for i, (a, b) in enumerate(self.bounds):
                if a is not None:
                    lo[i] = a
                if b is not None:
                    hi[i] = b
        self.lower, self.upper = lo, hi

    @property
    def n(self) -> int:
        return self.objective.size


def _pair(A, b, n, what):
    if A is None:
        if b is not None and np.size(b):
            raise ValueError(f"{what} right-hand side given without a matrix")
        return np.zeros((0, n)), np.zeros(0)
    A = np.atleast_2d(np.asarray(A, dtype=float))
    b = np.asarray(b, dtype=float).ravel()
    if A.size == 0:
        A = A.reshape(0, n)
    if A.shape[1] != n or A.shape[0] != b.size:
        raise ValueError(f"{what} constraints have shape {A.shape} / {b.shape}, expected (*, {n})")
    return A, b


def _revised_simplex(A, b, cost, basis, allowed, max_iter, tol=1e-10):
    """Minimize ``cost@y`` s.t. ``A@y == b``, ``y >= 0`` from a feasible basis.

    Returns ``(status, basis, yB, Binv, iterations, ray)``.  On an unbounded
    problem ``ray`` is a nonnegative direction with ``A@ray == 0`` and
    ``cost@ray < 0``.
    """
    nrow = A.shape[0]
    Binv = np.linalg.inv(A[:, basis])
    yB = Binv @ b
    bland = False
    stalls = 0
    it = 0
    while True:
        if it >= max_iter:
            return MAX_ITER, basis, yB, Binv, it, None
        pi = cost[basis] @ Binv
        d = cost - pi @ A
        d[basis] = 0.0
        d[~allowed] = 0.0
        if bland:
            cand = np.flatnonzero(d < -tol)
            if cand.size == 0:
                return OPTIMAL, basis, yB, Binv, it, None
            q = cand[0]
        else:
            q = int(np.argmin(d))
            if d[q] >= -tol:
                return OPTIMAL, basis, yB, Binv, it, None
        col = Binv @ A[:, q]
        pos = col > 1e-11
        if not pos.any():
            ray = np.zeros(A.shape[1])
            ray[q] = 1.0
            ray[basis] = -col
            return DUAL_INFEASIBLE, basis, yB, Binv, it, ray
        ratios = np.full(nrow, np.inf)
        ratios[pos] = np.maximum(yB[pos], 0.0) / col[pos]
        theta = ratios.min()
        ties = np.flatnonzero(ratios <= theta + 1e-12 * (1.0 + theta))
        if bland:
            r = ties[np.argmin(basis[ties])]
        else:
            r = ties[np.argmax(col[ties])]
        # progress bookkeeping drives the switch to Bland's rule
        if theta <= 1e-13:
            stalls += 1
            if stalls > 50:
                bland = True
        else:
            stalls = 0
        yB = yB - theta * col
        yB[r] = theta
        piv = col[r]
        row = Binv[r] / piv
        Binv = Binv - np.outer(col, row)
        Binv[r] = row
        basis[r] = q
        it += 1
        if it % 50 == 0:
            Binv = np.linalg.inv(A[:, basis])
            yB = Binv @ b
            yB[np.abs(yB) < 1e-14] = 0.0


def _standard_rows(lp: LinearProgram):
    """Stack every constraint as ``G x <= h`` / ``E x == e`` with unit rows."""
    n = lp.n
    rows = [lp.A_ub]
    rhs = [lp.b_ub]
    eye = np.eye(n)
    fin_hi = np.isfinite(lp.upper)
    fin_lo = np.isfinite(lp.lower)
    rows += [eye[fin_hi], -eye[fin_lo]]
    rhs += [lp.upper[fin_hi], -lp.lower[fin_lo]]
    G = np.vstack(rows)
    h = np.concatenate(rhs)
    E, e = lp.A_eq.copy(), lp.b_eq.copy()
    if np.any(lp.lower > lp.upper):
        return None
    gn = np.linalg.norm(G, axis=1)
    keep = gn > 0
    if np.any(h[~keep] < -1e-12):
        return None
    G, h, gn = G[keep], h[keep], gn[keep]
    G, h = G / gn[:, None], h / gn
    en = np.linalg.norm(E, axis=1)
    zero = en == 0
    if np.any(np.abs(e[zero]) > 1e-12):
        return None
    E, e, en = E[~zero], e[~zero], en[~zero]
    E, e = E / en[:, None], e / en
    return G, h, E, e


def solve_lp(lp: LinearProgram, max_iter: int = 20000):
    """Solve a linear program.

    Returns
    -------
    x : ndarray
        Primal solution (best available point when not optimal).
    report : SolveReport
        ``status`` is one of ``optimal``, ``infeasible`` (with a Farkas
        certificate residual in ``kkt_residual``), ``dual_infeasible``
        (primal unbounded), ``max_iter`` or ``numerical``.
    """
    n = lp.n
    std = _standard_rows(lp)
    if std is None:
        return np.full(n, np.nan), SolveReport(INFEASIBLE, 0, np.nan, 0.0, "contradictory trivial constraints")
    G, h, E, e = std
    p, q = G.shape[0], E.shape[0]
    if n == 0:
        return np.zeros(0), SolveReport(OPTIMAL, 0, 0.0, 0.0)

    c = lp.objective
    cscale = max(np.abs(c).max(), 1.0)
    # Dual: max -h@y - e@w  s.t.  G^T y + E^T w = -c, y >= 0, w free.
    # Standard form over z = (y, w+, w-) >= 0 minimising h@y + e@w.
    A = np.hstack([G.T, E.T, -E.T])
    cost = np.concatenate([h, e, -e])
    b = -c / cscale
    sign = np.where(b < 0, -1.0, 1.0)
    A = A * sign[:, None]
    b = b * sign
    ncol = A.shape[1]

    # phase one with one artificial per row
    A1 = np.hstack([A, np.eye(n)])
    cost1 = np.concatenate([np.zeros(ncol), np.ones(n)])
    allowed1 = np.ones(ncol + n, dtype=bool)
    basis = np.arange(ncol, ncol + n)
    status, basis, yB, Binv, it1, _ = _revised_simplex(A1, b, cost1, basis, allowed1, max_iter)
    if status == MAX_ITER:
        return np.full(n, np.nan), SolveReport(MAX_ITER, it1, np.nan, np.inf, "phase one iteration cap")
    infeas = float(cost1[basis] @ yB)
    if infeas > 1e-9 * (1.0 + np.abs(b).sum()):
        # No dual-feasible point: primal is unbounded or infeasible. A zero
        # objective separates the two, since its dual is always feasible.
        if np.any(c != 0):
            x0, rep0 = solve_lp(LinearProgram(np.zeros(n), lp.A_ub, lp.b_ub, lp.A_eq, lp.b_eq,
                                              list(zip(_none(lp.lower), _none(lp.upper)))), max_iter)
            if rep0.status == INFEASIBLE:
                return x0, rep0
            return x0, SolveReport(DUAL_INFEASIBLE, it1 + rep0.iterations, -np.inf, 0.0,
                                   "objective unbounded below")
        return np.full(n, np.nan), SolveReport(NUMERICAL, it1, np.nan, infeas, "zero-objective dual infeasible")

    # drive artificials out of the basis; rows that cannot be pivoted are redundant
    for r in range(n):
        if basis[r] < ncol:
            continue
        row = Binv[r] @ A
        row[basis[basis < ncol]] = 0.0
        if row.size == 0:
            break
        j = int(np.argmax(np.abs(row)))
        if abs(row[j]) > 1e-9:
            col = Binv @ A1[:, j]
            piv = col[r]
            rrow = Binv[r] / piv
            Binv = Binv - np.outer(col, rrow)
            Binv[r] = rrow
            basis[r] = j
    allowed2 = np.concatenate([np.ones(ncol, dtype=bool), np.zeros(n, dtype=bool)])
    cost2 = np.concatenate([cost, np.zeros(n)])
    status, basis, yB, Binv, it2, ray = _revised_simplex(A1, b, cost2, basis, allowed2, max_iter - it1)
    its = it1 + it2
    pi = cost2[basis] @ Binv
    x = pi * sign
    if status == DUAL_INFEASIBLE:
        # dual ray => Farkas certificate y >= 0, G^T y + E^T w = 0, h@y + e@w < 0
        ray = ray[:ncol]
        y, w = ray[:p], ray[p:p + q] - ray[p + q:]
        nrm = np.abs(ray).sum()
        resid = float(np.abs(G.T @ y + E.T @ w).max() / nrm) if n else 0.0
        return np.full(n, np.nan), SolveReport(INFEASIBLE, its, np.nan, resid,
                                               f"Farkas certificate, h.y = {float(h @ y + e @ w) / nrm:.3e}")
    if status == MAX_ITER:
        return x, SolveReport(MAX_ITER, its, float(c @ x), np.inf, "phase two iteration cap")

    z = np.zeros(ncol + n)
    z[basis] = yB
    y = z[:p] * cscale
    w = (z[p:p + q] - z[p + q:ncol]) * cscale
    slack = h - G @ x
    r_primal = max(float(np.max(-slack, initial=0.0)), float(np.max(np.abs(E @ x - e), initial=0.0)))
    r_dual = float(np.abs(G.T @ y + E.T @ w + c).max()) / cscale
    r_comp = float(np.abs(y * slack).max(initial=0.0)) / (cscale * (1.0 + np.abs(x).max()))
    kkt = max(r_primal, r_dual, r_comp, 0.0)
    return x, SolveReport(OPTIMAL, its, float(c @ x), kkt)


def _none(v):
    return [None if not np.isfinite(t) else float(t) for t in v]


def linprog(c, A_ub=None, b_ub=None, A_eq=None, b_eq=None, bounds=None, max_iter=20000):
    """Convenience wrapper building a :class:`LinearProgram`."""
    return solve_lp(LinearProgram(c, A_ub, b_ub, A_eq, b_eq, bounds), max_iter=max_iter)
