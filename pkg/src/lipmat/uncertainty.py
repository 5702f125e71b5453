"""Pointwise and set-valued uncertainty bounds for the Lipschitz class.

Set bounds are minimax problems of the form

    minimize over x in S   sum_k  max_j ( c_kj - ||L (x - x_j)|| )

solved by sequential linear programming: every distance is replaced by its
tangent plane, which under-estimates the convex distance, so the linear model
majorizes the objective and each LP step can only improve it.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from ._random import stream
from .geometry import Domain, chebyshev_center, contains, sample_boundary, sample_uniform
from .lipschitz import LipschitzMatrix, SampleSet
from .solvers.lp import linprog
from .solvers.qp import solve_qp

KINK_TOL = 1e-10
DEDUP_TOL = 1e-8
_CHUNK = 4_000_000


@dataclass
class UncertaintyInterval:
    """Closed interval ``[lower, upper]``; ``lower > upper`` flags inconsistent data."""

    lower: float
    upper: float
    arg_lower: Optional[np.ndarray] = None
    arg_upper: Optional[np.ndarray] = None
    empty: bool = False

    @property
    def width(self) -> float:
        return self.upper - self.lower

    @property
    def consistent(self) -> bool:
        return bool(self.empty or self.lower <= self.upper)

    def contains(self, value, tol=0.0) -> bool:
        return bool(self.lower - tol <= value <= self.upper + tol)


@dataclass
class MinimaxConfig:
    multistarts: int = 30
    boundary_candidates: int = 30
    max_outer_iter: int = 100
    step_tol: float = 1e-8
    seed: int = 0
    threads: int = 1

    def __post_init__(self):
        for name in ("multistarts", "boundary_candidates", "max_outer_iter", "threads"):
            if int(getattr(self, name)) < 1:
                raise ValueError(f"{name} must be >= 1")


@dataclass
class MinimaxResult:
    value: float
    argpoint: np.ndarray
    trace: List[dict] = field(default_factory=list)
    best_start: int = -1

    @property
    def n_starts(self) -> int:
        return len(self.trace)

    def __iter__(self):
        # allows ``value, x, trace = minimax_bound(...)``
        return iter((self.value, self.argpoint, self.trace))


# -- pointwise -----------------------------------------------------------

def _require_samples(s: SampleSet):
    if s.M < 1:
        raise ValueError("uncertainty bounds need at least one sample value")


def bounds(X, s: SampleSet, lm: LipschitzMatrix):
    """Vectorized pointwise bounds.

    Returns
    -------
    lower, upper : ndarray
        Arrays with the batch shape of ``X`` (a scalar pair for one point).
    """
    _require_samples(s)
    X = np.asarray(X, dtype=float)
    single = X.ndim == 1
    X2 = np.atleast_2d(X)
    if X2.shape[1] != s.dim:
        raise ValueError(f"points have dimension {X2.shape[1]}, samples have {s.dim}")
    n = X2.shape[0]
    lo = np.empty(n)
    up = np.empty(n)
    step = max(1, _CHUNK // max(1, s.M * s.dim))
    PL = s.points @ lm.L
    for a in range(0, n, step):
        XL = X2[a:a + step] @ lm.L
        dist = np.linalg.norm(XL[:, None, :] - PL[None], axis=2)
        lo[a:a + step] = np.max(s.values - dist, axis=1)
        up[a:a + step] = np.min(s.values + dist, axis=1)
    half = 0.5 * lm.epsilon
    lo -= half
    up += half
    if single:
        return float(lo[0]), float(up[0])
    return lo, up


def interval_at(x, s: SampleSet, lm: LipschitzMatrix) -> UncertaintyInterval:
    """Exact set of values class members consistent with the data can take at ``x``."""
    lo, up = bounds(np.asarray(x, dtype=float).ravel(), s, lm)
    return UncertaintyInterval(lo, up)


def central(x, s: SampleSet, lm: LipschitzMatrix):
    """Midpoint of the pointwise interval (batch or single point)."""
    lo, up = bounds(x, s, lm)
    return (lo + up) / 2


def gap(x, s: SampleSet, lm: LipschitzMatrix):
    """Width ``upper - lower`` of the pointwise interval."""
    lo, up = bounds(x, s, lm)
    return up - lo


# -- minimax machinery ---------------------------------------------------

class _Pieces:
    """Objective ``sum_k max_j (C[k, j] - ||L (x - P_j)||)``."""

    def __init__(self, C, P, lm: LipschitzMatrix):
        self.C = np.atleast_2d(C)
        self.P = P
        self.L = lm.L
        self.H = lm.H

    def dist(self, x):
        return np.linalg.norm((x - self.P) @ self.L, axis=1)

    def value(self, x):
        return float(np.sum(np.max(self.C - self.dist(x), axis=1)))


def _slice_rows(slice_: Domain):
    return slice_.A, slice_.b, slice_.A_eq, slice_.b_eq


def _descent(x0, pieces: _Pieces, slice_: Domain, max_iter, step_tol):
    """Sequential-LP descent from ``x0``; returns ``(x, value, info)``."""
    m = x0.size
    K, M = pieces.C.shape
    A, b, Ae, be = _slice_rows(slice_)
    x = x0.copy()
    F = pieces.value(x)
    history = [F]
    status = "converged"
    it = 0
    for it in range(1, max_iter + 1):
        d = pieces.dist(x)
        diff = x - pieces.P
        with np.errstate(divide="ignore", invalid="ignore"):
            grad = np.where((d > KINK_TOL)[:, None], (diff @ pieces.H) / d[:, None], 0.0)
        # rows: -grad_j . p - t_k <= d_j - C[k, j]
        rows = []
        rhs = []
        for k in range(K):
            tk = np.zeros((M, K))
            tk[:, k] = -1.0
            rows.append(np.hstack([-grad, tk]))
            rhs.append(d - pieces.C[k])
        A_ub = np.vstack(rows)
        b_ub = np.concatenate(rhs)
        if A.shape[0]:
            A_ub = np.vstack([A_ub, np.hstack([A, np.zeros((A.shape[0], K))])])
            b_ub = np.concatenate([b_ub, b - A @ x])
        A_eq = b_eq = None
        if Ae.shape[0]:
            A_eq = np.hstack([Ae, np.zeros((Ae.shape[0], K))])
            b_eq = be - Ae @ x
        bnds = [(lo, hi) for lo, hi in zip(slice_.lower - x, slice_.upper - x)] + [(None, None)] * K
        cost = np.concatenate([np.zeros(m), np.ones(K)])
        z, rep = linprog(cost, A_ub, b_ub, A_eq, b_eq, bounds=bnds)
        if rep.status != "optimal":
            status = f"lp_{rep.status}"
            break
        p = z[:m]

        def model(alpha):
            return float(np.sum(np.max(pieces.C - d - alpha * (grad @ p), axis=1)))

        pred = model(1.0)
        tol = 1e-12 * (1.0 + abs(F))
        if F - pred <= tol:
            break
        alpha = 1.0
        accepted = False
        for _ in range(40):
            xn = np.clip(x + alpha * p, slice_.lower, slice_.upper)
            Fn = pieces.value(xn)
            if Fn <= model(alpha) + tol and Fn <= F:
                accepted = True
                break
            alpha *= 0.5
        if not accepted:
            status = "line_search"
            break
        step = alpha * np.linalg.norm(p)
        x, F = xn, Fn
        history.append(F)
        if step <= step_tol:
            break
    else:
        status = "max_iter"
    return x, F, {"iterations": it, "status": status, "history": history}


def _project(c, slice_: Domain, lm: LipschitzMatrix):
    """Closest point of ``slice_`` to ``c`` in the (regularized) L-metric."""
    if contains(slice_, c, tol=0.0):
        return c.copy()
    m = slice_.dim
    lam_max = max(float(np.linalg.eigvalsh(lm.H).max()), 0.0)
    sc = lam_max if lam_max > 0 else 1.0
    Q = lm.H / sc + 1e-9 * np.eye(m)
    G, h = slice_.halfspaces()
    x0, _ = chebyshev_center(slice_)
    x, _ = solve_qp(Q, -Q @ c, G, h, slice_.A_eq if slice_.has_eq else None,
                    slice_.b_eq if slice_.has_eq else None, x0=x0)
    return np.clip(x, slice_.lower, slice_.upper)


def _dedup(X, tol=DEDUP_TOL):
    keep = []
    for i, x in enumerate(X):
        if all(np.linalg.norm(x - X[j]) > tol for j in keep):
            keep.append(i)
    return X[keep]


def _voronoi_seeds(slice_: Domain, s: SampleSet, lm: LipschitzMatrix, cfg: MinimaxConfig):
    base = slice_.without_eq()
    seeds = sample_uniform(base, cfg.multistarts, cfg.seed)
    if s.M == 0:
        return seeds
    zero = _Pieces(np.zeros((1, s.M)), s.points, lm)
    out = np.empty_like(seeds)
    for i, x0 in enumerate(seeds):
        out[i] = _descent(x0, zero, base, cfg.max_outer_iter, cfg.step_tol)[0]
    return out


def initial_candidates(slice_: Domain, s: SampleSet, lm: LipschitzMatrix, cfg: MinimaxConfig) -> np.ndarray:
    """Multistart points: ascended Voronoi seeds plus boundary ray exits, projected to ``slice_``.

    The seeds are drawn in the domain without its equality rows and pushed
    uphill on ``min_j ||L (x - x_j)||``; they approximate bounded Voronoi
    vertices of the samples in the L-metric.
    """
    vor = _voronoi_seeds(slice_, s, lm, cfg)
    bnd = sample_boundary(slice_, cfg.boundary_candidates, cfg.seed)
    cand = np.vstack([vor, bnd])
    cand = np.array([_project(c, slice_, lm) for c in cand])
    return _dedup(cand)


def _run_starts(starts, pieces, slice_, cfg):
    def one(x0):
        return _descent(x0, pieces, slice_, cfg.max_outer_iter, cfg.step_tol)

    if cfg.threads > 1 and len(starts) > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as ex:
            results = list(ex.map(one, starts))
    else:
        results = [one(x0) for x0 in starts]
    best = 0
    for i, (_, F, _) in enumerate(results):
        if F < results[best][1]:
            best = i
    trace = []
    for i, (x, F, info) in enumerate(results):
        trace.append({"start": i, "value": F, "iterations": info["iterations"], "status": info["status"]})
    return results[best][0], results[best][1], trace, best


def _solve_pieces(C, slice_, s, lm, cfg, starts=None):
    pieces = _Pieces(C, s.points, lm)
    if starts is None:
        starts = initial_candidates(slice_, s, lm, cfg)
    return _run_starts(starts, pieces, slice_, cfg)


def minimax_bound(side: str, slice_: Domain, s: SampleSet, lm: LipschitzMatrix,
                  cfg: Optional[MinimaxConfig] = None, starts=None) -> MinimaxResult:
    """Lower (``min_x lower(x)``) or upper (``max_x upper(x)``) bound over ``slice_``.

    Returns
    -------
    MinimaxResult
        ``value`` is the best bound found over all multistarts, with
        ``argpoint`` attaining it and per-start diagnostics in ``trace``.
    """
    _require_samples(s)
    cfg = cfg or MinimaxConfig()
    if slice_.dim != s.dim:
        raise ValueError("slice and samples differ in dimension")
    half = 0.5 * lm.epsilon
    if side == "lower":
        C = s.values - half
        sgn = 1.0
    elif side == "upper":
        C = -s.values - half
        sgn = -1.0
    else:
        raise ValueError("side must be 'lower' or 'upper'")
    x, F, trace, best = _solve_pieces(C[None], slice_, s, lm, cfg, starts)
    return MinimaxResult(sgn * F, x, trace, best)


def set_bounds(slice_: Domain, s: SampleSet, lm: LipschitzMatrix, cfg: Optional[MinimaxConfig] = None
               ) -> UncertaintyInterval:
    """Both set bounds over ``slice_`` sharing one candidate set."""
    cfg = cfg or MinimaxConfig()
    starts = initial_candidates(slice_, s, lm, cfg)
    lo = minimax_bound("lower", slice_, s, lm, cfg, starts)
    up = minimax_bound("upper", slice_, s, lm, cfg, starts)
    return UncertaintyInterval(lo.value, up.value, lo.argpoint, up.argpoint)


def max_gap(d: Domain, s: SampleSet, lm: LipschitzMatrix, cfg: Optional[MinimaxConfig] = None,
            starts=None):
    """Maximize ``gap(x)`` over ``d``; returns ``(gap value, argpoint, trace)``."""
    _require_samples(s)
    cfg = cfg or MinimaxConfig()
    half = 0.5 * lm.epsilon
    C = np.vstack([-s.values - half, s.values - half])
    x, F, trace, _ = _solve_pieces(C, d, s, lm, cfg, starts)
    return -F, x, trace


@dataclass
class ShadowEntry:
    alpha: float
    interval: UncertaintyInterval
    trace: dict


def shadow_bounds(u, alphas, d: Domain, s: SampleSet, lm: LipschitzMatrix,
                  cfg: Optional[MinimaxConfig] = None) -> List[ShadowEntry]:
    """Set bounds on each slice ``{x in d : u @ x == alpha}``.

    Infeasible slices give entries with ``empty=True`` and NaN bounds.
    """
    u = np.asarray(u, dtype=float).ravel()
    if u.size != d.dim:
        raise ValueError("u and domain differ in dimension")
    if abs(np.linalg.norm(u) - 1.0) > 1e-9:
        raise ValueError("u must be a unit vector")
    cfg = cfg or MinimaxConfig()
    out = []
    for idx, a in enumerate(np.atleast_1d(np.asarray(alphas, dtype=float))):
        try:
            sl = d.with_eq(u[None], [a])
        except ValueError:
            out.append(ShadowEntry(float(a), UncertaintyInterval(np.nan, np.nan, empty=True), {"empty": True}))
            continue
        sub = MinimaxConfig(cfg.multistarts, cfg.boundary_candidates, cfg.max_outer_iter, cfg.step_tol,
                            int(stream(cfg.seed, "uncertainty.shadow", idx).integers(2**31)), cfg.threads)
        starts = initial_candidates(sl, s, lm, sub)
        lo = minimax_bound("lower", sl, s, lm, sub, starts)
        up = minimax_bound("upper", sl, s, lm, sub, starts)
        out.append(ShadowEntry(float(a), UncertaintyInterval(lo.value, up.value, lo.argpoint, up.argpoint),
                               {"lower": lo.trace, "upper": up.trace, "starts": int(len(starts))}))
    return out
