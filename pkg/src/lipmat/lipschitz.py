"""Lipschitz matrix estimation from samples and gradients."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import SCHEMA_VERSION
from .solvers.lp import OPTIMAL, SolveReport
from .solvers.sdp import SdpOptions, SdpProblem, solve_sdp_tracemin

DUPLICATE_TOL = 1e-12
FEASIBILITY_SLACK = 1e-7


class SampleSet:
    """Function values at ``points`` and optional gradients at ``grad_points``.

    Parameters
    ----------
    points : array_like, shape (M, m)
    values : array_like, shape (M,)
    grad_points : array_like, shape (N, m), optional
    grads : array_like, shape (N, m), optional
    dim : int, optional
        Needed only when both arrays are empty.
    """

    def __init__(self, points=None, values=None, grad_points=None, grads=None, dim=None):
        if points is None and grads is None and dim is None:
            raise ValueError("cannot infer the dimension of an empty sample set")
        if dim is None:
            dim = np.shape(points)[-1] if points is not None and np.size(points) else np.shape(grads)[-1]
        m = int(dim)
        self.points = _rows(points, m, "points")
        self.values = np.zeros(0) if values is None else np.asarray(values, dtype=float).ravel()
        if self.values.size != self.points.shape[0]:
            raise ValueError(f"{self.points.shape[0]} points but {self.values.size} values")
        self.grads = _rows(grads, m, "grads")
        if grad_points is None:
            self.grad_points = np.full_like(self.grads, np.nan)
        else:
            self.grad_points = _rows(grad_points, m, "grad_points")
        if self.grad_points.shape != self.grads.shape:
            raise ValueError("grad_points and grads must have the same shape")
        if not (np.all(np.isfinite(self.points)) and np.all(np.isfinite(self.values))
                and np.all(np.isfinite(self.grads))):
            raise ValueError("sample data must be finite")
        self.dim = m

    @property
    def M(self) -> int:
        return self.values.size

    @property
    def N(self) -> int:
        return self.grads.shape[0]

    def __len__(self):
        return self.M + self.N

    def union(self, other: "SampleSet") -> "SampleSet":
        return SampleSet(np.vstack([self.points, other.points]), np.concatenate([self.values, other.values]),
                         np.vstack([self.grad_points, other.grad_points]), np.vstack([self.grads, other.grads]),
                         dim=self.dim)

    def subset(self, samples=None, gradients=None) -> "SampleSet":
        """Sub-sample by index arrays (``None`` keeps everything)."""
        si = slice(None) if samples is None else np.asarray(samples, dtype=int)
        gi = slice(None) if gradients is None else np.asarray(gradients, dtype=int)
        return SampleSet(self.points[si], self.values[si], self.grad_points[gi], self.grads[gi], dim=self.dim)


def _rows(a, m, name):
    if a is None:
        return np.zeros((0, m))
    a = np.asarray(a, dtype=float)
    if a.size == 0:
        return np.zeros((0, m))
    a = np.atleast_2d(a)
    if a.ndim != 2 or a.shape[1] != m:
        raise ValueError(f"{name} must have {m} columns, got shape {a.shape}")
    return a


@dataclass
class LipschitzMatrix:
    """Squared Lipschitz matrix ``H``, its square root ``L`` and diagnostics."""

    H: np.ndarray
    epsilon: float = 0.0
    report: Optional[SolveReport] = None
    L: np.ndarray = field(init=False)

    def __post_init__(self):
        H = np.atleast_2d(np.asarray(self.H, dtype=float))
        if H.shape[0] != H.shape[1]:
            raise ValueError("H must be square")
        H = 0.5 * (H + H.T)
        lam, V = np.linalg.eigh(H)
        if lam.size and lam.min() < -1e-9 * max(abs(lam).max(), 1.0):
            raise ValueError(f"H is not PSD (min eigenvalue {lam.min():.3e})")
        lam = np.maximum(lam, 0.0)
        self.H = (V * lam) @ V.T
        self.H = 0.5 * (self.H + self.H.T)
        self.L = (V * np.sqrt(lam)) @ V.T
        self.L = 0.5 * (self.L + self.L.T)
        self.epsilon = float(self.epsilon)
        if self.epsilon < 0:
            raise ValueError("epsilon must be nonnegative")
        if self.report is None:
            self.report = SolveReport(OPTIMAL, 0, float(np.trace(self.H)), 0.0, "supplied")

    @classmethod
    def from_scalar(cls, L: float, m: int, epsilon: float = 0.0) -> "LipschitzMatrix":
        """Scalar constant ``L`` embedded as ``L * I``."""
        return cls(float(L) ** 2 * np.eye(m), epsilon)

    @classmethod
    def from_L(cls, L, epsilon: float = 0.0) -> "LipschitzMatrix":
        """Build from any matrix ``L``; the result has ``H = L^T L``."""
        L = np.atleast_2d(np.asarray(L, dtype=float))
        return cls(L.T @ L, epsilon)

    @property
    def m(self) -> int:
        return self.H.shape[0]

    @property
    def trace(self) -> float:
        return float(np.trace(self.H))

    @property
    def eigenvalues(self) -> np.ndarray:
        """Eigenvalues of ``H``, descending."""
        return np.linalg.eigvalsh(self.H)[::-1].clip(min=0.0)

    def rank(self, tol: float = 1e-8) -> int:
        lam = self.eigenvalues
        if lam.size == 0 or lam[0] <= 0:
            return 0
        return int(np.sum(lam > tol * lam[0]))

    def distance(self, x, points):
        """``||L (x - p)||`` for every row ``p`` of ``points`` (``x`` may be a batch)."""
        diff = np.asarray(x, dtype=float)[..., None, :] - np.asarray(points, dtype=float)
        return np.linalg.norm(diff @ self.L, axis=-1)

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "m": self.m,
            "H": self.H.tolist(),
            "L": self.L.tolist(),
            "epsilon": self.epsilon,
            "trace": self.trace,
            "eigenvalues": self.eigenvalues.tolist(),
            "rank": self.rank(),
            "report": self.report.to_dict(),
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "LipschitzMatrix":
        rep = obj.get("report")
        report = None
        if rep:
            report = SolveReport(rep["status"], rep["iterations"], rep["objective"], rep["kkt_residual"],
                                 rep.get("message", ""))
        H = np.asarray(obj["H"], dtype=float)
        if "m" in obj and H.shape != (obj["m"], obj["m"]):
            raise ValueError(f"H has shape {H.shape}, m = {obj['m']}")
        return cls(H, obj.get("epsilon", 0.0), report)


# -- constraint assembly -------------------------------------------------

def _check_duplicates(s: SampleSet):
    if s.M < 2:
        return
    order = np.lexsort(s.points.T[::-1])
    P = s.points[order]
    y = s.values[order]
    close = np.all(np.abs(np.diff(P, axis=0)) <= DUPLICATE_TOL, axis=1)
    bad = close & (np.abs(np.diff(y)) > DUPLICATE_TOL)
    if np.any(bad):
        k = int(np.flatnonzero(bad)[0])
        raise ValueError(f"duplicate points {order[k]} and {order[k + 1]} carry different values "
                         f"({y[k]!r} vs {y[k + 1]!r}); no finite Lipschitz matrix exists")


def pair_constraints(s: SampleSet, epsilon: float = 0.0, prune: bool = True):
    """Unit directions and levels of the pairwise constraints.

    Each pair ``(i, j)`` gives ``d^T H d >= r`` with ``d = h/||h||``,
    ``h = x_i - x_j`` and ``r = (|f_i - f_j| - epsilon)_+^2 / ||h||^2``.
    Pairs with ``r == 0`` are dropped.  With ``prune`` only the largest level
    per direction survives (directions compared after rounding to 12 digits).

    Returns
    -------
    D : ndarray, shape (k, m)
    r : ndarray, shape (k,)
    """
    _check_duplicates(s)
    m = s.dim
    if s.M < 2:
        return np.zeros((0, m)), np.zeros(0)
    i, j = np.triu_indices(s.M, 1)
    h = s.points[i] - s.points[j]
    df = np.maximum(np.abs(s.values[i] - s.values[j]) - epsilon, 0.0)
    hn = np.linalg.norm(h, axis=1)
    keep = (df > 0) & (hn > DUPLICATE_TOL)
    h, df, hn = h[keep], df[keep], hn[keep]
    D = h / hn[:, None]
    r = (df / hn) ** 2
    if prune and r.size > 1:
        # canonical sign: first nonzero component positive
        lead = np.argmax(np.abs(D) > 1e-12, axis=1)
        sgn = np.sign(D[np.arange(D.shape[0]), lead])
        D = D * sgn[:, None]
        keys = np.round(D, 12) + 0.0
        _, inv = np.unique(keys, axis=0, return_inverse=True)
        inv = inv.ravel()
        best = np.full(inv.max() + 1, -1.0)
        np.maximum.at(best, inv, r)
        idx = np.flatnonzero(r == best[inv])
        # first occurrence per group keeps the output order deterministic
        first = np.full(best.size, np.iinfo(np.int64).max)
        np.minimum.at(first, inv[idx], idx)
        winner = np.sort(first)
        D, r = D[winner], r[winner]
    return D, r


def sdp_problem(s: SampleSet, epsilon: float = 0.0, prune: bool = True) -> SdpProblem:
    _validate_epsilon(s, epsilon)
    D, r = pair_constraints(s, epsilon, prune)
    return SdpProblem(s.dim, D, r, s.grads)


def _validate_epsilon(s, epsilon):
    if epsilon < 0:
        raise ValueError("epsilon must be nonnegative")
    if epsilon > 0 and s.N > 0:
        raise ValueError("epsilon > 0 cannot be combined with gradient observations")


# -- operations ----------------------------------------------------------

def feasible_init(s: SampleSet, epsilon: float = 0.0) -> np.ndarray:
    """A strictly feasible ``H0`` built from rank-one updates.

    Pairs are visited in order; whenever ``h^T M h`` falls short of the
    required level the update ``M += alpha h h^T`` with
    ``alpha = (level - h^T M h)/||h||^4`` closes the gap.  Gradients are then
    dominated by adding ``max ||g||^2 I`` and a ``1e-8 * trace`` jitter makes
    the result strictly feasible.
    """
    _validate_epsilon(s, epsilon)
    m = s.dim
    M = np.zeros((m, m))
    D, r = pair_constraints(s, epsilon, prune=True)
    for d, level in zip(D, r):
        q = d @ M @ d
        if q < level:
            # unit d, so ||h||^4 == 1
            M += (level - q) * np.outer(d, d)
    if s.N:
        M += np.max(np.sum(s.grads ** 2, axis=1)) * np.eye(m)
    return M + 1e-8 * max(np.trace(M), 1.0) * np.eye(m)


def estimate(s: SampleSet, epsilon: float = 0.0, opts: Optional[SdpOptions] = None,
             prune: bool = True, warm_start: bool = True) -> LipschitzMatrix:
    """Trace-minimal squared Lipschitz matrix consistent with the data.

    Parameters
    ----------
    s : SampleSet
    epsilon : float
        Noise level of the epsilon-Lipschitz class; pairs whose values differ
        by at most ``epsilon`` impose nothing.  Requires gradient-free data.
    opts : SdpOptions, optional
    prune : bool
        Drop pair constraints dominated by a collinear pair.
    warm_start : bool
        Seed the barrier method with :func:`feasible_init`.
    """
    if len(s) == 0:
        raise ValueError("estimation needs at least one sample or gradient")
    prob = sdp_problem(s, epsilon, prune)
    H0 = feasible_init(s, epsilon) if warm_start and (prob.n_scalar or prob.n_matrix) else None
    H, rep = solve_sdp_tracemin(prob, H0=H0, opts=opts)
    return LipschitzMatrix(H, epsilon, rep)


def scalar_lipschitz(s: SampleSet, epsilon: float = 0.0) -> float:
    """Smallest scalar ``L`` consistent with the samples and gradients."""
    _check_duplicates(s)
    best = 0.0
    if s.M >= 2:
        i, j = np.triu_indices(s.M, 1)
        hn = np.linalg.norm(s.points[i] - s.points[j], axis=1)
        df = np.maximum(np.abs(s.values[i] - s.values[j]) - epsilon, 0.0)
        ok = hn > DUPLICATE_TOL
        if ok.any():
            best = float(np.max(df[ok] / hn[ok]))
    if s.N:
        best = max(best, float(np.max(np.linalg.norm(s.grads, axis=1))))
    return best


@dataclass
class FeasibilityReport:
    max_scalar_violation: float
    min_matrix_eig: float
    feasible: bool

    def to_dict(self):
        return {"max_scalar_violation": self.max_scalar_violation,
                "min_matrix_eig": self.min_matrix_eig, "feasible": self.feasible}


def check_feasibility(lm: LipschitzMatrix, s: SampleSet, slack: float = FEASIBILITY_SLACK) -> FeasibilityReport:
    """Measure how far ``lm`` is from satisfying the data constraints.

    ``max_scalar_violation`` is the largest relative shortfall
    ``(level - h^T H h)/level`` over pairs (positive means violated);
    ``min_matrix_eig`` is the smallest eigenvalue of ``H - g g^T`` over
    gradients, relative to ``max(trace H, max ||g||^2)``.
    """
    D, r = pair_constraints(s, lm.epsilon, prune=False)
    scal = float(np.max(1.0 - np.einsum("ki,ij,kj->k", D, lm.H, D) / r)) if r.size else -np.inf
    if s.N:
        ref = max(lm.trace, float(np.max(np.sum(s.grads ** 2, axis=1))), 1e-300)
        S = lm.H[None] - np.einsum("ki,kj->kij", s.grads, s.grads)
        mat = float(np.linalg.eigvalsh(S).min()) / ref
    else:
        mat = np.inf
    return FeasibilityReport(scal, mat, bool(scal <= slack and mat >= -slack))


def deflate_rank(lm: LipschitzMatrix, s: SampleSet, tol: float = 1e-6) -> LipschitzMatrix:
    """Remove trailing eigen-directions of ``H`` at a bounded cost.

    The smallest remaining eigenvalue is zeroed and the retained block is
    scaled by the smallest ``gamma >= 1`` restoring feasibility.  The removal
    is kept when the eigenvalue is below ``tol * lambda_max`` (any finite
    ``gamma``) or when ``gamma <= 1 + tol``; the first refused removal stops
    the iteration.
    """
    D, r = pair_constraints(s, lm.epsilon, prune=True)
    G = s.grads
    lam, V = np.linalg.eigh(lm.H)
    lam = np.maximum(lam[::-1], 0.0)
    V = V[:, ::-1]
    k = int(np.sum(lam > 0))
    H = lm.H.copy()
    scale = 1.0
    while k > 0:
        keep = k - 1
        Vk = V[:, :keep]
        lk = lam[:keep] * scale
        gamma = _rescale_needed(Vk, lk, D, r, G)
        small = lam[k - 1] < tol * lam[0]
        if not np.isfinite(gamma) or not (small or gamma <= 1.0 + tol):
            break
        scale *= gamma
        k = keep
        H = (Vk * (lam[:keep] * scale)) @ Vk.T
    if k == int(np.sum(lam > 0)):
        return lm
    rep = lm.report
    msg = f"deflated to rank {k}"
    report = SolveReport(rep.status, rep.iterations, float(np.trace(H)), rep.kkt_residual,
                         (rep.message + "; " + msg).lstrip("; "))
    return LipschitzMatrix(H, lm.epsilon, report)


def _rescale_needed(V, lam, D, r, G):
    """Smallest ``gamma >= 1`` making ``gamma * V diag(lam) V^T`` feasible."""
    gamma = 1.0
    if r.size:
        q = ((D @ V) ** 2) @ lam if V.shape[1] else np.zeros(r.size)
        if np.any(q <= 0):
            return np.inf
        gamma = max(gamma, float(np.max(r / q)))
    if G.shape[0] and np.any(G):
        P = G @ V if V.shape[1] else np.zeros((G.shape[0], 0))
        g2 = np.sum(G ** 2, axis=1)
        outside = g2 - np.sum(P ** 2, axis=1)
        if np.any(outside > 1e-12 * np.maximum(g2, 1e-300)):
            return np.inf
        if V.shape[1]:
            gamma = max(gamma, float(np.max(np.sum(P ** 2 / lam, axis=1))))
    return gamma


def fd_gradient(f, X, step: float = 1e-5, lower=None, upper=None):
    """Central finite-difference gradients of a batch function.

    ``f`` maps an ``(n, m)`` array to ``n`` values.  When bounds are given the
    step is applied in the coordinates normalized to ``[-1, 1]^m``.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    n, m = X.shape
    if lower is None:
        hvec = np.full(m, step)
    else:
        hvec = step * 0.5 * (np.asarray(upper, dtype=float) - np.asarray(lower, dtype=float))
    G = np.empty((n, m))
    for k in range(m):
        e = np.zeros(m)
        e[k] = hvec[k]
        G[:, k] = (np.asarray(f(X + e)) - np.asarray(f(X - e))) / (2.0 * hvec[k])
    return G
