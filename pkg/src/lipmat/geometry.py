"""Polytopal domains and the geometric primitives built on them."""
from __future__ import annotations

import itertools
import json
from typing import NamedTuple, Optional

import numpy as np

from ._random import stream
from .solvers.lp import linprog

MAX_CORNER_DIM = 20


class Domain:
    """Box ``lower <= x <= upper`` intersected with ``A x <= b`` and ``A_eq x == b_eq``.

    Parameters
    ----------
    lower, upper : array_like
        Box bounds, ``lower < upper`` componentwise.
    ineq : tuple (A, b), optional
    eq : tuple (A_eq, b_eq), optional
        Up to ``dim`` independent equality rows are allowed; ``dim`` of them
        pin the domain to a single point.

    Raises
    ------
    ValueError
        On inconsistent shapes, an empty box, or an empty feasible set.
    """

    def __init__(self, lower, upper, ineq=None, eq=None):
        lower = np.atleast_1d(np.asarray(lower, dtype=float))
        upper = np.atleast_1d(np.asarray(upper, dtype=float))
        if lower.ndim != 1 or lower.shape != upper.shape or lower.size == 0:
            raise ValueError("lower and upper must be nonempty vectors of equal length")
        if not (np.all(np.isfinite(lower)) and np.all(np.isfinite(upper))):
            raise ValueError("box bounds must be finite")
        if np.any(lower >= upper):
            raise ValueError("box is empty: need lower < upper in every coordinate")
        m = lower.size
        self.lower, self.upper = lower, upper
        self.A, self.b = _constraint_pair(ineq, m, "ineq")
        self.A_eq, self.b_eq = _constraint_pair(eq, m, "eq")
        for arr in (self.lower, self.upper, self.A, self.b, self.A_eq, self.b_eq):
            arr.setflags(write=False)
        self._center = None
        if not self.is_box:
            x, rep = linprog(np.zeros(m), self.A if self.A.size else None, self.b if self.A.size else None,
                             self.A_eq if self.A_eq.size else None, self.b_eq if self.A_eq.size else None,
                             bounds=list(zip(lower, upper)))
            if rep.status != "optimal":
                raise ValueError(f"domain is empty (feasibility LP status {rep.status})")

    # -- constructors -------------------------------------------------------
    @classmethod
    def box(cls, lower, upper=None):
        """Box domain; ``box(m)`` gives ``[-1, 1]^m``."""
        if upper is None and np.isscalar(lower):
            m = int(lower)
            return cls(-np.ones(m), np.ones(m))
        return cls(lower, upper)

    @classmethod
    def from_dict(cls, obj: dict) -> "Domain":
        allowed = {"dim", "lower", "upper", "ineq", "eq"}
        extra = set(obj) - allowed
        if extra:
            raise ValueError(f"unknown domain keys: {sorted(extra)}")
        d = cls(obj["lower"], obj["upper"], _pair_from_json(obj.get("ineq")), _pair_from_json(obj.get("eq")))
        if "dim" in obj and int(obj["dim"]) != d.dim:
            raise ValueError(f"dim {obj['dim']} does not match bounds of length {d.dim}")
        return d

    @classmethod
    def from_json(cls, text: str) -> "Domain":
        return cls.from_dict(json.loads(text))

    def to_dict(self) -> dict:
        out = {"dim": self.dim, "lower": self.lower.tolist(), "upper": self.upper.tolist()}
        if self.A.shape[0]:
            out["ineq"] = {"A": self.A.tolist(), "b": self.b.tolist()}
        if self.A_eq.shape[0]:
            out["eq"] = {"A": self.A_eq.tolist(), "b": self.b_eq.tolist()}
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    # -- derived -------------------------------------------------------------
    @property
    def dim(self) -> int:
        return self.lower.size

    @property
    def is_box(self) -> bool:
        return self.A.shape[0] == 0 and self.A_eq.shape[0] == 0

    @property
    def has_eq(self) -> bool:
        return self.A_eq.shape[0] > 0

    def volume(self) -> float:
        """Box volume (pure boxes only)."""
        if not self.is_box:
            raise ValueError("volume is only available for pure boxes")
        return float(np.prod(self.upper - self.lower))

    def halfspaces(self):
        """All inequalities, box faces included, as ``(G, h)`` with ``G x <= h``."""
        eye = np.eye(self.dim)
        G = np.vstack([eye, -eye, self.A])
        h = np.concatenate([self.upper, -self.lower, self.b])
        return G, h

    def with_eq(self, A_eq, b_eq) -> "Domain":
        """Copy with extra equality rows appended (e.g. a slice ``u @ x == alpha``)."""
        A_eq = np.atleast_2d(np.asarray(A_eq, dtype=float))
        b_eq = np.atleast_1d(np.asarray(b_eq, dtype=float))
        return Domain(self.lower, self.upper, self._ineq(),
                      (np.vstack([self.A_eq, A_eq]), np.concatenate([self.b_eq, b_eq])))

    def without_eq(self) -> "Domain":
        return Domain(self.lower, self.upper, self._ineq())

    def _ineq(self):
        return (self.A, self.b) if self.A.shape[0] else None

    def null_basis(self) -> np.ndarray:
        """Orthonormal basis (columns) of the directions allowed by the equalities."""
        if not self.has_eq:
            return np.eye(self.dim)
        _, sv, vt = np.linalg.svd(self.A_eq)
        rank = int(np.sum(sv > 1e-12 * max(sv[0], 1.0)))
        return vt[rank:].T.copy()

    def __repr__(self):
        return (f"Domain(dim={self.dim}, ineq={self.A.shape[0]}, eq={self.A_eq.shape[0]}, "
                f"lower={self.lower.tolist()}, upper={self.upper.tolist()})")


def _constraint_pair(pair, m, name):
    if pair is None:
        return np.zeros((0, m)), np.zeros(0)
    A, b = pair
    A = np.atleast_2d(np.asarray(A, dtype=float))
    b = np.atleast_1d(np.asarray(b, dtype=float)).ravel()
    if A.size == 0:
        return np.zeros((0, m)), np.zeros(0)
    if A.shape != (b.size, m):
        raise ValueError(f"{name} matrix has shape {A.shape}, expected ({b.size}, {m})")
    return A.copy(), b.copy()


def _pair_from_json(obj):
    if obj is None:
        return None
    if isinstance(obj, dict):
        return obj["A"], obj["b"]
    return obj[0], obj[1]


def _check_dim(d: Domain, x):
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != d.dim:
        raise ValueError(f"point has dimension {x.shape[-1]}, domain has {d.dim}")
    return x


def contains(d: Domain, x, tol: float = 1e-9):
    """Membership test; accepts a single point or an array of points (rows)."""
    x = _check_dim(d, x)
    single = x.ndim == 1
    X = np.atleast_2d(x)
    ok = np.all(X >= d.lower - tol, axis=1) & np.all(X <= d.upper + tol, axis=1)
    if d.A.shape[0]:
        ok &= np.all(X @ d.A.T <= d.b + tol, axis=1)
    if d.A_eq.shape[0]:
        ok &= np.all(np.abs(X @ d.A_eq.T - d.b_eq) <= tol, axis=1)
    return bool(ok[0]) if single else ok


def corners(d: Domain) -> np.ndarray:
    """Box corners that satisfy the inequality constraints, in binary order."""
    if d.has_eq:
        raise ValueError("corners are undefined for domains with equality constraints")
    if d.dim > MAX_CORNER_DIM:
        raise ValueError(f"2^{d.dim} corners exceeds the guard of 2^{MAX_CORNER_DIM}")
    bits = np.array(list(itertools.product((0, 1), repeat=d.dim)), dtype=float)
    pts = d.lower + bits * (d.upper - d.lower)
    if d.A.shape[0]:
        pts = pts[np.all(pts @ d.A.T <= d.b + 1e-12, axis=1)]
    return pts


def chebyshev_center(d: Domain):
    """Center and radius of the largest ball inscribed in ``d``.

    With equality constraints the ball lives in the affine hull of the
    slice, so each row is measured by its component along the slice.
    """
    if d._center is not None:
        return d._center[0].copy(), d._center[1]
    m = d.dim
    G, h = d.halfspaces()
    N = d.null_basis()
    if N.shape[1] == 0:
        x, rep = linprog(np.zeros(m), G, h, d.A_eq, d.b_eq)
        if rep.status != "optimal":
            raise ValueError(f"domain is empty (status {rep.status})")
        d._center = (x, 0.0)
        return x.copy(), 0.0
    rn = np.linalg.norm(G @ N, axis=1)
    c = np.zeros(m + 1)
    c[-1] = -1.0
    A_ub = np.hstack([G, rn[:, None]])
    A_eq = np.hstack([d.A_eq, np.zeros((d.A_eq.shape[0], 1))]) if d.has_eq else None
    x, rep = linprog(c, A_ub, h, A_eq, d.b_eq if d.has_eq else None,
                     bounds=[(None, None)] * m + [(0.0, None)])
    if rep.status != "optimal":
        raise ValueError(f"Chebyshev LP failed with status {rep.status}")
    center, radius = x[:m], max(float(x[m]), 0.0)
    d._center = (center, radius)
    return center.copy(), radius


def _ray_max_step(G, h, x, dirs):
    """Largest ``t`` with ``G (x + t d) <= h`` for each row ``d`` of ``dirs``."""
    slack = np.maximum(h - G @ x, 0.0)
    rate = dirs @ G.T
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(rate > 1e-14, slack / rate, np.inf)
    return t.min(axis=1)


def sample_boundary(d: Domain, count: int, seed: int = 0) -> np.ndarray:
    """Cast random rays from the Chebyshev center and keep their exits."""
    if count < 1:
        raise ValueError("count must be >= 1")
    center, _ = chebyshev_center(d)
    N = d.null_basis()
    if N.shape[1] == 0:
        return np.tile(center, (count, 1))
    rng = stream(seed, "geometry.sample_boundary")
    z = rng.standard_normal((count, N.shape[1]))
    dirs = z @ N.T
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    G, h = d.halfspaces()
    t = _ray_max_step(G, h, center, dirs)
    pts = center + t[:, None] * dirs
    return _clip_box(d, pts)


def _clip_box(d, pts):
    # ray exits can overshoot a face by an ulp
    return np.clip(pts, d.lower, d.upper)


def sample_uniform(d: Domain, count: int, seed: int = 0, burn_in: Optional[int] = None,
                   thin: int = 10) -> np.ndarray:
    """Uniform samples from ``d``.

    Pure boxes draw coordinates independently, inequality-constrained
    domains reject from the box, and equality slices use hit-and-run from
    the Chebyshev center (approximately uniform).
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    rng = stream(seed, "geometry.sample_uniform")
    m = d.dim
    if d.is_box:
        return d.lower + rng.random((count, m)) * (d.upper - d.lower)
    if not d.has_eq:
        return _rejection(d, count, rng)
    return _hit_and_run(d, count, rng, 100 * m if burn_in is None else burn_in, thin)


def _rejection(d, count, rng, trial_guard=10**7, min_rate=1e-6):
    out = []
    have = trials = 0
    batch = max(1024, 4 * count)
    while have < count:
        X = d.lower + rng.random((batch, d.dim)) * (d.upper - d.lower)
        X = X[np.all(X @ d.A.T <= d.b, axis=1)]
        trials += batch
        out.append(X)
        have += X.shape[0]
        if trials >= trial_guard and have < min_rate * trials:
            raise ValueError(f"degenerate domain: acceptance rate {have / trials:.2e} after {trials} trials")
        if have:
            rate = have / trials
            batch = int(min(max(1024, 1.2 * (count - have) / rate), 10**6))
    return np.vstack(out)[:count]


def _hit_and_run(d, count, rng, burn_in, thin):
    center, _ = chebyshev_center(d)
    N = d.null_basis()
    if N.shape[1] == 0:
        return np.tile(center, (count, 1))
    G, h = d.halfspaces()
    x = center.copy()
    out = np.empty((count, d.dim))
    total = burn_in + thin * count
    k = 0
    for step in range(total):
        z = rng.standard_normal(N.shape[1])
        v = N @ z
        v /= np.linalg.norm(v)
        slack = np.maximum(h - G @ x, 0.0)
        rate = G @ v
        with np.errstate(divide="ignore", invalid="ignore"):
            hi = np.min(np.where(rate > 1e-14, slack / rate, np.inf))
            lo = -np.min(np.where(rate < -1e-14, slack / -rate, np.inf))
        x = x + (lo + (hi - lo) * rng.random()) * v
        if step >= burn_in and (step - burn_in) % thin == thin - 1:
            out[k] = x
            k += 1
    return _clip_box(d, out)


class Diameter(NamedTuple):
    value: float
    exact: bool


def diameter(d: Domain) -> Diameter:
    """Box diameter; ``exact`` is False when extra constraints make it an upper bound."""
    return Diameter(float(np.linalg.norm(d.upper - d.lower)), d.is_box)


def closest_point_hull(target, hull_points, max_iter: int = 10_000, gap_tol: float = 1e-10,
                       radius: Optional[float] = None):
    """Euclidean projection of ``target`` onto the convex hull of ``hull_points``.

    Frank-Wolfe with away steps over the simplex weights, followed by an
    exact least-squares solve on the final active face so that points
    inside the hull come back at distance zero.

    With ``radius`` given the iteration stops as soon as the duality gap
    settles whether the distance is below or above ``radius``; the returned
    distance is then only accurate enough for that decision.

    Returns
    -------
    point : ndarray
    distance : float
    """
    P = np.atleast_2d(np.asarray(hull_points, dtype=float))
    t = np.asarray(target, dtype=float).ravel()
    if P.shape[0] < 1:
        raise ValueError("need at least one hull point")
    if P.shape[1] != t.size:
        raise ValueError("target and hull points differ in dimension")
    c = P.shape[0]
    if c == 1:
        return P[0].copy(), float(np.linalg.norm(t - P[0]))
    scale = max(np.abs(P).max(), np.abs(t).max(), 1.0)
    # start from the nearest vertex
    j0 = int(np.argmin(np.sum((P - t) ** 2, axis=1)))
    w = np.zeros(c)
    w[j0] = 1.0
    x = P[j0].copy()
    tol = gap_tol * scale * scale
    half_r2 = None if radius is None else 0.5 * radius * radius
    for _ in range(max_iter):
        g = x - t
        s_scores = P @ g
        s = int(np.argmin(s_scores))
        active = np.flatnonzero(w > 0)
        a = active[np.argmax(s_scores[active])]
        gap_fw = g @ (x - P[s])
        if gap_fw <= tol:
            break
        if half_r2 is not None:
            f = 0.5 * (g @ g)
            # f - gap_fw is a lower bound on the optimal value
            if f <= half_r2 or f - gap_fw > half_r2:
                return x, float(np.sqrt(2.0 * f))
        gap_away = g @ (P[a] - x)
        if gap_fw >= gap_away or w[a] >= 1.0:
            dvec = P[s] - x
            gmax = 1.0
            fw = True
        else:
            dvec = x - P[a]
            gmax = w[a] / (1.0 - w[a])
            fw = False
        dd = dvec @ dvec
        if dd <= 0:
            break
        gamma = min(max(-(g @ dvec) / dd, 0.0), gmax)
        if fw:
            w *= 1.0 - gamma
            w[s] += gamma
        else:
            w *= 1.0 + gamma
            w[a] -= gamma
            if gamma >= gmax:
                w[a] = 0.0
        w[w < 1e-15] = 0.0
        w /= w.sum()
        x = w @ P
    x = _polish_face(P, t, w, x)
    return x, float(np.linalg.norm(t - x))


def _polish_face(P, t, w, x):
    """Exact least-squares projection onto the affine hull of the active face.

    Accepted only when the result has nonnegative weights and is closer.
    """
    act = np.flatnonzero(w > 0)
    if act.size < 2:
        return x
    base = P[act[0]]
    D = (P[act[1:]] - base).T
    coef, *_ = np.linalg.lstsq(D, t - base, rcond=None)
    wa = np.concatenate([[1.0 - coef.sum()], coef])
    if np.all(wa >= -1e-12):
        wa = np.maximum(wa, 0.0)
        wa /= wa.sum()
        y = wa @ P[act]
        if np.linalg.norm(t - y) <= np.linalg.norm(t - x):
            return y
    return x
