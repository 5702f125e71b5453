"""Covering numbers, volumes and quadrature in the Lipschitz metric.

The covering estimate places a cubic grid in the coordinates of the right
singular vectors of ``L`` with spacing ``2 eps / sqrt(k)`` (``k`` the rank),
so every grid cell has diameter ``2 eps`` and the eps-balls around the grid
centers that touch ``L D`` cover ``L D``.  The count is therefore an upper
bound on the covering number.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from ._random import stream
from .design import fill_distance
from .geometry import Domain, closest_point_hull, corners, sample_uniform
from .lipschitz import LipschitzMatrix, SampleSet
from .uncertainty import MinimaxConfig, central

GRID_LIMIT = 1e15
RANK_TOL = 1e-10
SUBSAMPLE_DEFAULT = 100_000
_CHUNK = 20_000


@dataclass
class CoveringEstimate:
    epsilon: float
    count: float
    exact: bool
    grid_total: int
    sampled: int
    seed: int
    centers: Optional[np.ndarray] = None

    def to_dict(self) -> dict:
        return {"epsilon": self.epsilon, "count": self.count, "exact": self.exact,
                "grid_total": self.grid_total, "sampled": self.sampled, "seed": self.seed}


def _require_box(d: Domain):
    if not d.is_box:
        raise ValueError("only box domains are supported")


def _matrix(lm_or_scalar, m) -> Tuple[np.ndarray, bool]:
    """``(L, is_scalar)`` for a LipschitzMatrix, an array or a scalar constant."""
    if isinstance(lm_or_scalar, LipschitzMatrix):
        L = lm_or_scalar.L
    elif np.ndim(lm_or_scalar) == 0:
        return float(lm_or_scalar) * np.eye(m), True
    else:
        L = np.asarray(lm_or_scalar, dtype=float)
    if L.shape != (m, m):
        raise ValueError(f"metric must be {m}x{m}")
    return L, False


def _range_frame(L):
    """Left singular vectors spanning ``range(L)`` and the numerical rank.

    For the symmetric square root of ``H`` these coincide with the right
    singular vectors; for a general ``L`` the image ``L D`` lives in the
    column space.
    """
    u, sv, _ = np.linalg.svd(L)
    k = int(np.sum(sv > RANK_TOL * max(sv[0], np.finfo(float).tiny))) if sv.size else 0
    return u[:, :k], sv, k


class _Transformed:
    """``L D`` for a box ``D`` expressed in range coordinates ``z = U_k^T L x``."""

    def __init__(self, L, d: Domain):
        self.d = d
        self.L = L
        V, sv, k = _range_frame(L)
        self.k = k
        self.V = V
        self.W = V.T @ L  # z = W x
        self.Z = corners(d) @ self.W.T
        self.center = self.W @ (0.5 * (d.lower + d.upper))
        self.zmin = self.Z.min(axis=0)
        self.zmax = self.Z.max(axis=0)
        self.Wpinv = np.linalg.pinv(self.W)
        if k == d.dim:
            # parallelotope: lower <= A z <= upper with A = W^{-1}
            self.A = np.linalg.inv(self.W)
            self.Anorm = np.linalg.norm(self.A, axis=1)
        else:
            self.A = None

    def classify(self, Zq, eps):
        """Boolean mask of query points within ``eps`` of ``L D``."""
        lb = np.linalg.norm(np.maximum(self.zmin - Zq, 0) + np.maximum(Zq - self.zmax, 0), axis=1)
        if self.A is not None:
            Az = Zq @ self.A.T
            viol = np.maximum(Az - self.d.upper, self.d.lower - Az) / self.Anorm
            lb = np.maximum(lb, viol.max(axis=1))
        x = np.clip(Zq @ self.Wpinv.T, self.d.lower, self.d.upper)
        ub = np.linalg.norm(x @ self.W.T - Zq, axis=1)
        thr = eps * (1 + 1e-12)
        hit = ub <= thr
        unsure = np.flatnonzero(~hit & (lb <= thr))
        if unsure.size:
            dec, known = self._batch_decide(Zq[unsure], x[unsure], thr)
            hit[unsure[known]] = dec[known]
            unsure = unsure[~known]
        for i in unsure:
            _, dist = closest_point_hull(Zq[i], self.Z, radius=thr)
            hit[i] = dist <= thr
        return hit

    def _batch_decide(self, Zq, x, thr, iters=300):
        """Accelerated projected gradient on ``min 0.5 ||W x - z||^2`` over the box.

        A point is settled once the iterate is within ``thr`` or the
        Frank-Wolfe lower bound on the optimum exceeds ``thr**2 / 2``.
        """
        W, lo, hi = self.W, self.d.lower, self.d.upper
        step = 1.0 / max(np.linalg.norm(W, 2) ** 2, np.finfo(float).tiny)
        half = 0.5 * thr * thr
        dec = np.zeros(len(Zq), bool)
        known = np.zeros(len(Zq), bool)
        y, xo, t = x.copy(), x.copy(), 1.0
        for it in range(iters):
            r = y @ W.T - Zq
            xn = np.clip(y - step * (r @ W), lo, hi)
            tn = 0.5 * (1 + math.sqrt(1 + 4 * t * t))
            y = xn + ((t - 1) / tn) * (xn - xo)
            xo, t = xn, tn
            if it % 10 == 9 or it == iters - 1:
                r = xn @ W.T - Zq
                f = 0.5 * np.sum(r * r, axis=1)
                g = r @ W
                vert = np.where(g > 0, lo, hi)
                low = f - np.sum(g * (xn - vert), axis=1)
                yes = f <= half
                no = low > half
                dec |= yes & ~known
                known |= yes | no
                if known.all():
                    break
        return dec, known

    def diameter(self):
        Z = self.Z
        if Z.shape[0] > 4096:
            return float(np.linalg.norm(self.zmax - self.zmin))
        diff = Z[:, None, :] - Z[None, :, :]
        return float(np.sqrt(np.max(np.sum(diff * diff, axis=-1))))


def _grid_axes(tr: _Transformed, eps):
    s = 2.0 * eps / math.sqrt(tr.k)
    half = np.maximum(np.abs(tr.zmax - tr.center), np.abs(tr.zmin - tr.center))
    n = np.maximum(np.ceil(half / s - 0.5 - 1e-12), 0).astype(np.int64)
    return s, n


def covering_upper_bound(lm, d: Domain, epsilon: float, subsample_threshold: int = SUBSAMPLE_DEFAULT,
                         seed: int = 0, return_centers: bool = False) -> CoveringEstimate:
    """Upper bound on the eps-covering number of ``L D`` by grid counting.

    Parameters
    ----------
    lm : LipschitzMatrix, array or float
    subsample_threshold : int
        Grids with more cells than this are estimated from this many
        uniformly drawn cells instead of enumerated.
    return_centers : bool
        In exact mode also return the counted centers (in the coordinates
        of ``L x``).

    Raises
    ------
    ValueError
        When the grid would exceed 1e15 cells.
    """
    _require_box(d)
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    if subsample_threshold < 1:
        raise ValueError("subsample_threshold must be >= 1")
    L, _ = _matrix(lm, d.dim)
    tr = _Transformed(L, d)
    if tr.k == 0 or tr.diameter() <= epsilon:
        cen = (tr.V @ tr.center)[None] if return_centers else None
        return CoveringEstimate(float(epsilon), 1.0, True, 1, 1, int(seed), cen)
    s, n = _grid_axes(tr, epsilon)
    sizes = 2 * n + 1
    total_f = float(np.prod(sizes.astype(float)))
    if total_f > GRID_LIMIT:
        raise ValueError(f"grid of {total_f:.3g} cells exceeds {GRID_LIMIT:.0e}; use a larger epsilon")
    total = int(np.prod([int(v) for v in sizes]))

    def points(idx):
        return tr.center + s * (idx - n)

    if total <= subsample_threshold:
        hits = 0
        kept = []
        flat = np.arange(total)
        for lo in range(0, total, _CHUNK):
            idx = np.stack(np.unravel_index(flat[lo:lo + _CHUNK], sizes), axis=1)
            Zq = points(idx)
            mask = tr.classify(Zq, epsilon)
            hits += int(mask.sum())
            if return_centers:
                kept.append(Zq[mask] @ tr.V.T)
        cen = np.vstack(kept) if return_centers else None
        return CoveringEstimate(float(epsilon), float(max(hits, 1)), True, total, total, int(seed), cen)

    rng = stream(seed, "complexity.cover")
    hits = 0
    left = int(subsample_threshold)
    while left > 0:
        b = min(left, _CHUNK)
        idx = np.stack([rng.integers(0, v, size=b) for v in sizes], axis=1)
        hits += int(tr.classify(points(idx), epsilon).sum())
        left -= b
    count = total_f * hits / subsample_threshold
    return CoveringEstimate(float(epsilon), float(max(count, 1.0)), False, total,
                            int(subsample_threshold), int(seed))


def covering_curve(lm, d: Domain, epsilons: Sequence[float], subsample_threshold: int = SUBSAMPLE_DEFAULT,
                   seed: int = 0) -> List[CoveringEstimate]:
    """Covering estimates over a sweep of ``epsilons`` (sorted ascending)."""
    eps = np.sort(np.asarray(epsilons, dtype=float))
    return [covering_upper_bound(lm, d, e, subsample_threshold, seed) for e in eps]


def volume_transformed(lm_or_scalar, d: Domain) -> float:
    """``vol(L D)`` in the ambient dimension: ``|det L| vol(D)`` or ``L**m vol(D)``."""
    _require_box(d)
    L, scalar = _matrix(lm_or_scalar, d.dim)
    if scalar:
        return float(L[0, 0] ** d.dim * d.volume())
    return float(abs(np.linalg.det(L)) * d.volume())


def _zonotope_volume(G):
    """k-volume of ``sum_i [0, 1] g_i`` for the columns of the k-by-m matrix ``G``."""
    k, m = G.shape
    if k == 0:
        return 1.0
    n = math.comb(m, k)
    if n > 2_000_000:
        raise ValueError("too many generator subsets for an exact zonotope volume")
    vol = 0.0
    for S in itertools.combinations(range(m), k):
        vol += abs(np.linalg.det(G[:, S]))
    return float(vol)


def intrinsic_volume(lm_or_scalar, d: Domain) -> Tuple[float, int]:
    """``(k-volume of L D within range(L), k)`` with ``k = rank(L)``."""
    _require_box(d)
    L, scalar = _matrix(lm_or_scalar, d.dim)
    if scalar:
        if L[0, 0] == 0:
            return 1.0, 0
        return volume_transformed(lm_or_scalar, d), d.dim
    V, _, k = _range_frame(L)
    if k == d.dim:
        return volume_transformed(L, d), k
    G = (V.T @ L) * (d.upper - d.lower)
    return _zonotope_volume(G), k


def unit_ball_volume(k: int) -> float:
    return math.pi ** (k / 2) / math.gamma(k / 2 + 1)


def theoretical_cover_bounds(lm_or_scalar, d: Domain, epsilon: float) -> Tuple[float, float]:
    """Volume bounds ``(1/eps)^k V / vol(B) <= N <= (3/eps)^k V / vol(B)``.

    ``k`` is the rank of the metric and ``V`` the k-volume of ``L D`` in
    its range.  Both bounds are 1 when the metric vanishes.
    """
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    vol, k = intrinsic_volume(lm_or_scalar, d)
    if k == 0:
        return 1.0, 1.0
    base = vol / unit_ball_volume(k)
    return float((1.0 / epsilon) ** k * base), float((3.0 / epsilon) ** k * base)


def _running_median(v, width=7):
    h = width // 2
    out = np.empty_like(v)
    for i in range(v.size):
        out[i] = np.median(v[max(0, i - h):i + h + 1])
    return out


def growth_rate(curve) -> List[Tuple[float, float, float]]:
    """Slopes of ``log count`` against ``log eps`` and their 7-point running median.

    Parameters
    ----------
    curve : sequence of (epsilon, count) or CoveringEstimate
    """
    pairs = [(c.epsilon, c.count) if isinstance(c, CoveringEstimate) else tuple(c) for c in curve]
    if len(pairs) < 2:
        raise ValueError("need at least two points")
    arr = np.array(pairs, dtype=float)
    if np.any(arr[:, 1] <= 0) or np.any(arr[:, 0] <= 0):
        raise ValueError("epsilons and counts must be positive")
    if np.any(np.diff(arr[:, 0]) <= 0):
        raise ValueError("curve must be sorted by increasing epsilon")
    le, lc = np.log(arr[:, 0]), np.log(arr[:, 1])
    slope = np.gradient(lc, le)
    smooth = _running_median(slope)
    return [(float(e), float(a), float(b)) for e, a, b in zip(arr[:, 0], slope, smooth)]


@dataclass
class QuadratureResult:
    value: float
    error_bound: float
    mc_halfwidth: float
    fill: float
    n_points: int

    def __iter__(self):
        return iter((self.value, self.error_bound))


def integrate_central(s: SampleSet, lm: LipschitzMatrix, d: Domain, n_points: int = 10_000,
                      seed: int = 0, cfg: Optional[MinimaxConfig] = None) -> QuadratureResult:
    """Monte Carlo integral of the central approximation over a box.

    ``error_bound`` is ``(fill + epsilon/2) vol(D)``: every function of the
    class consistent with the samples differs from the central approximation
    pointwise by at most the fill distance plus half the noise level.  The
    95% Monte Carlo half-width of the estimate is reported separately in
    ``mc_halfwidth``.
    """
    _require_box(d)
    if s.M < 1:
        raise ValueError("quadrature needs at least one sample value")
    if n_points < 2:
        raise ValueError("n_points must be >= 2")
    X = sample_uniform(d, n_points, seed)
    fc = central(X, s, lm)
    vol = d.volume()
    value = float(vol * fc.mean())
    half = float(1.96 * vol * fc.std(ddof=1) / math.sqrt(n_points))
    fill = float(fill_distance(s.points, lm, d, cfg))
    return QuadratureResult(value, (fill + 0.5 * lm.epsilon) * vol, half, fill, int(n_points))
