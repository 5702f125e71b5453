"""Sequential maximin designs in the Lipschitz metric.

The next point of a maximin design is the point of the domain farthest, in
``||L (x - x_j)||``, from every existing point.  That is the upper-side set
bound for a sample set whose values are all zero, so the same multistart
machinery as :mod:`lipmat.uncertainty` is reused.

:func:`greedy_max_uncertainty_next` is kept as a reference for a policy that
should *not* be used on its own: with an underestimated metric the bounds cross
near steep regions and those regions are never sampled.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, List, NamedTuple, Optional, Union

import numpy as np

from ._random import stream
from .geometry import Domain, chebyshev_center
from .lipschitz import LipschitzMatrix, SampleSet, estimate
from .uncertainty import MinimaxConfig, initial_candidates, max_gap, minimax_bound

FIXED = "fixed_metric"
ADAPTIVE = "adaptive"


class MaximinStep(NamedTuple):
    point: np.ndarray
    distance: float
    n_candidates: int


class GreedyStep(NamedTuple):
    point: np.ndarray
    gap: float


class FillDistance(float):
    """Fill-distance estimate; a float carrying ``n_candidates``.

    The estimate is the best value found over the multistarts and is
    therefore a lower bound on the true fill distance.
    """

    n_candidates: int
    lower_bound: bool = True

    def __new__(cls, value, n_candidates=0):
        obj = super().__new__(cls, value)
        obj.n_candidates = int(n_candidates)
        return obj

    @property
    def value(self) -> float:
        return float(self)


@dataclass
class Design:
    points: np.ndarray
    fill_trace: np.ndarray
    metric: LipschitzMatrix
    mode: str = FIXED
    distances: np.ndarray = field(default_factory=lambda: np.zeros(0))
    samples: Optional[SampleSet] = None
    error: Optional[str] = None

    @property
    def complete(self) -> bool:
        return self.error is None

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "points": self.points.tolist(),
            "fill_trace": self.fill_trace.tolist(),
            "distances": self.distances.tolist(),
            "metric": self.metric.to_dict(),
            "error": self.error,
        }


def _as_points(existing, m):
    if isinstance(existing, SampleSet):
        return existing.points
    X = np.asarray(existing, dtype=float)
    if X.size == 0:
        return np.zeros((0, m))
    return X.reshape(-1, m)


def maximin_search(existing, lm: LipschitzMatrix, d: Domain, cfg: Optional[MinimaxConfig] = None
                   ) -> MaximinStep:
    """Point of ``d`` maximizing ``min_j ||L (x - x_j)||`` with its attained distance."""
    cfg = cfg or MinimaxConfig()
    X = _as_points(existing, d.dim)
    if lm.m != d.dim:
        raise ValueError("metric and domain differ in dimension")
    if X.shape[0] == 0:
        x0, _ = chebyshev_center(d)
        return MaximinStep(x0, np.inf, 1)
    zero = SampleSet(X, np.zeros(X.shape[0]))
    metric = LipschitzMatrix(lm.H)
    starts = initial_candidates(d, zero, metric, cfg)
    res = minimax_bound("upper", d, zero, metric, cfg, starts)
    return MaximinStep(np.asarray(res.argpoint, dtype=float), max(float(res.value), 0.0), len(starts))


def maximin_next(existing, lm: LipschitzMatrix, d: Domain, cfg: Optional[MinimaxConfig] = None
                 ) -> MaximinStep:
    """Next sequential maximin point.  An empty design starts at the Chebyshev center."""
    return maximin_search(existing, lm, d, cfg)


def fill_distance(pts, lm: LipschitzMatrix, d: Domain, cfg: Optional[MinimaxConfig] = None) -> FillDistance:
    """Estimate ``max_x min_j ||L (x - x_j)||`` over ``d`` (a lower bound)."""
    X = _as_points(pts, d.dim)
    if X.shape[0] == 0:
        raise ValueError("fill distance needs at least one point")
    step = maximin_search(X, lm, d, cfg)
    return FillDistance(step.distance, step.n_candidates)


def greedy_max_uncertainty_next(s: SampleSet, lm: LipschitzMatrix, d: Domain,
                                cfg: Optional[MinimaxConfig] = None) -> GreedyStep:
    """Point of largest gap between the upper and lower bounds.

    Not a sound design policy: where the data contradict ``lm`` the gap is
    negative and such regions are never chosen.
    """
    g, x, _ = max_gap(d, s, lm, cfg)
    return GreedyStep(np.asarray(x, dtype=float), float(g))


def _step_cfg(cfg: MinimaxConfig, seed, k):
    sub = int(stream(seed, "design.step", k).integers(2**31))
    return MinimaxConfig(cfg.multistarts, cfg.boundary_candidates, cfg.max_outer_iter,
                         cfg.step_tol, sub, cfg.threads)


def _evaluate(evaluator, x):
    out = evaluator(x)
    if isinstance(out, tuple):
        val, grad = out
        return float(val), np.asarray(grad, dtype=float).ravel()
    return float(out), None


def _refresh_metric(samples: SampleSet, m, epsilon):
    """Estimate L from the samples so far; the identity when nothing is informative yet."""
    if samples.M < 2 and samples.N == 0:
        return LipschitzMatrix(np.eye(m))
    lm = estimate(samples, epsilon=epsilon)
    if lm.trace <= 0.0:
        return LipschitzMatrix(np.eye(m), epsilon)
    return lm


def _suffix_max(dist):
    # the true fill distance is nonincreasing under insertion and each entry
    # underestimates it, so a later estimate also bounds every earlier one
    return np.maximum.accumulate(dist[::-1])[::-1] if dist.size else dist


def sequential_design(d: Domain, count: int, mode: str = FIXED,
                      lm_or_evaluator: Union[LipschitzMatrix, Callable, None] = None,
                      seed: int = 0, cfg: Optional[MinimaxConfig] = None, stride: int = 1,
                      epsilon: float = 0.0, initial: Optional[SampleSet] = None) -> Design:
    """Build a ``count``-point sequential maximin design.

    Parameters
    ----------
    mode : {"fixed_metric", "adaptive"}
        ``fixed_metric`` uses a constant :class:`LipschitzMatrix`.  ``adaptive``
        takes an evaluator ``f(x) -> value`` or ``f(x) -> (value, grad)``,
        evaluates every new point and re-estimates the metric every ``stride``
        insertions.
    initial : SampleSet, optional
        Adaptive mode only: prior samples used for the first estimate.  They
        are not part of the returned design points but do repel new points.

    Returns
    -------
    Design
        ``distances[k]`` is the attained maximin distance after ``k+1``
        insertions.  In fixed_metric mode ``fill_trace[k]`` is the largest
        of ``distances[k:]``, a nonincreasing lower bound on the fill
        distance; in adaptive mode the metric changes between entries and
        ``fill_trace`` equals ``distances``.  If the evaluator
        raises, the design built so far is returned with ``error`` set.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    if stride < 1:
        raise ValueError("stride must be >= 1")
    cfg = cfg or MinimaxConfig()
    m = d.dim
    if mode == FIXED:
        if not isinstance(lm_or_evaluator, LipschitzMatrix):
            raise ValueError("fixed_metric mode needs a LipschitzMatrix")
        lm = lm_or_evaluator
        evaluator = None
    elif mode == ADAPTIVE:
        if not callable(lm_or_evaluator):
            raise ValueError("adaptive mode needs a function evaluator")
        evaluator = lm_or_evaluator
        lm = None
    else:
        raise ValueError(f"unknown mode {mode!r}")

    samples = initial if initial is not None else SampleSet(dim=m)
    prior = samples.points
    if evaluator is not None:
        lm = _refresh_metric(samples, m, epsilon)
    pts: List[np.ndarray] = []
    dist: List[float] = []
    error = None
    x, _ = chebyshev_center(d)
    for k in range(count):
        if evaluator is not None:
            try:
                val, grad = _evaluate(evaluator, x)
            except Exception as exc:  # partial design on evaluator failure
                error = f"evaluator failed at point {k}: {exc}"
                break
            new = SampleSet(x[None], [val], dim=m) if grad is None else \
                SampleSet(x[None], [val], x[None], grad[None], dim=m)
            samples = samples.union(new)
            if (k + 1) % stride == 0:
                lm = _refresh_metric(samples, m, epsilon)
        pts.append(x)
        existing = np.vstack([prior, np.array(pts)])
        step = maximin_search(existing, lm, d, _step_cfg(cfg, seed, k))
        dist.append(step.distance)
        x = step.point
    P = np.array(pts).reshape(-1, m)
    D = np.array(dist, dtype=float)
    trace = _suffix_max(D) if evaluator is None else D.copy()
    return Design(P, trace, lm, mode, D, samples if evaluator is not None else None, error)
