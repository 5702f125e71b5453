import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lipmat.design import (ADAPTIVE, FIXED, FillDistance, fill_distance, greedy_max_uncertainty_next,
                           maximin_next, sequential_design)
from lipmat.geometry import Domain, contains, sample_uniform
from lipmat.lipschitz import LipschitzMatrix, SampleSet
from lipmat.uncertainty import MinimaxConfig, bounds, central, gap

SQ = Domain.box(2)
LINE = Domain.box(1)
I1 = LipschitzMatrix(np.eye(1))
I2 = LipschitzMatrix(np.eye(2))
FAST = MinimaxConfig(multistarts=10, boundary_candidates=10)


def _rotation(t):
    c, s = np.cos(t), np.sin(t)
    return np.array([[c, -s], [s, c]])


def _rotated_square(R):
    # {R x : x in [-1, 1]^2}
    r = np.sqrt(2.0)
    return Domain([-r, -r], [r, r], ineq=(np.vstack([R.T, -R.T]), np.ones(4)))


# -- maximin_next ----------------------------------------------------------

def test_maximin_1d_midpoint():
    step = maximin_next([[-1.0], [1.0]], I1, LINE)
    assert step.point[0] == pytest.approx(0.0, abs=1e-9)
    assert step.distance == pytest.approx(1.0, abs=1e-9)


def test_maximin_rank1_metric_ignores_nullspace():
    lm = LipschitzMatrix(np.diag([1.0, 0.0]))
    for ystar in (-0.7, 0.0, 0.4):
        step = maximin_next([[-1.0, ystar]], lm, SQ)
        assert step.point[0] == pytest.approx(1.0, abs=1e-9)
        assert step.distance == pytest.approx(2.0, abs=1e-9)


def test_maximin_center_goes_to_corner():
    step = maximin_next([[0.0, 0.0]], I2, SQ)
    np.testing.assert_allclose(np.abs(step.point), 1.0, atol=1e-9)
    assert step.distance == pytest.approx(np.sqrt(2), abs=1e-9)
    assert step.n_candidates > 0


def test_maximin_empty_design_is_chebyshev_center():
    step = maximin_next(np.zeros((0, 2)), I2, Domain.box([0.0, 0.0], [2.0, 4.0]))
    np.testing.assert_allclose(step.point[0], 1.0, atol=1e-7)
    assert 1.0 - 1e-7 <= step.point[1] <= 3.0 + 1e-7
    assert np.isinf(step.distance)


@given(st.integers(0, 10_000))
def test_maximin_nullspace_invariance(seed):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=2)
    a /= np.linalg.norm(a)
    lm = LipschitzMatrix(np.outer(a, a) * rng.uniform(0.5, 3))
    X = rng.uniform(-1, 1, (4, 2))
    n = np.array([-a[1], a[0]]) * rng.uniform(-2, 2)
    v0 = maximin_next(X, lm, SQ, FAST).distance
    v1 = maximin_next(X + n, lm, SQ, FAST).distance
    assert v0 == pytest.approx(v1, abs=1e-9)


@settings(max_examples=10)
@given(st.floats(0.05, 3.0), st.integers(0, 1000))
def test_design_rotation_equivariance(t, seed):
    R = _rotation(t)
    L = np.diag([2.0, 0.5])
    base = sequential_design(SQ, 6, FIXED, LipschitzMatrix.from_L(L), seed=seed, cfg=FAST)
    rot = sequential_design(_rotated_square(R), 6, FIXED, LipschitzMatrix.from_L(L @ R.T), seed=seed, cfg=FAST)
    np.testing.assert_allclose(rot.distances[:-1], base.distances[:-1], rtol=1e-6, atol=1e-8)
    # First points coincide; later ties may resolve to symmetric alternatives.
    np.testing.assert_allclose(rot.points[0], R @ base.points[0], atol=1e-7)


def test_design_1d_count3():
    des = sequential_design(LINE, 3, FIXED, I1)
    pts = np.sort(des.points[:, 0])
    np.testing.assert_allclose(des.points[0], [0.0], atol=1e-9)
    np.testing.assert_allclose(pts, [-1.0, 0.0, 1.0], atol=1e-9)
    assert des.complete and des.mode == FIXED


@given(st.integers(0, 10_000))
def test_fixed_design_traces_nonincreasing(seed):
    rng = np.random.default_rng(seed)
    B = rng.normal(size=(2, 2))
    lm = LipschitzMatrix(B @ B.T)
    des = sequential_design(SQ, 8, FIXED, lm, seed=seed, cfg=FAST)
    assert np.all(np.diff(des.fill_trace) <= 1e-6)
    assert np.all(np.diff(des.distances) <= 1e-6)
    assert contains(SQ, des.points, 1e-9).all()
    assert des.points.shape == (8, 2) and des.fill_trace.shape == (8,)


def test_design_seed_reproducible():
    lm = LipschitzMatrix(np.diag([1.0, 0.3, 2.0]))
    a = sequential_design(Domain.box(3), 6, FIXED, lm, seed=5, cfg=FAST)
    b = sequential_design(Domain.box(3), 6, FIXED, lm, seed=5, cfg=FAST)
    np.testing.assert_array_equal(a.points, b.points)


def test_design_argument_errors():
    with pytest.raises(ValueError):
        sequential_design(SQ, 0, FIXED, I2)
    with pytest.raises(ValueError):
        sequential_design(SQ, 3, FIXED, lambda x: 0.0)
    with pytest.raises(ValueError):
        sequential_design(SQ, 3, ADAPTIVE, I2)
    with pytest.raises(ValueError):
        sequential_design(SQ, 3, "other", I2)


# -- fill distance ---------------------------------------------------------

def test_fill_center_square():
    fd = fill_distance([[0.0, 0.0]], I2, SQ)
    assert isinstance(fd, FillDistance) and fd.lower_bound
    assert float(fd) == pytest.approx(np.sqrt(2), abs=1e-6)


@pytest.mark.parametrize("h", [0.2, 0.5, 0.25])
def test_fill_1d_grid(h):
    pts = np.arange(-1.0, 1.0 + 1e-12, h)[:, None]
    assert fill_distance(pts, I1, LINE) == pytest.approx(h / 2, abs=1e-6)


def test_fill_requires_points():
    with pytest.raises(ValueError):
        fill_distance(np.zeros((0, 2)), I2, SQ)


@given(st.integers(0, 10_000))
def test_fill_doubling_never_increases(seed):
    rng = np.random.default_rng(seed)
    lm = LipschitzMatrix(np.diag(rng.uniform(0.2, 2, 2)))
    X = rng.uniform(-1, 1, (5, 2))
    more = np.vstack([X, rng.uniform(-1, 1, (5, 2))])
    assert fill_distance(more, lm, SQ, FAST) <= fill_distance(X, lm, SQ, FAST) + 1e-9
    assert fill_distance(np.vstack([X, X]), lm, SQ, FAST) == pytest.approx(
        float(fill_distance(X, lm, SQ, FAST)), abs=1e-9)


@given(st.integers(0, 10_000))
def test_fill_below_sampled_maximum_distance(seed):
    # a sampled max of the distance function can never beat the optimized one by much
    rng = np.random.default_rng(seed)
    X = rng.uniform(-1, 1, (6, 2))
    lm = LipschitzMatrix(np.diag([1.0, 2.0]))
    cloud = sample_uniform(SQ, 5000, seed)
    d = np.min(np.linalg.norm((cloud[:, None] - X[None]) @ lm.L.T, axis=2), axis=1)
    assert fill_distance(X, lm, SQ, FAST) >= d.max() - 1e-9


@given(st.integers(0, 10_000))
def test_error_bound_two_fill(seed):
    rng = np.random.default_rng(seed)
    B = rng.normal(size=(2, 2))
    lm = LipschitzMatrix(B @ B.T + 0.05 * np.eye(2))
    des = sequential_design(SQ, 10, FIXED, lm, seed=seed, cfg=FAST)
    c = rng.uniform(-1, 1, 2)

    def f(X):  # a member of the class
        return 0.8 * np.linalg.norm((X - c) @ lm.L.T, axis=1) + 0.1 * np.sin(3 * X @ lm.L[0])

    s = SampleSet(des.points, f(des.points))
    cloud = rng.uniform(-1, 1, (10_000, 2))
    err = np.abs(f(cloud) - central(cloud, s, lm)).max()
    fill = fill_distance(des.points, lm, SQ, FAST)
    assert err <= 2 * fill + 1e-6


# -- greedy anti-pattern ---------------------------------------------------

def test_greedy_single_sample_corner():
    s = SampleSet([[0.0, 0.0]], [0.3])
    step = greedy_max_uncertainty_next(s, I2, SQ, FAST)
    np.testing.assert_allclose(np.abs(step.point), 1.0, atol=1e-9)
    assert step.gap == pytest.approx(2 * np.sqrt(2), abs=1e-9)


@given(st.integers(0, 10_000))
def test_greedy_never_returns_existing_sample(seed):
    rng = np.random.default_rng(seed)
    X = rng.uniform(-1, 1, (5, 2))
    s = SampleSet(X, 0.3 * X[:, 0])
    x = greedy_max_uncertainty_next(s, I2, SQ, FAST).point
    assert np.linalg.norm(X - x, axis=1).min() > 1e-6


def _ramp(x):
    # flat, then a steep unit rise on [0.45, 0.55]
    return np.clip((np.asarray(x, dtype=float) - 0.45) / 0.1, 0.0, 1.0)


def test_greedy_misses_steep_region_maximin_covers():
    d = Domain.box([0.0], [1.0])
    lm = LipschitzMatrix(np.eye(1))  # true slope is 10
    X = np.array([[0.4], [0.6]])
    s = SampleSet(X, _ramp(X[:, 0]))
    for _ in range(20):
        x = greedy_max_uncertainty_next(s, lm, d, FAST).point
        s = s.union(SampleSet(x[None], _ramp(x)))
    chosen = s.points[2:, 0]
    assert not np.any((chosen > 0.45) & (chosen < 0.55))
    mid = np.array([[0.5]])
    assert gap(mid, s, lm)[0] < 0  # the data contradict the metric there

    P = X.copy()
    for _ in range(20):
        P = np.vstack([P, maximin_next(P, lm, d, FAST).point])
    new = P[2:, 0]
    assert np.any((new > 0.45) & (new < 0.55))


# -- adaptive mode ---------------------------------------------------------

def test_adaptive_design_roof():
    from lipmat import testfns

    f = testfns.corrugated_roof()
    des = sequential_design(SQ, 5, ADAPTIVE, lambda x: f(x), seed=1, cfg=FAST)
    assert des.points.shape == (5, 2) and des.fill_trace.shape == (5,)
    assert des.samples.M == 5 and des.complete
    np.testing.assert_allclose(des.samples.values, f(des.points))


def test_adaptive_with_gradients_uses_them():
    a = np.array([1.0, 0.0])
    des = sequential_design(SQ, 4, ADAPTIVE, lambda x: (float(x @ a), a), cfg=FAST)
    assert des.samples.N == 4
    np.testing.assert_allclose(des.metric.H, np.outer(a, a), atol=1e-6)


def test_adaptive_partial_design_on_failure():
    calls = []

    def f(x):
        if len(calls) == 3:
            raise RuntimeError("simulator crashed")
        calls.append(x)
        return float(x.sum())

    des = sequential_design(SQ, 6, ADAPTIVE, f, cfg=FAST)
    assert not des.complete and "simulator crashed" in des.error
    assert des.points.shape == (3, 2)
    assert des.to_dict()["error"] == des.error
