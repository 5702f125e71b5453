import time

import numpy as np
import pytest
from hypothesis import given, strategies as st

from lipmat.solvers.sdp import SdpOptions, SdpProblem, solve_sdp_tracemin


def _feasible(H, prob, rel=1e-7):
    tr = max(np.trace(H), 1.0)
    h, c = prob.scalar_h, prob.scalar_c
    if h.shape[0]:
        assert np.all(np.einsum("ij,jk,ik->i", h, H, h) >= c * (1 - rel) - 1e-12)
    for g in prob.grads:
        assert np.linalg.eigvalsh(H - np.outer(g, g)).min() >= -rel * tr
    assert np.linalg.eigvalsh(H).min() >= -1e-9


def _random_problem(rng, m, ns, ng):
    h = rng.normal(size=(ns, m))
    c = rng.uniform(0, 4, ns)
    g = rng.normal(size=(ng, m))
    return SdpProblem(m, h if ns else None, c if ns else None, g if ng else None)


def test_single_scalar_constraint_rank_one():
    t = time.perf_counter()
    H, rep = solve_sdp_tracemin(SdpProblem(2, [[1.0, 0.0]], [9.0]))
    assert time.perf_counter() - t < 1.0
    assert rep.ok
    assert np.trace(H) == pytest.approx(9.0, rel=1e-5)
    np.testing.assert_allclose(H, np.diag([9.0, 0.0]), atol=1e-4)


def test_orthogonal_gradients_diagonal():
    H, rep = solve_sdp_tracemin(SdpProblem(2, grads=[[2.0, 0.0], [0.0, 3.0]]))
    assert rep.ok
    assert np.trace(H) == pytest.approx(13.0, rel=1e-5)
    np.testing.assert_allclose(H, np.diag([4.0, 9.0]), atol=1e-4)


def test_no_constraints_zero():
    H, rep = solve_sdp_tracemin(SdpProblem(3))
    assert rep.ok
    assert np.all(H == 0)


def test_single_gradient_outer_product():
    g = np.array([1.0, 2.0])
    H, rep = solve_sdp_tracemin(SdpProblem(2, grads=[g]))
    np.testing.assert_allclose(H, np.outer(g, g), atol=1e-5 * 5)


def test_problem_validation():
    with pytest.raises(ValueError):
        SdpProblem(2, [[0.0, 0.0]], [1.0])
    with pytest.raises(ValueError):
        SdpProblem(2, [[1.0, 0.0]], [-1.0])
    p = SdpProblem(2, [[0.0, 0.0], [1.0, 0.0]], [0.0, 1.0], [[0.0, 0.0]])
    assert p.n_scalar == 1 and p.n_matrix == 0


def _grid_trace(h, c, grads, n=601):
    """Smallest trace of a 2x2 PSD matrix meeting the constraints, by bisection over a grid."""
    a_frac = np.linspace(0, 1, n)
    s = np.linspace(-1, 1, n)
    A, S = np.meshgrid(a_frac, s, indexing="ij")

    def feasible(T):
        a = A * T
        cc = T - a
        b = S * np.sqrt(a * cc)
        ok = np.ones_like(a, bool)
        for hh, r in zip(h, c):
            ok &= a * hh[0] ** 2 + 2 * b * hh[0] * hh[1] + cc * hh[1] ** 2 >= r
        for g in grads:
            p, q, r = a - g[0] ** 2, b - g[0] * g[1], cc - g[1] ** 2
            ok &= (p >= 0) & (r >= 0) & (p * r - q * q >= 0)
        return ok.any()

    lo, hi = 0.0, 1.0
    while not feasible(hi):
        hi *= 2
    for _ in range(40):
        mid = 0.5 * (lo + hi)
        lo, hi = (lo, mid) if feasible(mid) else (mid, hi)
    return hi


@pytest.mark.parametrize("seed", range(6))
def test_matches_grid_search_two_constraints(seed):
    rng = np.random.default_rng(seed)
    kind = seed % 3
    if kind == 0:
        h, c, g = rng.normal(size=(2, 2)), rng.uniform(0.5, 3, 2), np.zeros((0, 2))
    elif kind == 1:
        h, c, g = rng.normal(size=(1, 2)), rng.uniform(0.5, 3, 1), rng.normal(size=(1, 2))
    else:
        h, c, g = np.zeros((0, 2)), np.zeros(0), rng.normal(size=(2, 2))
    H, rep = solve_sdp_tracemin(SdpProblem(2, h if len(h) else None, c if len(c) else None,
                                           g if len(g) else None))
    ref = _grid_trace(h, c, g)
    # the grid trace is an upper bound on the true optimum
    assert np.trace(H) == pytest.approx(ref, rel=1e-3)
    assert np.trace(H) <= ref * (1 + 1e-6)


@given(st.integers(0, 10_000), st.integers(1, 4))
def test_feasible_and_rotation_equivariant(seed, m):
    rng = np.random.default_rng(seed)
    prob = _random_problem(rng, m, int(rng.integers(1, 8)), int(rng.integers(0, 3)))
    H, rep = solve_sdp_tracemin(prob)
    _feasible(H, prob)
    Q, _ = np.linalg.qr(rng.normal(size=(m, m)))
    rot = SdpProblem(m, prob.scalar_h @ Q.T, prob.scalar_c, prob.grads @ Q.T if prob.n_matrix else None)
    Hr, _ = solve_sdp_tracemin(rot)
    scale = max(np.trace(H), 1.0)
    assert np.trace(Hr) == pytest.approx(np.trace(H), rel=1e-5)
    # optimum may be non-unique; compare traces and feasibility of the rotated optimum
    _feasible(Q.T @ Hr @ Q, prob)
    if np.linalg.matrix_rank(prob.scalar_h) == m and prob.n_scalar <= m:
        np.testing.assert_allclose(Hr, Q @ H @ Q.T, atol=1e-5 * scale)


@given(st.integers(0, 10_000), st.floats(0.1, 10.0))
def test_scale_law(seed, s):
    rng = np.random.default_rng(seed)
    prob = _random_problem(rng, 3, 5, 2)
    H, _ = solve_sdp_tracemin(prob)
    H2, _ = solve_sdp_tracemin(SdpProblem(3, prob.scalar_h, prob.scalar_c * s * s, prob.grads * s))
    assert np.trace(H2) == pytest.approx(s * s * np.trace(H), rel=1e-6)


@given(st.integers(0, 10_000), st.integers(1, 4))
def test_trace_monotone_under_added_constraints(seed, m):
    rng = np.random.default_rng(seed)
    prob = _random_problem(rng, m, 6, 1)
    H1, _ = solve_sdp_tracemin(SdpProblem(m, prob.scalar_h[:3], prob.scalar_c[:3]))
    H2, _ = solve_sdp_tracemin(prob)
    assert np.trace(H2) >= np.trace(H1) * (1 - 1e-6)


def test_max_iter_exit_still_feasible():
    rng = np.random.default_rng(7)
    prob = _random_problem(rng, 4, 40, 3)
    H, rep = solve_sdp_tracemin(prob, opts=SdpOptions(max_iter=3))
    assert rep.status in ("max_iter", "optimal")
    _feasible(H, prob)


def test_many_constraints_fast():
    rng = np.random.default_rng(0)
    prob = _random_problem(rng, 5, 2000, 200)
    t = time.perf_counter()
    H, rep = solve_sdp_tracemin(prob)
    assert time.perf_counter() - t < 20
    assert rep.ok
    _feasible(H, prob)
