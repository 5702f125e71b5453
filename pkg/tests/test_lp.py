import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.optimize import linprog as scipy_linprog

from lipmat.solvers.lp import (DUAL_INFEASIBLE, INFEASIBLE, OPTIMAL, LinearProgram, SolveReport,
                               linprog, solve_lp)


def test_lower_bounded_variable():
    x, rep = linprog([1.0], bounds=[(3.0, 10.0)])
    assert rep.status == OPTIMAL
    assert x[0] == pytest.approx(3.0, abs=1e-12)


def test_minimax_of_two_lines():
    # variables (x, t): min t, t >= 1 - x, t >= x
    x, rep = linprog([0.0, 1.0], A_ub=[[-1.0, -1.0], [1.0, -1.0]], b_ub=[-1.0, 0.0],
                     bounds=[(0.0, 1.0), (None, None)])
    assert rep.ok
    np.testing.assert_allclose(x, [0.5, 0.5], atol=1e-12)
    assert rep.objective == pytest.approx(0.5)


def test_infeasible_reports_certificate():
    x, rep = linprog([0.0], A_ub=[[-1.0], [1.0]], b_ub=[-1.0, 0.0])
    assert rep.status == INFEASIBLE
    assert np.isfinite(rep.kkt_residual)


def test_unbounded_is_dual_infeasible():
    _, rep = linprog([-1.0], bounds=[(0.0, None)])
    assert rep.status == DUAL_INFEASIBLE


def test_equalities_and_free_variables():
    # min x1 + 2 x2  s.t. x1 + x2 = 1, x1 - x2 <= 0.2, x free
    x, rep = linprog([1.0, 2.0], A_ub=[[1.0, -1.0]], b_ub=[0.2], A_eq=[[1.0, 1.0]], b_eq=[1.0])
    assert rep.ok
    np.testing.assert_allclose(x, [0.6, 0.4], atol=1e-10)


def test_no_constraints_zero_objective():
    x, rep = linprog([0.0, 0.0])
    assert rep.ok and x.shape == (2,)


def test_solve_lp_container_and_report_dict():
    lp = LinearProgram([1.0, 1.0], A_ub=[[-1.0, -2.0]], b_ub=[-2.0], bounds=[(0, None), (0, None)])
    x, rep = solve_lp(lp)
    assert rep.ok
    assert rep.objective == pytest.approx(1.0)
    d = rep.to_dict()
    assert set(d) == {"status", "iterations", "objective", "kkt_residual", "message"}
    assert isinstance(SolveReport("optimal", 0, 0.0, 0.0).ok, bool)


def test_bad_bounds_length():
    with pytest.raises(ValueError):
        LinearProgram([1.0, 2.0], bounds=[(0, 1)])


@given(st.integers(0, 10_000))
def test_matches_scipy_on_random_bounded_lps(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 6))
    p = int(rng.integers(0, 12))
    q = int(rng.integers(0, min(n, 3)))
    A = rng.normal(size=(p, n))
    x0 = rng.uniform(-1, 1, n)
    b = A @ x0 + rng.uniform(0, 1, p)
    Ae = rng.normal(size=(q, n))
    be = Ae @ x0
    c = rng.normal(size=n)
    bounds = [(-2.0, 2.0)] * n
    x, rep = linprog(c, A if p else None, b if p else None, Ae if q else None, be if q else None, bounds)
    ref = scipy_linprog(c, A_ub=A if p else None, b_ub=b if p else None, A_eq=Ae if q else None,
                        b_eq=be if q else None, bounds=bounds, method="highs")
    assert ref.status == 0
    assert rep.ok
    assert rep.objective == pytest.approx(ref.fun, abs=1e-8 * (1 + abs(ref.fun)))
    if p:
        assert np.all(A @ x <= b + 1e-8)
    if q:
        np.testing.assert_allclose(Ae @ x, be, atol=1e-8)
    assert np.all(x >= -2 - 1e-9) and np.all(x <= 2 + 1e-9)


def test_tall_minimax_lp_many_rows(rng):
    # min t  s.t.  a_i @ x - t <= b_i for 3000 rows, |x| <= 1
    n = 4
    A = rng.normal(size=(3000, n))
    b = rng.normal(size=3000)
    Aub = np.hstack([A, -np.ones((3000, 1))])
    c = np.r_[np.zeros(n), 1.0]
    bounds = [(-1, 1)] * n + [(None, None)]
    x, rep = linprog(c, Aub, b, bounds=bounds)
    ref = scipy_linprog(c, A_ub=Aub, b_ub=b, bounds=bounds, method="highs")
    assert rep.ok
    assert rep.objective == pytest.approx(ref.fun, abs=1e-8)
