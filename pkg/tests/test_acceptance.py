"""Exit-criteria suite: each test prints one ``criterion N: PASS|FAIL`` line."""
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from lipmat import testfns
from lipmat._random import stream
from lipmat.complexity import covering_curve, covering_upper_bound, volume_transformed
from lipmat.design import FIXED, sequential_design
from lipmat.geometry import Domain, corners
from lipmat.lipschitz import LipschitzMatrix, SampleSet, estimate, scalar_lipschitz
from lipmat.reduction import active_subspace, avg_outer_product
from lipmat.uncertainty import bounds, gap, set_bounds, shadow_bounds

pytestmark = pytest.mark.acceptance


@pytest.fixture
def report(capsys):
    def emit(n, ok, detail, seconds):
        with capsys.disabled():
            print(f"\ncriterion {n}: {'PASS' if ok else 'FAIL'}  ({detail}; {seconds:.1f} s)")
        assert ok, detail
    return emit


def _rel_trace(H, ref):
    return abs(np.trace(H) - np.trace(ref)) / max(np.trace(ref), 1e-300)


def test_criterion_01_analytic_sdp(report):
    details, ok = [], True
    # single pair: H = dy^2 d d^T / |d|^4
    t = time.perf_counter()
    x0, x1, dy = np.array([0.1, -0.2, 0.3]), np.array([0.7, 0.4, -0.1]), 2.5
    d = x1 - x0
    H = estimate(SampleSet([x0, x1], [0.0, dy])).H
    ref = dy ** 2 * np.outer(d, d) / (d @ d) ** 2
    e1, t1 = _rel_trace(H, ref), time.perf_counter() - t
    rank = int(np.sum(np.linalg.eigvalsh(H) > 1e-8 * np.abs(H).max()))
    ok &= e1 <= 1e-5 and rank == 1 and t1 < 1
    details.append(f"pair rel {e1:.1e} rank {rank}")
    # orthogonal gradients: H = diag(g_i^2)
    t = time.perf_counter()
    G = np.diag([3.0, 0.5, 1.5])
    H = estimate(SampleSet(grad_points=np.zeros((3, 3)) + [[0.1], [0.2], [0.3]], grads=G)).H
    e2, t2 = _rel_trace(H, G @ G), time.perf_counter() - t
    ok &= e2 <= 1e-5 and np.abs(H - G @ G).max() <= 1e-5 * np.trace(G @ G) and t2 < 1
    details.append(f"orthogonal rel {e2:.1e}")
    # no pair or gradient constraints: H = 0
    t = time.perf_counter()
    H = estimate(SampleSet([[0.2, 0.1, 0.0]], [1.0])).H
    t3 = time.perf_counter() - t
    ok &= np.trace(H) == 0 and t3 < 1
    details.append(f"empty trace {np.trace(H):.1e}")
    report(1, ok, ", ".join(details), t1 + t2 + t3)


def test_criterion_02_roof_epsilon_flip(report):
    t = time.perf_counter()
    f = testfns.corrugated_roof()
    X = testfns.roof_grid(21)
    s = SampleSet(X, f(X))
    u0 = active_subspace(estimate(s), 1).U[:, 0]
    sub2 = active_subspace(estimate(s, epsilon=2.0), 1)
    u2, lam = sub2.U[:, 0], sub2.eigenvalues
    sec = time.perf_counter() - t
    ok = abs(u0[0]) < 0.2 and abs(u2[0]) > 0.98 and lam[1] / lam[0] < 0.05 and sec < 60
    report(2, ok, f"|u1| eps=0 {abs(u0[0]):.3f}, eps=2 {abs(u2[0]):.4f}, lam2/lam1 {lam[1] / lam[0]:.2e}", sec)


def test_criterion_03_eigen_dominance(report):
    t = time.perf_counter()
    f = testfns.otl_circuit()
    Y = stream(0, "acceptance.dominance").uniform(-1, 1, (100, f.dim))
    G = f.gradient(Y)
    H = estimate(SampleSet(grad_points=Y, grads=G, dim=f.dim)).H
    lh = np.sort(np.linalg.eigvalsh(H))[::-1]
    lc = np.sort(np.linalg.eigvalsh(avg_outer_product(G)))[::-1]
    slack = float((lh - lc).min())
    sec = time.perf_counter() - t
    report(3, slack >= -1e-7 and sec < 30, f"min slack {slack:.3e}", sec)


def test_criterion_04_convergence_trend(report):
    t = time.perf_counter()
    f = testfns.otl_circuit()

    def fit(Y):
        return estimate(SampleSet(grad_points=Y, grads=f.gradient(Y), dim=f.dim)).H

    Href = fit(stream(0, "acceptance.convergence.ref").uniform(-1, 1, (2000, f.dim)))
    med = []
    for N in (10, 40, 160):
        err = [np.linalg.norm(fit(stream(seed, "acceptance.convergence", N).uniform(-1, 1, (N, f.dim))) - Href)
               / np.linalg.norm(Href) for seed in range(20)]
        med.append(float(np.median(err)))
    sec = time.perf_counter() - t
    ok = med[0] > med[1] > med[2] and sec < 600
    report(4, ok, "median rel error " + " > ".join(f"{m:.3f}" for m in med), sec)


@pytest.mark.parametrize("which", ["scalar", "estimated"])
def test_criterion_05_minimax_vs_grid(report, which):
    t = time.perf_counter()
    s = testfns.sine1d_samples()
    lm = LipschitzMatrix.from_scalar(8.39, 1) if which == "scalar" else estimate(s)
    d = Domain.box(1)
    grid = np.linspace(-1, 1, 100_001)[:, None]
    lo, up = bounds(grid, s, lm)
    iv = set_bounds(d, s, lm)
    err_set = max(abs(iv.lower - lo.min()), abs(iv.upper - up.max()))
    # slices of the 1-D domain are points, so shadow bounds reduce to the pointwise interval
    alphas = np.linspace(-1, 1, 101)
    ent = shadow_bounds([1.0], alphas, d, s, lm)
    idx = np.rint((alphas + 1) / 2 * 100_000).astype(int)
    err_sh = max(np.abs([e.interval.lower for e in ent] - lo[idx]).max(),
                 np.abs([e.interval.upper for e in ent] - up[idx]).max())
    sec = time.perf_counter() - t
    ok = err_set <= 1e-3 and err_sh <= 1e-3 and sec < 30
    report(5, ok, f"{which} L: set-bound error {err_set:.1e}, slice error {err_sh:.1e}", sec)


def test_criterion_06_interval_soundness(report):
    lines, ok, total = [], True, 0.0
    for name in testfns.BENCHMARKS:
        t = time.perf_counter()
        f = testfns.get(name)
        m = f.dim
        Y = stream(0, "acceptance.soundness.grad." + name).uniform(-1, 1, (500, m))
        G = f.gradient(Y)
        lm0 = estimate(SampleSet(grad_points=Y, grads=G, dim=m))
        des = sequential_design(f.domain, 50, FIXED, lm0, seed=0)
        samples = SampleSet(des.points, f(des.points))
        lm = estimate(SampleSet(des.points, samples.values, Y, G))
        X = stream(0, "acceptance.soundness.test." + name).uniform(-1, 1, (10_000, m))
        lo, up = bounds(X, samples, lm)
        y = f(X)
        viol = np.maximum(np.maximum(lo - y, y - up), 0.0)
        rate, worst = float((viol > 0).mean()), float(viol.max())  # outputs normalized to [0, 1]
        sec = time.perf_counter() - t
        total += sec
        good = rate <= 1e-3 and worst <= 1e-3 and sec < 300
        ok &= good
        lines.append(f"{name} {'ok' if good else 'FAIL'} rate {rate:.2%} max {worst:.1e}")
    report(6, ok, "; ".join(lines), total)


def test_criterion_07_design_ratio(report):
    t = time.perf_counter()
    f = testfns.otl_circuit()
    d = f.domain
    Y = np.vstack([corners(d), stream(0, "acceptance.design.grad").uniform(-1, 1, (200 - 2 ** f.dim, f.dim))])
    gs = SampleSet(grad_points=Y, grads=f.gradient(Y), dim=f.dim)
    metrics = {"matrix": estimate(gs), "scalar": LipschitzMatrix.from_scalar(scalar_lipschitz(gs), f.dim)}
    cloud = stream(0, "acceptance.design.cloud").uniform(-1, 1, (10_000, f.dim))
    worst = {}
    for key, lm in metrics.items():
        des = sequential_design(d, 100, FIXED, lm, seed=0)
        worst[key] = float(gap(cloud, SampleSet(des.points, f(des.points)), lm).max())
    ratio = worst["scalar"] / worst["matrix"]
    sec = time.perf_counter() - t
    report(7, ratio >= 2 and sec < 600,
           f"max gap scalar {worst['scalar']:.3f} matrix {worst['matrix']:.3f} ratio {ratio:.2f}", sec)


def test_criterion_08_covering(report):
    t = time.perf_counter()
    one = covering_upper_bound(4.0, Domain.box(1), 1.0)
    L = np.array([[1.0, 0.0], [-1.0, 4.0]])
    sq = Domain.box(2)
    eps = np.geomspace(0.05, 2.0, 20)
    counts = [c.count for c in covering_curve(L, sq, eps)]
    mono = all(a >= b for a, b in zip(counts, counts[1:]))
    ratio = volume_transformed(4.0, sq) / volume_transformed(L, sq)
    sec = time.perf_counter() - t
    ok = one.exact and one.count == 5 and mono and ratio == 4.0 and sec < 60
    report(8, ok, f"1-D count {one.count:g}, monotone {mono} over 20 eps, volume ratio {ratio!r}", sec)


def test_criterion_09_volume_separation(report):
    t = time.perf_counter()
    f = testfns.otl_circuit()
    Y = stream(0, "acceptance.volume").uniform(-1, 1, (200, f.dim))
    gs = SampleSet(grad_points=Y, grads=f.gradient(Y), dim=f.dim)
    lm = estimate(gs)
    Ls = scalar_lipschitz(gs)
    sep = volume_transformed(Ls, f.domain) / volume_transformed(lm, f.domain)
    sec = time.perf_counter() - t
    report(9, 1e4 <= sep <= 1e7 and sec < 120, f"L_scalar^6/|det L| = {sep:.3g}", sec)


INVARIANT_SUITES = [
    "test_lipschitz.py::test_outputs_feasible_jensen_and_sqrt",
    "test_lipschitz.py::test_rotation_and_scale",
    "test_sdp.py::test_feasible_and_rotation_equivariant",
    "test_sdp.py::test_scale_law",
    "test_design.py::test_fixed_design_traces_nonincreasing",
    "test_design.py::test_design_rotation_equivariance",
    "test_design.py::test_error_bound_two_fill",
    "test_testfns.py::test_gradient_matches_finite_differences",
    "test_lipschitz.py::test_fd_gradient_matches_analytic",
]


def test_criterion_10_invariant_suites(report):
    here = Path(__file__).parent
    t = time.perf_counter()
    proc = subprocess.run([sys.executable, "-m", "pytest", "-q", "-p", "no:cacheprovider",
                           *[str(here / s) for s in INVARIANT_SUITES]],
                          capture_output=True, text=True, cwd=here.parent)
    sec = time.perf_counter() - t
    tail = proc.stdout.strip().splitlines()[-1] if proc.stdout.strip() else proc.stderr.strip()[-200:]
    report(10, proc.returncode == 0 and sec < 600, tail, sec)
