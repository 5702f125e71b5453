"""Log-barrier interior point method for trace minimization over the PSD cone.

Solves

    minimize   trace(H)
    subject to h_i^T H h_i >= c_i          (scalar constraints)
               H - g_k g_k^T  is PSD        (matrix constraints)
               H is PSD

by following the central path of

    trace(H) + w * ( -sum log(h_i^T H h_i - c_i)
                     -sum log det(H - g_k g_k^T) - log det H )

with damped Newton steps in the ``m(m+1)/2`` free entries of ``H``.  The
weight ``w`` is the barrier parameter divided by the total barrier degree, so
the duality gap at a central point equals the barrier parameter.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .lp import MAX_ITER, NUMERICAL, OPTIMAL, SolveReport


class SdpProblem:
    """Constraint data for :func:`solve_sdp_tracemin`.

    Parameters
    ----------
    dim : int
    scalar_h : array_like, shape (k, dim), optional
    scalar_c : array_like, shape (k,), optional
        Rows encode ``h^T H h >= c``; ``c`` must be nonnegative.
    grads : array_like, shape (N, dim), optional
        Rows encode ``g g^T <= H`` in the PSD order.

    Zero-``h`` rows with ``c == 0`` and constraints with ``c == 0`` are
    implied by PSD-ness and are dropped; zero-``h`` rows with ``c > 0`` are
    infeasible and rejected.
    """

    def __init__(self, dim, scalar_h=None, scalar_c=None, grads=None):
        self.dim = m = int(dim)
        if m < 1:
            raise ValueError("dim must be positive")
        h = np.zeros((0, m)) if scalar_h is None else np.asarray(scalar_h, dtype=float).reshape(-1, m)
        c = np.zeros(0) if scalar_c is None else np.asarray(scalar_c, dtype=float).ravel()
        if h.shape[0] != c.size:
            raise ValueError("scalar_h and scalar_c lengths differ")
        if np.any(c < 0) or not np.all(np.isfinite(c)):
            raise ValueError("scalar constraint levels must be finite and nonnegative")
        hn = np.linalg.norm(h, axis=1)
        if np.any((hn == 0) & (c > 0)):
            raise ValueError("constraint with h = 0 and c > 0 is infeasible")
        keep = (hn > 0) & (c > 0)
        self.scalar_h, self.scalar_c = h[keep], c[keep]
        g = np.zeros((0, m)) if grads is None else np.asarray(grads, dtype=float).reshape(-1, m)
        if not np.all(np.isfinite(g)):
            raise ValueError("gradients must be finite")
        self.grads = g[np.linalg.norm(g, axis=1) > 0]

    @property
    def n_scalar(self) -> int:
        return self.scalar_c.size

    @property
    def n_matrix(self) -> int:
        return self.grads.shape[0]


@dataclass
class SdpOptions:
    mu_start: float = 1.0
    mu_final: float = 1e-9
    mu_factor: float = 10.0
    max_iter: int = 500
    armijo: float = 0.01
    shrink: float = 0.5
    center_tol: float = 1e-4
    extra: dict = field(default_factory=dict)


class _Svec:
    """Orthonormal coordinates for symmetric matrices."""

    def __init__(self, m):
        self.m = m
        iu, ju = np.triu_indices(m)
        self.n = iu.size
        P = np.zeros((m * m, self.n))
        r2 = np.sqrt(0.5)
        for k, (i, j) in enumerate(zip(iu, ju)):
            if i == j:
                P[i * m + i, k] = 1.0
            else:
                P[i * m + j, k] = r2
                P[j * m + i, k] = r2
        self.P = P

    def vec(self, M):
        return self.P.T @ M.reshape(-1) if M.ndim == 2 else M.reshape(M.shape[0], -1) @ self.P

    def mat(self, v):
        return (self.P @ v).reshape(self.m, self.m)


class _Barrier:
    def __init__(self, D, c, G, sv: _Svec):
        self.sv = sv
        self.A = sv.vec(np.einsum("ki,kj->kij", D, D)) if D.shape[0] else np.zeros((0, sv.n))
        self.c = c
        self.GG = np.einsum("ki,kj->kij", G, G)
        self.trace_vec = sv.vec(np.eye(sv.m))
        self.theta = c.size + sv.m * (G.shape[0] + 1)

    def value(self, v):
        """Barrier value, or ``None`` outside the interior."""
        H = self.sv.mat(v)
        s = self.A @ v - self.c
        if np.any(s <= 0):
            return None
        try:
            Lh = np.linalg.cholesky(H)
            Ls = np.linalg.cholesky(H[None] - self.GG) if self.GG.shape[0] else None
        except np.linalg.LinAlgError:
            return None
        val = -np.sum(np.log(s)) - 2.0 * np.sum(np.log(np.diagonal(Lh)))
        if Ls is not None:
            val -= 2.0 * np.sum(np.log(np.diagonal(Ls, axis1=1, axis2=2)))
        return val

    def jacobian(self, v):
        """Factor the barrier Hessian as ``J^T J`` with gradient ``-J^T e``."""
        m = self.sv.m
        H = self.sv.mat(v)
        blocks = []
        ones = []
        if self.c.size:
            s = self.A @ v - self.c
            blocks.append(self.A / s[:, None])
            ones.append(np.ones(s.size))
        mats = H[None] if not self.GG.shape[0] else np.concatenate([H[None], H[None] - self.GG])
        Lc = np.linalg.cholesky(mats)
        eye = np.broadcast_to(np.eye(m), mats.shape)
        R = np.linalg.solve(Lc, eye)
        # kron(R, R) @ P for every block, stacked
        K = np.einsum("kia,kjb->kijab", R, R).reshape(mats.shape[0], m * m, m * m) @ self.sv.P
        blocks.append(K.reshape(-1, self.sv.n))
        ones.append(np.tile(np.eye(m).reshape(-1), mats.shape[0]))
        return np.vstack(blocks), np.concatenate(ones)


def _newton_qr(J, e, t, w):
    """Newton step for ``t@v + w*Phi`` given ``Phi`` Hessian ``J^T J`` and gradient ``-J^T e``.

    Returns ``(step, centering_step, decrement)`` where ``centering_step``
    solves ``Hess d = grad Phi`` (the central-path tangent direction).
    """
    Q, R = np.linalg.qr(J)
    if not np.all(np.isfinite(R)):
        return None
    dg = np.abs(np.diag(R))
    if dg.min() <= 1e-300 or dg.min() < 1e-15 * dg.max():
        return None
    qe = Q.T @ e
    u = np.linalg.solve(R.T, t) / w
    rhs = qe - u
    step = np.linalg.solve(R, rhs)
    tang = -np.linalg.solve(R, qe)
    dec = w * float(rhs @ rhs)
    return step, tang, dec


def _predict(bar, v, tang, w, w_next, shrink):
    """Extrapolate along the central path tangent to the next weight."""
    d = tang * (1.0 - w_next / w)
    f0 = bar.trace_vec @ v + w_next * bar.value(v)
    t = 1.0
    for _ in range(30):
        vn = v + t * d
        pn = bar.value(vn)
        if pn is not None and bar.trace_vec @ vn + w_next * pn < f0:
            return vn
        t *= shrink
    return v


def _barrier_solve(D, c, G, sv, opts, start, budget):
    """Central-path following on one constraint set (normalized units)."""
    bar = _Barrier(D, c, G, sv)
    v = sv.vec(start)
    if bar.value(v) is None:
        return start, NUMERICAL, 0, np.inf, "starting point not strictly feasible"
    mu = opts.mu_start
    its = 0
    status = OPTIMAL
    message = ""
    lam2 = 0.0
    tang = None
    while True:
        w = mu / bar.theta
        phi = bar.value(v)
        for _ in range(100):
            if its >= budget:
                status, message = MAX_ITER, "Newton iteration cap reached"
                break
            J, e = bar.jacobian(v)
            out = _newton_qr(J, e, bar.trace_vec, w)
            if out is None:
                status, message = NUMERICAL, "singular Newton system"
                break
            step, tang, dec = out
            its += 1
            lam2 = dec / w
            # squared Newton decrement in barrier units, with a floor at
            # the resolution of the objective
            if dec <= max(opts.center_tol * w, 1e-15 * abs(bar.trace_vec @ v)):
                break
            F0 = bar.trace_vec @ v + w * phi
            t = 1.0
            accepted = False
            for _ in range(80):
                vn = v + t * step
                pn = bar.value(vn)
                if pn is not None and bar.trace_vec @ vn + w * pn <= F0 - opts.armijo * t * dec:
                    accepted = True
                    break
                t *= opts.shrink
            if not accepted:
                break
            v, phi = vn, pn
        if status != OPTIMAL or mu <= opts.mu_final * (1 + 1e-12):
            break
        mu_next = max(mu / opts.mu_factor, opts.mu_final)
        if tang is not None:
            v = _predict(bar, v, tang, w, mu_next / bar.theta, opts.shrink)
        mu = mu_next
    H = sv.mat(v)
    H = 0.5 * (H + H.T)
    # duality gap estimate for a slightly off-center point
    gap = float(w * (bar.theta + np.sqrt(bar.theta * lam2)) / max(float(np.trace(H)), 1e-300))
    return H, status, its, gap, message


def _violations(H, D, c, G):
    """Relative violation of every scalar and matrix constraint (positive = violated)."""
    scal = 1.0 - np.einsum("ki,ij,kj->k", D, H, D) / c if c.size else np.zeros(0)
    if G.shape[0]:
        lam, V = np.linalg.eigh(H)
        tr = max(lam.sum(), 1e-300)
        keep = lam > 1e-14 * tr
        # g g^T <= H  iff  g in range(H) and g^T H^+ g <= 1
        proj = G @ V
        quad = np.sum(proj[:, keep] ** 2 / lam[keep], axis=1)
        outside = np.sum(proj[:, ~keep] ** 2, axis=1)
        mat = np.maximum(quad - 1.0, np.where(outside > 1e-14, np.inf, 0.0))
    else:
        mat = np.zeros(0)
    return scal, mat


def solve_sdp_tracemin(prob: SdpProblem, H0: Optional[np.ndarray] = None,
                       opts: Optional[SdpOptions] = None):
    """Minimal-trace PSD matrix satisfying the constraints of ``prob``.

    The barrier method runs on a working subset of constraints which grows
    by the most violated ones until every constraint holds; at the optimum
    only a few constraints are active, and a small working set keeps the
    barrier degree (and hence the Newton iteration count) low.

    Parameters
    ----------
    prob : SdpProblem
    H0 : ndarray, optional
        A feasible matrix (for example from a rank-one update initializer).
        It is blended with a scaled identity to give a well-centered
        strictly feasible start on the first working set.
    opts : SdpOptions, optional

    Returns
    -------
    H : ndarray, shape (m, m)
        Symmetric PSD minimizer (final eigenvalue clip applied).
    report : SolveReport
    """
    opts = opts or SdpOptions()
    m = prob.dim
    if prob.n_scalar == 0 and prob.n_matrix == 0:
        return np.zeros((m, m)), SolveReport(OPTIMAL, 0, 0.0, 0.0, "no active constraints")

    hn2 = np.sum(prob.scalar_h ** 2, axis=1)
    D = prob.scalar_h / np.sqrt(hn2)[:, None]
    c = prob.scalar_c / hn2
    g2 = np.sum(prob.grads ** 2, axis=1)
    # rescale so that the largest single requirement is 1
    scale = max(c.max(initial=0.0), g2.max(initial=0.0))
    c = c / scale
    G = prob.grads / np.sqrt(scale)
    sv = _Svec(m)

    chunk = max(2 * sv.n, 16)
    ws = np.argsort(-c, kind="stable")[:chunk]
    wg = np.argsort(-g2, kind="stable")[:chunk]
    alpha = 2.0 * (c.max(initial=0.0) + (G ** 2).sum(axis=1).max(initial=0.0))
    start = alpha * np.eye(m)
    if H0 is not None:
        H0 = np.asarray(H0, dtype=float) / scale
        # midpoint of 2*H0 and the identity start, both strictly feasible
        cand = 0.5 * (H0 + H0.T) + 0.5 * start
        if _Barrier(D, c, G, sv).value(sv.vec(cand)) is not None:
            start = cand

    its = 0
    rounds = 0
    tol = 1e-9
    while True:
        rounds += 1
        Hn, status, k, kkt, message = _barrier_solve(D[ws], c[ws], G[wg], sv, opts, start,
                                                     opts.max_iter - its)
        its += k
        vs, vg = _violations(Hn, D, c, G)
        bad_s = np.flatnonzero(vs > tol)
        bad_g = np.flatnonzero(vg > tol)
        bad_s = np.setdiff1d(bad_s, ws)
        bad_g = np.setdiff1d(bad_g, wg)
        if status != OPTIMAL or (bad_s.size == 0 and bad_g.size == 0):
            break
        ws = np.union1d(ws, bad_s[np.argsort(-vs[bad_s], kind="stable")[:chunk]])
        wg = np.union1d(wg, bad_g[np.argsort(-vg[bad_g], kind="stable")[:chunk]])

    if status != OPTIMAL and (bad_s.size or bad_g.size):
        # fall back to a point feasible for every constraint
        Hn = Hn + start
        message += "; returned strictly feasible fallback"
    lam, V = np.linalg.eigh(Hn)
    H = (V * np.maximum(lam, 0.0)) @ V.T
    H = 0.5 * (H + H.T) * scale
    message = (message + f"; {rounds} working-set rounds").lstrip("; ")
    return H, SolveReport(status, its, float(np.trace(H)), kkt, message)
