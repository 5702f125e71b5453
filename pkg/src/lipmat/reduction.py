"""Subspace-based dimension reduction from a squared Lipschitz matrix."""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

from .lipschitz import LipschitzMatrix, SampleSet

SYM_TOL = 1e-8


@dataclass
class Subspace:
    """Orthonormal basis ``U`` of a dominant eigenspace and the full spectrum."""

    U: np.ndarray
    eigenvalues: np.ndarray

    @property
    def dim(self) -> int:
        return self.U.shape[1]

    def projector(self) -> np.ndarray:
        return self.U @ self.U.T

    def to_dict(self) -> dict:
        return {"U": self.U.tolist(), "eigenvalues": self.eigenvalues.tolist()}


def _symmetric(H):
    H = np.asarray(H, dtype=float)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise ValueError("matrix must be square")
    asym = np.abs(H - H.T).max(initial=0.0)
    scale = max(np.abs(H).max(initial=0.0), 1.0)
    if asym > SYM_TOL * scale:
        raise ValueError(f"matrix is not symmetric (asymmetry {asym:.3g})")
    if asym > 0:
        warnings.warn(f"symmetrizing matrix with asymmetry {asym:.3g}", RuntimeWarning, stacklevel=3)
    return 0.5 * (H + H.T)


def _fix_signs(U):
    """Make the largest-magnitude entry of every column positive."""
    idx = np.argmax(np.abs(U), axis=0)
    sgn = np.sign(U[idx, np.arange(U.shape[1])])
    sgn[sgn == 0] = 1.0
    return U * sgn


def active_subspace(H, n: int) -> Subspace:
    """Top-``n`` eigenvectors of ``H`` (a matrix or a LipschitzMatrix)."""
    if isinstance(H, LipschitzMatrix):
        H = H.H
    H = _symmetric(H)
    m = H.shape[0]
    if not 1 <= n <= m:
        raise ValueError(f"n must lie in [1, {m}]")
    lam, V = np.linalg.eigh(H)
    order = np.argsort(lam)[::-1]
    lam, V = lam[order], V[:, order]
    if lam[-1] < -1e-9 * max(abs(lam[0]), 1.0):
        raise ValueError("matrix is not positive semidefinite")
    return Subspace(_fix_signs(V[:, :n]), np.maximum(lam, 0.0))


def avg_outer_product(grads) -> np.ndarray:
    """Monte Carlo average ``(1/N) sum g g^T`` of the gradient outer products."""
    G = np.atleast_2d(np.asarray(grads, dtype=float))
    if G.shape[0] < 1:
        raise ValueError("need at least one gradient")
    C = G.T @ G / G.shape[0]
    return 0.5 * (C + C.T)


def _basis(U):
    if isinstance(U, Subspace):
        return U.U
    U = np.asarray(U, dtype=float)
    return U[:, None] if U.ndim == 1 else U


def ridge_error_bound(lm, U, eps: float, delta: float, diam: float) -> float:
    """``eps + 2 delta + sigma_max(L (I - U U^T)) diam`` for a ridge approximation.

    ``eps`` bounds the mismatch at the samples and ``delta`` the fill
    distance of the samples in the metric ``L U U^T``.
    """
    if min(eps, delta, diam) < 0:
        raise ValueError("eps, delta and diam must be nonnegative")
    L = lm.L if isinstance(lm, LipschitzMatrix) else np.asarray(lm, dtype=float)
    B = _basis(U)
    P = np.eye(L.shape[0]) - B @ B.T
    smax = np.linalg.norm(L @ P, 2)
    return float(eps + 2.0 * delta + smax * diam)


def shadow_data(u, s: SampleSet) -> List[Tuple[float, float]]:
    """``(u @ x_j, y_j)`` pairs sorted by projection."""
    u = np.asarray(u, dtype=float).ravel()
    if u.size != s.dim:
        raise ValueError("u and samples differ in dimension")
    if abs(np.linalg.norm(u) - 1.0) > 1e-9:
        raise ValueError("u must be a unit vector")
    proj = s.points @ u
    order = np.argsort(proj, kind="stable")
    return [(float(proj[i]), float(s.values[i])) for i in order]


def subspace_angle(U1, U2) -> np.ndarray:
    """Principal angles (radians, ascending) between the column spans of ``U1`` and ``U2``."""
    A, B = _basis(U1), _basis(U2)
    if A.shape[0] != B.shape[0]:
        raise ValueError("subspaces live in different dimensions")
    if B.shape[1] > A.shape[1]:
        A, B = B, A
    Qa, _ = np.linalg.qr(A)
    Qb, _ = np.linalg.qr(B)
    cos = np.sort(np.linalg.svd(Qa.T @ Qb, compute_uv=False))[::-1]
    sin = np.sort(np.linalg.svd(Qb - Qa @ (Qa.T @ Qb), compute_uv=False))
    # sines resolve small angles, cosines large ones
    ang = np.where(cos ** 2 >= 0.5, np.arcsin(np.clip(sin, 0.0, 1.0)), np.arccos(np.clip(cos, 0.0, 1.0)))
    return np.sort(ang)
