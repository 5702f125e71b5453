"""Benchmark functions on normalized domains ``[-1, 1]^m`` with analytic gradients.

Each :class:`TestFunction` carries its native box and output range; the
normalized view maps inputs affinely from ``[-1, 1]^m`` and outputs affinely to
``[0, 1]`` (for the toy functions the output map is the identity).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence

import numpy as np

from .._random import stream
from ..geometry import Domain
from ..lipschitz import SampleSet
from . import constants as K
from . import functions as F


@dataclass(frozen=True)
class TestFunction:
    """A scalar function with its gradient and normalization maps.

    Attributes
    ----------
    native_domain : Domain
        Box in physical units.
    fn, grad : callable
        Native-unit evaluation on an ``(n, m)`` array of rows.
    out_range : (float, float) or None
        ``(min, max)`` used to map outputs to ``[0, 1]``; ``None`` keeps
        outputs unchanged.
    """

    __test__ = False  # not a pytest class

    name: str
    dim: int
    native_domain: Domain
    fn: Callable
    grad: Callable
    out_range: Optional[tuple] = None
    description: str = ""

    @property
    def domain(self) -> Domain:
        return Domain.box(self.dim)

    @property
    def _in_scale(self):
        d = self.native_domain
        return 0.5 * (d.upper - d.lower)

    @property
    def _out(self):
        if self.out_range is None:
            return 0.0, 1.0
        lo, hi = self.out_range
        return lo, hi - lo

    def to_native(self, Z):
        d = self.native_domain
        return d.lower + (np.asarray(Z, dtype=float) + 1.0) * self._in_scale

    def to_normalized(self, X):
        d = self.native_domain
        return (np.asarray(X, dtype=float) - d.lower) / self._in_scale - 1.0

    def _rows(self, pts):
        X = np.asarray(pts, dtype=float)
        single = X.ndim == 1
        X = np.atleast_2d(X)
        if X.shape[1] != self.dim:
            raise ValueError(f"{self.name} expects points of dimension {self.dim}")
        return X, single

    def _check(self, X, normalized, strict):
        if not strict:
            return
        d = self.domain if normalized else self.native_domain
        tol = 1e-12 * np.maximum(np.abs(d.upper - d.lower), 1.0)
        if np.any(X < d.lower - tol) or np.any(X > d.upper + tol):
            raise ValueError(f"point outside the {'normalized' if normalized else 'native'} domain")

    def __call__(self, pts, normalized: bool = True, strict: bool = True):
        return evaluate_batch(self, pts, normalized, strict)

    def gradient(self, pts, normalized: bool = True, strict: bool = True):
        return gradient_batch(self, pts, normalized, strict)

    def samples(self, count: int, seed: int = 0, gradients: Optional[int] = None) -> SampleSet:
        """Uniform random values (and ``gradients`` random gradients) on the normalized box."""
        rng = stream(seed, "testfns." + self.name)
        X = rng.uniform(-1.0, 1.0, size=(count, self.dim))
        if gradients is None:
            return SampleSet(X, self(X), dim=self.dim)
        Y = rng.uniform(-1.0, 1.0, size=(gradients, self.dim))
        return SampleSet(X, self(X), Y, self.gradient(Y), dim=self.dim)


def evaluate_batch(f: TestFunction, pts, normalized: bool = True, strict: bool = True):
    """Vectorized values; with ``normalized`` both affine maps are applied."""
    X, single = f._rows(pts)
    f._check(X, normalized, strict)
    if normalized:
        shift, scale = f._out
        val = (f.fn(f.to_native(X)) - shift) / scale
    else:
        val = f.fn(X)
    val = np.asarray(val, dtype=float)
    return float(val[0]) if single else val


def gradient_batch(f: TestFunction, pts, normalized: bool = True, strict: bool = True):
    """Vectorized gradients, chain rule applied for the normalized view."""
    X, single = f._rows(pts)
    f._check(X, normalized, strict)
    if normalized:
        _, scale = f._out
        G = f.grad(f.to_native(X)) * f._in_scale / scale
    else:
        G = f.grad(X)
    G = np.asarray(G, dtype=float)
    return G[0] if single else G


def _box(bounds):
    b = np.asarray(bounds, dtype=float)
    return Domain.box(b[:, 0], b[:, 1])


def otl_circuit() -> TestFunction:
    return TestFunction("otl_circuit", 6, _box(K.OTL_CIRCUIT_BOUNDS), F.otl_circuit, F.otl_circuit_grad,
                        K.OTL_CIRCUIT_RANGE, "output voltage of an output transformerless push-pull circuit")


def piston() -> TestFunction:
    return TestFunction("piston", 7, _box(K.PISTON_BOUNDS), F.piston, F.piston_grad,
                        K.PISTON_RANGE, "cycle time of a piston in a cylinder")


def borehole() -> TestFunction:
    return TestFunction("borehole", 8, _box(K.BOREHOLE_BOUNDS), F.borehole, F.borehole_grad,
                        K.BOREHOLE_RANGE, "water flow rate through a borehole")


def wing_weight() -> TestFunction:
    return TestFunction("wing_weight", 10, _box(K.WING_WEIGHT_BOUNDS), F.wing_weight, F.wing_weight_grad,
                        K.WING_WEIGHT_RANGE, "weight of a light aircraft wing")


def golinski_volume() -> TestFunction:
    return TestFunction("golinski_volume", 6, _box(K.GOLINSKI_BOUNDS), F.golinski_volume,
                        F.golinski_volume_grad, K.GOLINSKI_RANGE,
                        "speed reducer volume, pinion teeth fixed at 17")


def sine1d() -> TestFunction:
    return TestFunction("sine1d", 1, Domain.box(1), F.sine1d, F.sine1d_grad, None, "sin(3 pi x)")


def corrugated_roof() -> TestFunction:
    return TestFunction("corrugated_roof", 2, Domain.box(2), F.corrugated_roof, F.corrugated_roof_grad,
                        None, "5 x1 + sin(10 pi x2)")


def linear_ridge(a: Sequence[float] = (1.0, 0.0)) -> TestFunction:
    a = np.asarray(a, dtype=float).ravel()
    if a.size < 1:
        raise ValueError("need a nonempty direction")
    a.setflags(write=False)

    def fn(X):
        return X @ a

    def grad(X):
        return np.broadcast_to(a, X.shape).copy()

    return TestFunction("linear_ridge", a.size, Domain.box(a.size), fn, grad, None, "a @ x")


def quadratic(m: int = 2) -> TestFunction:
    if m < 1:
        raise ValueError("m must be >= 1")
    c = 0.5 / np.sqrt(m)

    def fn(X):
        return c * np.sum(X * X, axis=1)

    def grad(X):
        return 2.0 * c * X

    return TestFunction("quadratic", m, Domain.box(m), fn, grad, None, "x @ x / (2 sqrt(m))")


BENCHMARKS = ("otl_circuit", "piston", "borehole", "wing_weight", "golinski_volume")
_FACTORIES = {
    "otl_circuit": otl_circuit, "piston": piston, "borehole": borehole, "wing_weight": wing_weight,
    "golinski_volume": golinski_volume, "sine1d": sine1d, "corrugated_roof": corrugated_roof,
    "linear_ridge": linear_ridge, "quadratic": quadratic,
}


def catalog() -> List[TestFunction]:
    """All functions with default parameters."""
    return [make() for make in _FACTORIES.values()]


def get(name: str, **kwargs) -> TestFunction:
    try:
        return _FACTORIES[name](**kwargs)
    except KeyError:
        raise KeyError(f"unknown test function {name!r}; choose from {sorted(_FACTORIES)}") from None


def names() -> List[str]:
    return list(_FACTORIES)


def roof_grid(n: int = 21) -> np.ndarray:
    """Cell-centered ``n x n`` grid on ``[-1, 1]^2``.

    Vertex grids with an even number of intervals put every node on a zero of
    ``sin(10 pi x2)``, so the oscillation would be invisible in the samples.
    """
    t = (np.arange(n) + 0.5) / n * 2.0 - 1.0
    A, B = np.meshgrid(t, t, indexing="ij")
    return np.column_stack([A.ravel(), B.ravel()])


def sine1d_samples() -> SampleSet:
    """Fixed ten-sample set of ``sin(3 pi x)`` used for the 1-D bounds scenario."""
    X = np.asarray(K.SINE1D_SAMPLES)[:, None]
    return SampleSet(X, F.sine1d(X))
