"""Lipschitz matrix estimation and its uses.

Estimate a squared Lipschitz matrix ``H = L^T L`` from function samples and
gradients by trace minimization, then use it for uncertainty bounds,
space-filling design, active-subspace reduction and covering-number analysis.
"""
__version__ = "0.1.0"
SCHEMA_VERSION = "1.0"

from .geometry import Domain  # noqa: E402
from .lipschitz import LipschitzMatrix, SampleSet, estimate, scalar_lipschitz  # noqa: E402

__all__ = ["Domain", "SampleSet", "LipschitzMatrix", "estimate", "scalar_lipschitz",
           "__version__", "SCHEMA_VERSION"]
