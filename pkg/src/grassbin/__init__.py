"""grassbin: multivariate binary distributions with determinant closed forms.

A p-dimensional binary random vector is parameterized by a square matrix
whose diagonal holds the marginal means and whose off-diagonal products give
the covariances. Joint, marginal, and conditional probabilities, central
moments, and entropies all reduce to determinants and Schur complements, so
no summation over the 2^p states is needed for evaluation. The package adds
exact chain-rule sampling, moment-targeted maximum-entropy construction,
MAP fitting with a Dirichlet pseudo-count prior, a brute-force enumeration
oracle for cross-validation, and a CLI.

Hot kernels run on a compiled Cython core when available, with a NumPy
fallback selected at import (see grassbin.kernel_backend()).
"""

from ._kernels import BACKEND as _BACKEND
from .errors import (
    DimensionMismatchError,
    DimensionTooLargeError,
    EmptyIndexSetError,
    GrassbinError,
    IndexOutOfRangeError,
    InfeasibleTargetError,
    InvalidConditionalMeanError,
    InvalidModelError,
    MeanOutOfRangeError,
    NonConvergenceError,
    NonPositiveProbabilityError,
    ObservedIndexError,
    SameIndexError,
    SingularBlockError,
    SingularMatrixError,
    SingularSigmaError,
    TooFewSamplesError,
    ZeroEvidenceError,
)
from .model import GrassmannBinary, Observation, Validity, from_lambda, from_sigma
from .sampling import RNG_ALGORITHM_ID, Dataset, sample, sample_one, seeded_rng
from .estimation import (
    FitConfig,
    FitReport,
    MomentTarget,
    StatMoments,
    StatSummary,
    canonicalize_gauge,
    fit_map,
    fit_max_entropy,
    log_posterior,
    summarize,
    theoretical_stat_moments,
)

__version__ = "0.1.0"

__all__ = [
    "GrassmannBinary", "Observation", "Validity", "from_sigma", "from_lambda",
    "Dataset", "sample", "sample_one", "seeded_rng", "RNG_ALGORITHM_ID",
    "StatSummary", "StatMoments", "MomentTarget", "FitConfig", "FitReport",
    "summarize", "theoretical_stat_moments", "fit_max_entropy", "fit_map",
    "log_posterior", "canonicalize_gauge",
    "GrassbinError", "DimensionMismatchError", "DimensionTooLargeError",
    "IndexOutOfRangeError", "EmptyIndexSetError", "SameIndexError",
    "ObservedIndexError", "SingularMatrixError", "SingularSigmaError",
    "SingularBlockError", "MeanOutOfRangeError", "InvalidModelError",
    "ZeroEvidenceError", "InvalidConditionalMeanError", "TooFewSamplesError",
    "InfeasibleTargetError", "NonConvergenceError", "NonPositiveProbabilityError",
    "kernel_backend",
]


def kernel_backend() -> str:
    """Name of the active kernel backend: "cython" or "numpy"."""
    return _BACKEND
