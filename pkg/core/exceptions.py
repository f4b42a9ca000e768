"""
Numerical failure types raised by the analysis services.

Management commands map every HarqAnalysisError to exit code 2.
"""


class HarqAnalysisError(Exception):
    """Base class for numerical failures in the analysis services."""


class NonConvergence(HarqAnalysisError):
    """An iterative or adaptive method exhausted its evaluation budget."""

    def __init__(self, message: str, budget: int = 0, error_estimate: float = float('nan')):
        super().__init__(message)
        self.budget = budget
        self.error_estimate = error_estimate


class SeriesUnstable(HarqAnalysisError):
    """The high-SNR outage series lost its precision to cancellation or overflow."""


class GammaKernelFailure(HarqAnalysisError):
    """Γ(a, x) could not be evaluated for any ε of the upper-bound grid."""


class EmptyFeasibleSet(HarqAnalysisError):
    """The optimizer bounds admit no scheme with valid sub-codeword lengths."""


class NonMonotoneOutage(HarqAnalysisError, ValueError):
    """Outage probabilities increase with the round index."""
