"""Exception and warning types raised across the package."""

from __future__ import annotations


class MomentflowError(Exception):
    """Base class for every error raised by momentflow."""


class FamilyViolation(MomentflowError):
    """A moment family fails log-convexity at a tested index."""


class KernelError(MomentflowError):
    pass


class CancellationFailure(KernelError):
    """The requested value is lost to cancellation at working precision."""

    def __init__(self, message: str, ratio: float = float("inf"), term_index: int | None = None):
        super().__init__(message)
        self.ratio = ratio
        self.term_index = term_index


class NoConvergence(KernelError):
    pass


class EmptySeries(KernelError, ValueError):
    pass


class OverflowGuard(KernelError, OverflowError):
    pass


class SpectralError(MomentflowError):
    pass


class RootFindingFailure(SpectralError):
    pass


class RankAmbiguity(SpectralError):
    """A pivot sits too close to the rank threshold to decide the rank."""


class HintRejected(SpectralError):
    pass


class SingularFundamentalMatrix(MomentflowError):
    pass


class InsufficientData(MomentflowError, ValueError):
    pass


class FitFailure(MomentflowError):
    pass


class ConfigError(MomentflowError, ValueError):
    pass


class ZeroEigenvalueWarning(UserWarning):
    """Zero eigenvalues were excluded from a sector computation."""
