"""
Exception hierarchy for the optimal recovery toolkit.

Validation failures subclass ValueError so callers that only care about
bad input can keep catching ValueError. Every class carries the exit code
the command-line front end reports for it.
"""

from typing import Dict, List, Optional, Sequence


class RecoveryError(Exception):
    """Base class for all domain errors raised by the toolkit."""
    exit_code = 1


class DimensionMismatchError(RecoveryError, ValueError):
    """Raised when vectors or matrices do not share the expected dimension."""
    exit_code = 1


class CombinatorialCapError(RecoveryError, ValueError):
    """Raised when a sup-inf family product |A|*|B| exceeds the configured cap."""
    exit_code = 1


class ProblemFormatError(RecoveryError, ValueError):
    """Raised when a problem or estimator file does not follow the schema."""
    exit_code = 1


class PreconditionError(RecoveryError, ValueError):
    """Raised when an operation's mathematical precondition does not hold."""
    exit_code = 1


class HashMismatchError(RecoveryError):
    """Raised when an estimator file was built for a different problem."""
    exit_code = 1


class SamplingError(RecoveryError):
    """Raised when a model set cannot be sampled (unbounded or too thin)."""
    exit_code = 1


class InfeasibleProgramError(RecoveryError):
    """
    Raised when an assembled program has no feasible point.

    Attributes:
        branch: Label of the first branch found infeasible on its own
            (e.g. "i*=2" or "(a*,b*)=(0,1)"), None when undiagnosed
        direction: Constant part of the offending support direction, if known
    """
    exit_code = 2

    def __init__(self, message: str, branch: Optional[str] = None,
                 direction: Optional[Sequence[float]] = None):
        super().__init__(message)
        self.branch = branch
        self.direction = None if direction is None else [float(v) for v in direction]


class NumericalTroubleError(RecoveryError):
    """
    Raised when the solver cannot certify its answer.

    Attributes:
        residuals: Primal/dual residuals and gap reported with the failure
    """
    exit_code = 3

    def __init__(self, message: str, residuals: Optional[Dict[str, float]] = None):
        super().__init__(message)
        self.residuals = dict(residuals or {})


class VerificationFailedError(RecoveryError):
    """
    Raised when a consistency report contains failing checks.

    Attributes:
        failed_checks: Names of the checks that failed
    """
    exit_code = 4

    def __init__(self, message: str, failed_checks: List[str]):
        super().__init__(message)
        self.failed_checks = list(failed_checks)
