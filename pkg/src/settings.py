"""
Runtime configuration for the optimal recovery toolkit.

Settings are immutable; defaults can be overridden from the environment
(OPTREC_SOLVER, OPTREC_TOL) and then from command-line flags.
"""

import os
from dataclasses import dataclass, replace
from typing import Any, Mapping, Optional


SUPPORTED_SOLVERS = ("CLARABEL", "ECOS", "SCS")


@dataclass(frozen=True)
class Settings:
    """
    Numerical and sampling configuration.

    Attributes:
        tol: Solver tolerance (feasibility and gap)
        check_factor: Multiple of tol used by every equality check between
            two solver outputs
        residual_factor: Multiple of tol allowed for the relative primal
            residual of a solution reported as optimal
        combinatorial_cap: Maximum |A|*|B| for sup-inf targets
        sample_box_bound: Coefficient bound for the V-part of approximability samples
        max_rejection_attempts: Candidate budget of the polytope rejection sampler
        sample_chunk_size: Number of samples per derived-seed chunk
        bisection_iterations: Iterations used to rescale kernel directions
        solver: Name of the cvxpy conic solver backend
    """
    tol: float = 1e-8
    check_factor: float = 10.0
    residual_factor: float = 100.0
    combinatorial_cap: int = 10 ** 6
    sample_box_bound: float = 10.0
    max_rejection_attempts: int = 10 ** 6
    sample_chunk_size: int = 8192
    bisection_iterations: int = 40
    solver: str = "CLARABEL"

    def __post_init__(self):
        """Validate settings after initialization."""
        if not self.tol > 0:
            raise ValueError("Settings tol must be positive")
        if self.check_factor < 1:
            raise ValueError("Settings check_factor must be at least 1")
        if self.combinatorial_cap < 1:
            raise ValueError("Settings combinatorial_cap must be positive")
        if not self.sample_box_bound > 0:
            raise ValueError("Settings sample_box_bound must be positive")
        if self.max_rejection_attempts < 1:
            raise ValueError("Settings max_rejection_attempts must be positive")
        if self.sample_chunk_size < 1:
            raise ValueError("Settings sample_chunk_size must be positive")
        if self.bisection_iterations < 1:
            raise ValueError("Settings bisection_iterations must be positive")
        if self.solver.upper() not in SUPPORTED_SOLVERS:
            raise ValueError(
                f"Settings solver must be one of {', '.join(SUPPORTED_SOLVERS)}, got {self.solver}"
            )

    @property
    def check_tol(self) -> float:
        """Absolute slack used when comparing two solver outputs."""
        return self.check_factor * self.tol

    @classmethod
    def from_env(cls, environ: Optional[Mapping[str, str]] = None) -> "Settings":
        """
        Build settings from environment variables.

        Args:
            environ: Mapping to read from. Defaults to os.environ.

        Returns:
            Settings with OPTREC_SOLVER / OPTREC_TOL applied when present
        """
        env = os.environ if environ is None else environ
        overrides: dict = {}
        if env.get("OPTREC_SOLVER"):
            overrides["solver"] = env["OPTREC_SOLVER"].upper()
        if env.get("OPTREC_TOL"):
            try:
                overrides["tol"] = float(env["OPTREC_TOL"])
            except ValueError:
                raise ValueError(f"OPTREC_TOL is not a number: {env['OPTREC_TOL']}")
        return cls(**overrides)

    def with_overrides(self, **overrides: Any) -> "Settings":
        """Return a copy with the non-None overrides applied."""
        changes = {key: value for key, value in overrides.items() if value is not None}
        return replace(self, **changes) if changes else self
