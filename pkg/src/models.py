"""
Data models for the optimal recovery toolkit.

This module defines the core data structures used throughout the package:
linear functionals and observation maps, the target functionals to be
estimated, the (sup-)affine estimators produced by synthesis, the two model
sets, observation noise, assembled conic programs and their solutions.

All models are immutable once constructed; array fields are copied and
marked read-only.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from src.errors import DimensionMismatchError


# Enumerations

class TargetKind(Enum):
    """Structure of a target functional."""
    SUP = "sup"
    SUP_INF = "sup_inf"


class EstimatorKind(Enum):
    """Structure of an estimation functional."""
    SUP_AFFINE = "sup_affine"
    SUP_INF_AFFINE = "sup_inf_affine"


class ConeKind(Enum):
    """Cone attached to a segment of rows of a conic program."""
    ZERO = "zero"
    NONNEG = "nonneg"
    SECOND_ORDER = "soc"


class SolveStatus(Enum):
    """Outcome of a conic solve."""
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    NUMERICAL_TROUBLE = "numerical_trouble"


NOISE_ORDERS = ("1", "2", "inf")

Families = Tuple[Tuple[int, ...], ...]


# Array helpers

def frozen_array(values: Any, name: str, ndim: int) -> np.ndarray:
    """
    Copy values into a read-only float array of the given rank.

    Raises:
        ValueError: If the rank is wrong or an entry is NaN/Inf
    """
    array = np.array(values, dtype=float)
    if array.ndim != ndim:
        raise DimensionMismatchError(f"{name} must have {ndim} dimension(s), got shape {array.shape}")
    if not np.all(np.isfinite(array)):
        raise ValueError(f"{name} must have finite entries")
    array.setflags(write=False)
    return array


def _freeze_families(families: Sequence[Sequence[int]]) -> Families:
    return tuple(tuple(sorted(int(i) for i in family)) for family in families)


# Functionals and estimators

@dataclass(frozen=True, eq=False)
class LinearFunctional:
    """
    A linear functional given by its coefficient vector.

    In the polytope setting the functional acts as f -> <coeffs, f>; in the
    Hilbert setting coeffs are the coordinates of its Riesz representer.

    Attributes:
        coeffs: Coefficient vector, one entry per ambient coordinate
    """
    coeffs: np.ndarray

    def __post_init__(self):
        """Validate and freeze the coefficient vector."""
        object.__setattr__(self, "coeffs", frozen_array(self.coeffs, "LinearFunctional coeffs", 1))

    @property
    def dim(self) -> int:
        """Ambient dimension."""
        return self.coeffs.shape[0]


@dataclass(frozen=True, eq=False)
class ObservationMap:
    """
    The observation map f -> (lambda_1(f), ..., lambda_m(f)).

    Attributes:
        rows: Matrix whose k-th row is the coefficient vector u_k (shape m x dim)
    """
    rows: np.ndarray

    def __post_init__(self):
        """Validate and freeze the observation matrix."""
        object.__setattr__(self, "rows", frozen_array(self.rows, "ObservationMap rows", 2))

    @classmethod
    def from_functionals(cls, functionals: Sequence[LinearFunctional], dim: int) -> "ObservationMap":
        """Stack functionals into an observation map (dim is needed when there are none)."""
        for functional in functionals:
            if functional.dim != dim:
                raise DimensionMismatchError(
                    f"Observation functional has dimension {functional.dim}, expected {dim}"
                )
        rows = np.array([f.coeffs for f in functionals]).reshape(len(functionals), dim)
        return cls(rows=rows)

    @property
    def m(self) -> int:
        """Number of observations."""
        return self.rows.shape[0]

    @property
    def dim(self) -> int:
        """Ambient dimension."""
        return self.rows.shape[1]

    @property
    def functionals(self) -> List[LinearFunctional]:
        """The observation functionals u_1, ..., u_m."""
        return [LinearFunctional(row) for row in self.rows]


@dataclass(frozen=True, eq=False)
class TargetFunctional:
    """
    The nonlinear functional to be estimated.

    Sup kind: gamma(f) = max_i gamma_i(f). SupInf kind:
    gamma(f) = max_a min_{i in I_a} gamma_i(f) = min_b max_{j in J_b} gamma_j(f),
    both representations being required.

    Attributes:
        kind: Sup or SupInf
        pieces: Matrix whose rows are the pieces w_i (shape d x dim)
        sup_families: The index sets I_a (SupInf only)
        inf_families: The index sets J_b (SupInf only)
    """
    kind: TargetKind
    pieces: np.ndarray
    sup_families: Families = ()
    inf_families: Families = ()

    def __post_init__(self):
        """Validate target structure and the dual representation identity."""
        pieces = frozen_array(self.pieces, "TargetFunctional pieces", 2)
        object.__setattr__(self, "pieces", pieces)
        object.__setattr__(self, "sup_families", _freeze_families(self.sup_families))
        object.__setattr__(self, "inf_families", _freeze_families(self.inf_families))
        if pieces.shape[0] == 0:
            raise ValueError("TargetFunctional pieces cannot be empty")
        if self.kind == TargetKind.SUP:
            if self.sup_families or self.inf_families:
                raise ValueError("Sup TargetFunctional cannot carry index families")
            return
        if not self.sup_families or not self.inf_families:
            raise ValueError("SupInf TargetFunctional needs nonempty sup and inf families")
        for family in self.sup_families + self.inf_families:
            if not family:
                raise ValueError("SupInf TargetFunctional families cannot contain an empty index set")
            if family[0] < 0 or family[-1] >= pieces.shape[0]:
                raise ValueError(f"SupInf TargetFunctional family {family} references a missing piece")
        self._check_dual_representation()

    def _check_dual_representation(self, samples: int = 64) -> None:
        from src.functionals import inf_sup_values, sup_inf_values

        rng = np.random.default_rng(0)
        values = rng.standard_normal((samples, self.dim)) @ self.pieces.T
        primal = sup_inf_values(values, self.sup_families)
        dual = inf_sup_values(values, self.inf_families)
        scale = 1.0 + np.max(np.abs(values))
        if np.max(np.abs(primal - dual)) > 1e-9 * scale:
            raise ValueError("SupInf TargetFunctional sup-inf and inf-sup representations disagree")

    @property
    def d(self) -> int:
        """Number of pieces."""
        return self.pieces.shape[0]

    @property
    def dim(self) -> int:
        """Ambient dimension."""
        return self.pieces.shape[1]


@dataclass(frozen=True, eq=False)
class SupAffineEstimator:
    """
    Estimator y -> max_i (offsets[i] + <gains[i], y>).

    Attributes:
        offsets: Offsets c_0^(i), one per index i
        gains: Gains c^(i) in R^m, one row per index i
    """
    offsets: np.ndarray
    gains: np.ndarray

    def __post_init__(self):
        """Validate piece counts."""
        offsets = frozen_array(self.offsets, "SupAffineEstimator offsets", 1)
        gains = frozen_array(self.gains, "SupAffineEstimator gains", 2)
        if offsets.shape[0] == 0:
            raise ValueError("SupAffineEstimator needs at least one affine piece")
        if gains.shape[0] != offsets.shape[0]:
            raise DimensionMismatchError(
                f"SupAffineEstimator has {offsets.shape[0]} offsets but {gains.shape[0]} gain rows"
            )
        object.__setattr__(self, "offsets", offsets)
        object.__setattr__(self, "gains", gains)

    @property
    def kind(self) -> EstimatorKind:
        return EstimatorKind.SUP_AFFINE

    @property
    def m(self) -> int:
        """Number of observations the estimator consumes."""
        return self.gains.shape[1]


@dataclass(frozen=True, eq=False)
class SupInfAffineEstimator:
    """
    Estimator y -> max_a min_b (offsets[a, b] + <gains[a, b], y>).

    Attributes:
        offsets: Matrix of offsets, shape |A| x |B|
        gains: Array of gains, shape |A| x |B| x m
        sup_families: The index sets I_a carried over from the target
        inf_families: The index sets J_b carried over from the target
    """
    offsets: np.ndarray
    gains: np.ndarray
    sup_families: Families
    inf_families: Families

    def __post_init__(self):
        """Validate one affine piece per (a, b) pair."""
        offsets = frozen_array(self.offsets, "SupInfAffineEstimator offsets", 2)
        gains = frozen_array(self.gains, "SupInfAffineEstimator gains", 3)
        sup_families = _freeze_families(self.sup_families)
        inf_families = _freeze_families(self.inf_families)
        expected = (len(sup_families), len(inf_families))
        if offsets.shape != expected or gains.shape[:2] != expected:
            raise DimensionMismatchError(
                f"SupInfAffineEstimator needs {expected} pieces, got offsets {offsets.shape} "
                f"and gains {gains.shape}"
            )
        if 0 in expected:
            raise ValueError("SupInfAffineEstimator families cannot be empty")
        object.__setattr__(self, "offsets", offsets)
        object.__setattr__(self, "gains", gains)
        object.__setattr__(self, "sup_families", sup_families)
        object.__setattr__(self, "inf_families", inf_families)

    @property
    def kind(self) -> EstimatorKind:
        return EstimatorKind.SUP_INF_AFFINE

    @property
    def m(self) -> int:
        """Number of observations the estimator consumes."""
        return self.gains.shape[2]


Estimator = Union[SupAffineEstimator, SupInfAffineEstimator]


# Model sets and noise

@dataclass(frozen=True, eq=False)
class Polytope:
    """
    The polytope {f in R^N : <a_l, f> <= 1 for all l}.

    The origin is feasible by construction since every right-hand side is 1.

    Attributes:
        constraints: Matrix whose rows are the constraint vectors a_l (shape L x N)
    """
    constraints: np.ndarray

    def __post_init__(self):
        """Validate the constraint matrix."""
        object.__setattr__(self, "constraints", frozen_array(self.constraints, "Polytope constraints", 2))

    @property
    def dim(self) -> int:
        """Ambient dimension N."""
        return self.constraints.shape[1]

    @property
    def L(self) -> int:
        """Number of constraints."""
        return self.constraints.shape[0]

    @property
    def gram(self) -> np.ndarray:
        """Pairing matrix between functionals and elements (the identity)."""
        return np.eye(self.dim)


@dataclass(frozen=True, eq=False)
class ApproxSet:
    """
    The approximability set {f : ||P_{V^perp}(f - g)||_G <= eps}.

    Elements are coordinate vectors in a finite spanning system whose inner
    products are given by the Gram matrix G.

    Attributes:
        v_basis: Matrix whose rows span V (shape n x dim, n may be 0)
        g: Center of the affine subspace g + V
        eps: Approximation accuracy (positive)
        gram: Symmetric positive semidefinite Gram matrix G
        factor: Upper-triangular R with R^T R = G (jittered if needed), derived
        vperp: Matrix of the G-orthogonal projector onto V^perp, derived
    """
    v_basis: np.ndarray
    g: np.ndarray
    eps: float
    gram: np.ndarray
    factor: np.ndarray = field(init=False, repr=False)
    vperp: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        """Validate the Gram metric, the basis of V and dist(g, V) < eps."""
        from src.model_sets import gram_factor, vperp_projector

        gram = frozen_array(self.gram, "ApproxSet gram", 2)
        g = frozen_array(self.g, "ApproxSet g", 1)
        v_basis = np.array(self.v_basis, dtype=float)
        if v_basis.size == 0:
            v_basis = np.zeros((0, g.shape[0]))
        v_basis = frozen_array(v_basis, "ApproxSet v_basis", 2)
        dim = g.shape[0]
        if gram.shape != (dim, dim):
            raise DimensionMismatchError(f"ApproxSet gram must be {dim}x{dim}, got {gram.shape}")
        if v_basis.shape[1] != dim:
            raise DimensionMismatchError(
                f"ApproxSet v_basis rows must have length {dim}, got {v_basis.shape[1]}"
            )
        if not self.eps > 0 or not np.isfinite(self.eps):
            raise ValueError("ApproxSet eps must be positive and finite")
        object.__setattr__(self, "eps", float(self.eps))
        object.__setattr__(self, "gram", gram)
        object.__setattr__(self, "g", g)
        object.__setattr__(self, "v_basis", v_basis)

        factor = gram_factor(gram)
        factor.setflags(write=False)
        object.__setattr__(self, "factor", factor)
        vperp = vperp_projector(v_basis, gram)
        vperp.setflags(write=False)
        object.__setattr__(self, "vperp", vperp)

        dist = float(np.linalg.norm(factor @ (vperp @ g)))
        if not dist < self.eps:
            raise ValueError(
                f"ApproxSet requires dist(g, V) < eps, got dist {dist:.6g} >= eps {self.eps:.6g}"
            )

    @property
    def dim(self) -> int:
        """Ambient coordinate dimension."""
        return self.g.shape[0]

    @property
    def n(self) -> int:
        """Dimension of V."""
        return self.v_basis.shape[0]


ModelSet = Union[Polytope, ApproxSet]


@dataclass(frozen=True)
class NoiseModel:
    """
    Deterministic observation noise e in radius * B_p^m.

    Attributes:
        p: Norm of the noise ball, one of "1", "2", "inf"
        radius: Radius r of the ball (nonnegative)
    """
    p: str
    radius: float

    def __post_init__(self):
        """Validate noise order and radius."""
        if self.p not in NOISE_ORDERS:
            raise ValueError(f"NoiseModel p must be one of {NOISE_ORDERS}, got {self.p!r}")
        if not self.radius >= 0 or not np.isfinite(self.radius):
            raise ValueError("NoiseModel radius must be nonnegative and finite")

    @property
    def conjugate(self) -> str:
        """Conjugate exponent p' as a string."""
        return {"1": "inf", "2": "2", "inf": "1"}[self.p]

    @property
    def conjugate_order(self) -> float:
        """Conjugate exponent p' as a numpy norm order."""
        return {"1": np.inf, "2": 2.0, "inf": 1.0}[self.p]


@dataclass(frozen=True, eq=False)
class Problem:
    """
    A complete estimation problem.

    Attributes:
        model: The model set K (Polytope or ApproxSet)
        observations: The observation map Lambda
        target: The target functional gamma
        noise: Optional observation noise model
        name: Free-form label used in logs and reports
    """
    model: ModelSet
    observations: ObservationMap
    target: TargetFunctional
    noise: Optional[NoiseModel] = None
    name: str = ""

    def __post_init__(self):
        """Validate that all parts share the ambient dimension."""
        dim = self.model.dim
        if self.observations.dim != dim:
            raise DimensionMismatchError(
                f"Observations have dimension {self.observations.dim}, model has {dim}"
            )
        if self.target.dim != dim:
            raise DimensionMismatchError(
                f"Target pieces have dimension {self.target.dim}, model has {dim}"
            )

    @property
    def m(self) -> int:
        """Number of observations."""
        return self.observations.m


# Conic programs

@dataclass(frozen=True, eq=False)
class ConicProgram:
    """
    The conic program minimize <c, x> s.to b - A x in K_1 x ... x K_r.

    Attributes:
        objective: Objective vector c (length n_var)
        a_rows: Row indices of the nonzero triplets of A
        a_cols: Column indices of the nonzero triplets of A
        a_vals: Values of the nonzero triplets of A
        b: Offset vector
        cones: Ordered (ConeKind, dim) segments partitioning the rows
        n_var: Number of variables
        variable_names: (name, start, size) of each named variable block
    """
    objective: np.ndarray
    a_rows: np.ndarray
    a_cols: np.ndarray
    a_vals: np.ndarray
    b: np.ndarray
    cones: Tuple[Tuple[ConeKind, int], ...]
    n_var: int
    variable_names: Tuple[Tuple[str, int, int], ...] = ()

    def __post_init__(self):
        """Validate the program against its cone partition."""
        objective = frozen_array(self.objective, "ConicProgram objective", 1)
        a_vals = frozen_array(self.a_vals, "ConicProgram a_vals", 1)
        b = frozen_array(self.b, "ConicProgram b", 1)
        a_rows = np.array(self.a_rows, dtype=np.int64).reshape(-1)
        a_cols = np.array(self.a_cols, dtype=np.int64).reshape(-1)
        a_rows.setflags(write=False)
        a_cols.setflags(write=False)
        cones = tuple((ConeKind(kind), int(dim)) for kind, dim in self.cones)
        if objective.shape[0] != self.n_var:
            raise DimensionMismatchError(
                f"ConicProgram objective has length {objective.shape[0]}, n_var is {self.n_var}"
            )
        if not (a_rows.shape == a_cols.shape == a_vals.shape):
            raise DimensionMismatchError("ConicProgram triplet arrays must have equal length")
        n_rows = sum(dim for _, dim in cones)
        if n_rows != b.shape[0]:
            raise DimensionMismatchError(
                f"ConicProgram cone dimensions sum to {n_rows}, b has length {b.shape[0]}"
            )
        for kind, dim in cones:
            if dim < 1:
                raise ValueError(f"ConicProgram {kind.value} segment must have dimension >= 1")
        if a_rows.size and (a_rows.min() < 0 or a_rows.max() >= n_rows):
            raise DimensionMismatchError("ConicProgram triplet row index out of range")
        if a_cols.size and (a_cols.min() < 0 or a_cols.max() >= self.n_var):
            raise DimensionMismatchError("ConicProgram triplet column index out of range")
        object.__setattr__(self, "objective", objective)
        object.__setattr__(self, "a_rows", a_rows)
        object.__setattr__(self, "a_cols", a_cols)
        object.__setattr__(self, "a_vals", a_vals)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "cones", cones)
        object.__setattr__(self, "variable_names", tuple(
            (str(name), int(start), int(size)) for name, start, size in self.variable_names
        ))

    @property
    def n_rows(self) -> int:
        """Number of constraint rows."""
        return self.b.shape[0]


@dataclass(frozen=True, eq=False)
class Solution:
    """
    Result of a conic solve.

    Attributes:
        status: Optimal, Infeasible, Unbounded or NumericalTrouble
        objective: Optimal value (+inf when infeasible, -inf when unbounded)
        primal: Primal point (empty unless optimal)
        primal_residual: Relative cone violation of b - A x at the primal point
        dual_residual: Relative stationarity violation of the reported multipliers
        gap: Relative gap between primal and dual objectives
        solve_time: Wall-clock seconds spent in the backend
    """
    status: SolveStatus
    objective: float
    primal: np.ndarray
    primal_residual: float = float("nan")
    dual_residual: float = float("nan")
    gap: float = float("nan")
    solve_time: float = 0.0

    def __post_init__(self):
        primal = np.array(self.primal, dtype=float).reshape(-1)
        primal.setflags(write=False)
        object.__setattr__(self, "primal", primal)

    @property
    def residuals(self) -> Dict[str, float]:
        """Residuals as a plain dictionary."""
        return {"primal": self.primal_residual, "dual": self.dual_residual, "gap": self.gap}

    def block(self, program: ConicProgram, name: str) -> np.ndarray:
        """Primal values of the named variable block."""
        for block_name, start, size in program.variable_names:
            if block_name == name:
                return self.primal[start:start + size]
        raise KeyError(f"Unknown variable block: {name}")


# Synthesis outputs

@dataclass(frozen=True, eq=False)
class SynthesisResult:
    """
    Output of an optimal synthesis program.

    Attributes:
        e_hat: Optimal worst-case error (equals the two-point lower bound)
        estimator: The synthesized optimal estimator
        e_prime: Slack values e' per branch
        e_second: Slack values e'' per branch (offsets are e_hat - e'')
        branch_labels: Label of each branch, aligned with the slacks
        program: The assembled program
        program_stats: Sizes, status and solve time
    """
    e_hat: float
    estimator: Estimator
    e_prime: np.ndarray
    e_second: np.ndarray
    branch_labels: Tuple[str, ...]
    program: Optional[ConicProgram] = None
    program_stats: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        """Validate error sign and slack alignment."""
        if not self.e_hat >= 0:
            raise ValueError(f"SynthesisResult e_hat must be nonnegative, got {self.e_hat}")
        e_prime = frozen_array(self.e_prime, "SynthesisResult e_prime", 1)
        e_second = frozen_array(self.e_second, "SynthesisResult e_second", 1)
        if not (e_prime.shape[0] == e_second.shape[0] == len(self.branch_labels)):
            raise DimensionMismatchError("SynthesisResult slacks must align with branch labels")
        object.__setattr__(self, "e_prime", e_prime)
        object.__setattr__(self, "e_second", e_second)
        object.__setattr__(self, "branch_labels", tuple(self.branch_labels))


@dataclass(frozen=True, eq=False)
class AffineRecoveryMap:
    """
    Affine full-recovery map y -> intercept + sum_k y_k gains[k].

    Attributes:
        intercept: Element coordinates of c^(0)
        gains: Element coordinates of c^(k), one row per observation (shape m x dim)
        gram: Pairing matrix used to apply functionals to recovered elements
        worst_case_error: Optimal value of the recovery program, when computed
    """
    intercept: np.ndarray
    gains: np.ndarray
    gram: np.ndarray
    worst_case_error: Optional[float] = None

    def __post_init__(self):
        """Validate shapes against the ambient dimension."""
        intercept = frozen_array(self.intercept, "AffineRecoveryMap intercept", 1)
        gains = np.array(self.gains, dtype=float)
        if gains.size == 0:
            gains = np.zeros((0, intercept.shape[0]))
        gains = frozen_array(gains, "AffineRecoveryMap gains", 2)
        gram = frozen_array(self.gram, "AffineRecoveryMap gram", 2)
        dim = intercept.shape[0]
        if gains.shape[1] != dim or gram.shape != (dim, dim):
            raise DimensionMismatchError("AffineRecoveryMap parts must share the ambient dimension")
        object.__setattr__(self, "intercept", intercept)
        object.__setattr__(self, "gains", gains)
        object.__setattr__(self, "gram", gram)

    @property
    def m(self) -> int:
        return self.gains.shape[0]

    def apply(self, y: Sequence[float]) -> np.ndarray:
        """Recovered element for the observation vector y."""
        y = np.asarray(y, dtype=float).reshape(-1)
        if y.shape[0] != self.m:
            raise DimensionMismatchError(f"Expected {self.m} observations, got {y.shape[0]}")
        return self.intercept + y @ self.gains


@dataclass(frozen=True, eq=False)
class PluginComparison:
    """
    Optimal versus plug-in estimation on one problem.

    Attributes:
        e_opt: Optimal worst-case error
        e_plug: Worst-case error of the plug-in estimator
        recovery_map: Full-recovery map the plug-in estimator composes with
        plugin: The plug-in estimator
        synthesis: The optimal synthesis result
    """
    e_opt: float
    e_plug: float
    recovery_map: AffineRecoveryMap
    plugin: SupAffineEstimator
    synthesis: SynthesisResult

    @property
    def gap(self) -> float:
        """e_plug - e_opt (nonnegative up to solver tolerance)."""
        return self.e_plug - self.e_opt


# Verification outputs

@dataclass(frozen=True)
class CheckResult:
    """
    One named check of a consistency report.

    Attributes:
        name: Check identifier (e.g. "fixed_eval_le_ehat")
        passed: Whether the check holds
        value: Measured value
        bound: Value it is compared against
        tolerance: Slack allowed in the comparison
        informational: Informational checks are reported but never fail a report
        detail: Human-readable note
    """
    name: str
    passed: bool
    value: float
    bound: float
    tolerance: float
    informational: bool = False
    detail: str = ""


@dataclass(frozen=True)
class ConsistencyReport:
    """
    Outcome of running every oracle against a problem.

    Attributes:
        problem_name: Label of the problem
        seed: Seed of all sampling oracles
        n_samples: Number of samples (and kernel pairs) drawn
        tol: Solver tolerance used
        e_hat: Optimal error found by synthesis
        values: Every computed quantity by name
        checks: The named checks in evaluation order
    """
    problem_name: str
    seed: int
    n_samples: int
    tol: float
    e_hat: float
    values: Dict[str, float]
    checks: Tuple[CheckResult, ...]

    @property
    def failed_checks(self) -> List[str]:
        """Names of the failing non-informational checks."""
        return [check.name for check in self.checks if not check.passed and not check.informational]

    @property
    def passed(self) -> bool:
        return not self.failed_checks


@dataclass(frozen=True, eq=False)
class HahnBanachCertificate:
    """
    Result of the finite-dimensional extension search.

    Attributes:
        certified: Whether a single-witness certificate was found
        coefficients: The scalars c_k (empty when there are no eta functionals), None if not certified
        witness_index: Index i of the functional mu_i the certificate is built on
        message: Summary of the outcome
    """
    certified: bool
    coefficients: Optional[np.ndarray]
    witness_index: Optional[int]
    message: str
