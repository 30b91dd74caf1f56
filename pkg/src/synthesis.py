"""
Optimal estimator synthesis and fixed-estimator evaluation.

Every program here is assembled from the same ingredients: a worst-case
level e, per-branch slacks e' and e'' with e' + e'' <= 2e, and two support
bounds per branch, one on the target mixture minus the observation
combination and one on its negation. The model set decides how a support
bound is written (linear rows for polytopes, an orthogonality block plus a
second-order cone for approximability sets); noise adds r ||c||_{p'} to both
bounds of a branch.
"""

import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from src.conic import AffineExpr, ConicSolver, ProgramBuilder, VariableBlock, raise_for_status
from src.errors import (
    CombinatorialCapError,
    DimensionMismatchError,
    InfeasibleProgramError,
    PreconditionError,
)
from src.model_sets import add_support_constraint, augment_noise, noise_term
from src.models import (
    ApproxSet,
    ConicProgram,
    ModelSet,
    NoiseModel,
    ObservationMap,
    Polytope,
    Problem,
    SolveStatus,
    SupAffineEstimator,
    SupInfAffineEstimator,
    SynthesisResult,
    TargetFunctional,
    TargetKind,
)
from src.settings import Settings


logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Branch:
    """
    One constraint triple of a synthesis program.

    Attributes:
        label: Diagnostic label, "i*=k" or "(a*,b*)=(a,b)"
        plus: Indices of the pieces mixed on the e' side
        minus: Indices of the pieces mixed (negated) on the e'' side
    """
    label: str
    plus: Tuple[int, ...]
    minus: Tuple[int, ...]


def sup_branches(target: TargetFunctional) -> List[Branch]:
    """Branches of a Sup target: piece i against the whole index set."""
    everything = tuple(range(target.d))
    return [Branch(f"i*={i}", (i,), everything) for i in range(target.d)]


def supinf_branches(target: TargetFunctional) -> List[Branch]:
    """Branches of a SupInf target: one per (a, b) pair, row-major."""
    return [
        Branch(f"(a*,b*)=({a},{b})", sup_family, inf_family)
        for a, sup_family in enumerate(target.sup_families)
        for b, inf_family in enumerate(target.inf_families)
    ]


def _mixture(builder: ProgramBuilder, pieces: np.ndarray, indices: Sequence[int], name: str) -> AffineExpr:
    """Convex combination sum sigma_i w_i over the given indices."""
    selected = pieces[list(indices)]
    if len(indices) == 1:
        return AffineExpr.constant_expr(selected[0])
    sigma = builder.add_variable(name, len(indices))
    builder.add_simplex(sigma)
    return sigma.expr.transform(selected.T)


class EstimatorSynthesizer:
    """
    Assembles and solves the synthesis and evaluation programs.

    Each public method accepts the parts of a problem explicitly; the
    module-level functions of the same names are thin wrappers.
    """

    def __init__(self, settings: Optional[Settings] = None):
        """
        Initialize the synthesizer.

        Args:
            settings: Numerical configuration. Defaults to Settings().
        """
        self.settings = settings or Settings()
        self.solver = ConicSolver(self.settings)

    # Assembly

    def _assemble(self, model: ModelSet, observations: ObservationMap, target: TargetFunctional,
                  noise: Optional[NoiseModel], branches: Sequence[Branch],
                  plus_only: bool = False) -> Tuple[ConicProgram, List[VariableBlock]]:
        if observations.dim != model.dim or target.dim != model.dim:
            raise DimensionMismatchError("Model, observations and target must share the ambient dimension")
        builder = ProgramBuilder()
        e = builder.add_variable("e", 1)
        e_prime = builder.add_variable("e_prime", len(branches))
        e_second = builder.add_variable("e_second", len(branches))
        gains = []
        observed = observations.rows.T
        for k, branch in enumerate(branches):
            c = builder.add_variable(f"c[{k}]", observations.m)
            gains.append(c)
            combination = c.expr.transform(observed)
            noise_bound = noise_term(builder, noise, c.expr, f"noise[{k}]")
            builder.add_nonneg(2.0 * e.expr - e_prime[k] - e_second[k])
            plus = _mixture(builder, target.pieces, branch.plus, f"sigma[{k}]")
            add_support_constraint(builder, model, plus - combination,
                                   e_prime[k] - noise_bound, f"s[{k}]")
            if not plus_only:
                minus = _mixture(builder, target.pieces, branch.minus, f"tau[{k}]")
                add_support_constraint(builder, model, combination - minus,
                                       e_second[k] - noise_bound, f"t[{k}]")
        builder.minimize(e.expr)
        return builder.build(), gains

    def branches_for(self, target: TargetFunctional) -> List[Branch]:
        """Branches of the synthesis program for a target (checks the combinatorial cap)."""
        if target.kind == TargetKind.SUP:
            return sup_branches(target)
        size = len(target.sup_families) * len(target.inf_families)
        if size > self.settings.combinatorial_cap:
            raise CombinatorialCapError(
                f"Sup-inf target needs {size} branches, above the cap of {self.settings.combinatorial_cap}"
            )
        return supinf_branches(target)

    def assemble_synthesis_program(self, problem: Problem) -> ConicProgram:
        """The synthesis program of a problem, without solving it."""
        branches = self.branches_for(problem.target)
        program, _ = self._assemble(problem.model, problem.observations, problem.target,
                                    problem.noise, branches)
        return program

    # Synthesis

    def _synthesize(self, model: ModelSet, observations: ObservationMap, target: TargetFunctional,
                    noise: Optional[NoiseModel], branches: List[Branch]) -> SynthesisResult:
        program, gains = self._assemble(model, observations, target, noise, branches)
        logger.debug("Synthesis program: %d branches, %d variables, %d rows",
                     len(branches), program.n_var, program.n_rows)
        solution = self.solver.solve(program)
        if solution.status == SolveStatus.INFEASIBLE:
            self._diagnose(model, observations, target, noise, branches)
        raise_for_status(solution, program, "synthesis")

        e_hat = max(solution.objective, 0.0)
        e_prime = solution.block(program, "e_prime")
        e_second = solution.block(program, "e_second")
        offsets = e_hat - e_second
        gain_rows = np.array([solution.primal[c.start:c.start + c.size] for c in gains])
        gain_rows = gain_rows.reshape(len(branches), observations.m)
        if target.kind == TargetKind.SUP:
            estimator = SupAffineEstimator(offsets=offsets, gains=gain_rows)
        else:
            shape = (len(target.sup_families), len(target.inf_families))
            estimator = SupInfAffineEstimator(
                offsets=offsets.reshape(shape),
                gains=gain_rows.reshape(shape + (observations.m,)),
                sup_families=target.sup_families,
                inf_families=target.inf_families,
            )
        logger.info("Synthesized optimal estimator: e_hat=%.12g (%d branches)", e_hat, len(branches))
        return SynthesisResult(
            e_hat=e_hat,
            estimator=estimator,
            e_prime=e_prime,
            e_second=e_second,
            branch_labels=tuple(branch.label for branch in branches),
            program=program,
            program_stats={
                "branches": len(branches),
                "n_var": program.n_var,
                "n_rows": program.n_rows,
                "nonzeros": int(program.a_vals.shape[0]),
                "status": solution.status.value,
                "solve_time": solution.solve_time,
            },
        )

    def _diagnose(self, model: ModelSet, observations: ObservationMap, target: TargetFunctional,
                  noise: Optional[NoiseModel], branches: Sequence[Branch]) -> None:
        """Solve each branch on its own and raise for the first infeasible one."""
        for branch in branches:
            program, _ = self._assemble(model, observations, target, noise, [branch])
            if self.solver.solve(program).status != SolveStatus.INFEASIBLE:
                continue
            plus_program, _ = self._assemble(model, observations, target, noise, [branch], plus_only=True)
            if self.solver.solve(plus_program).status == SolveStatus.INFEASIBLE:
                direction = target.pieces[branch.plus[0]]
            else:
                direction = -target.pieces[branch.minus[0]]
            raise InfeasibleProgramError(
                f"Synthesis is infeasible at branch {branch.label}: no observation combination makes "
                f"the support bounded in direction {np.array2string(direction, precision=6)}",
                branch=branch.label,
                direction=direction,
            )
        raise InfeasibleProgramError("Synthesis program is infeasible but no single branch is")

    def synthesize_sup_polytope(self, model: Polytope, observations: ObservationMap,
                                target: TargetFunctional, noise: Optional[NoiseModel] = None) -> SynthesisResult:
        """
        Optimal sup-affine estimator of a Sup target over a polytope (linear program).

        Returns:
            SynthesisResult with e_hat and offsets e_hat - e''

        Raises:
            InfeasibleProgramError: If some branch needs an unbounded support direction
        """
        if not isinstance(model, Polytope) or target.kind != TargetKind.SUP:
            raise PreconditionError("synthesize_sup_polytope needs a Polytope and a Sup target")
        return self._synthesize(model, observations, target, noise, sup_branches(target))

    def synthesize_sup_approx(self, model: ApproxSet, observations: ObservationMap,
                              target: TargetFunctional, noise: Optional[NoiseModel] = None) -> SynthesisResult:
        """
        Optimal sup-affine estimator of a Sup target over an approximability set (SOCP).

        Raises:
            InfeasibleProgramError: If no observation combination leaves a residual orthogonal to V
        """
        if not isinstance(model, ApproxSet) or target.kind != TargetKind.SUP:
            raise PreconditionError("synthesize_sup_approx needs an ApproxSet and a Sup target")
        return self._synthesize(model, observations, target, noise, sup_branches(target))

    def synthesize_supinf(self, model: ModelSet, observations: ObservationMap,
                          target: TargetFunctional, noise: Optional[NoiseModel] = None) -> SynthesisResult:
        """
        Optimal sup-inf-affine estimator of a SupInf target.

        One branch per (a, b) pair; offsets c0[a, b] = e_hat - e''[a, b].

        Raises:
            CombinatorialCapError: If |A| * |B| exceeds the configured cap
            InfeasibleProgramError: As for the Sup case
        """
        if target.kind != TargetKind.SUP_INF:
            raise PreconditionError("synthesize_supinf needs a SupInf target")
        return self._synthesize(model, observations, target, noise, self.branches_for(target))

    def synthesize(self, problem: Problem) -> SynthesisResult:
        """Dispatch on the model family and target kind."""
        if problem.target.kind == TargetKind.SUP_INF:
            return self.synthesize_supinf(problem.model, problem.observations, problem.target, problem.noise)
        if isinstance(problem.model, Polytope):
            return self.synthesize_sup_polytope(problem.model, problem.observations, problem.target, problem.noise)
        return self.synthesize_sup_approx(problem.model, problem.observations, problem.target, problem.noise)

    # Fixed-estimator evaluation

    def assemble_evaluation_program(self, model: ModelSet, observations: ObservationMap,
                                    target: TargetFunctional, estimator: SupAffineEstimator,
                                    noise: Optional[NoiseModel] = None) -> ConicProgram:
        """
        Program whose optimal value is sup_{f in K} |gamma(f) - delta(Lambda f)|.

        For every target piece i* the mixture weights sigma range over the
        estimator's pieces; for every estimator piece j* the weights tau range
        over the target's pieces.
        """
        if target.kind != TargetKind.SUP or not isinstance(estimator, SupAffineEstimator):
            raise PreconditionError("Fixed-estimator evaluation needs a Sup target and a sup-affine estimator")
        if estimator.m != observations.m:
            raise DimensionMismatchError(
                f"Estimator expects {estimator.m} observations, problem has {observations.m}"
            )
        # row j: the functional f -> <z_j, Lambda f>
        composed = estimator.gains @ observations.rows
        n_est = estimator.offsets.shape[0]
        builder = ProgramBuilder()
        e = builder.add_variable("e", 1)
        for i in range(target.d):
            sigma = builder.add_variable(f"sigma[{i}]", n_est)
            builder.add_simplex(sigma)
            direction = target.pieces[i] - sigma.expr.transform(composed.T)
            offset = sigma.expr.transform(estimator.offsets[None, :])
            noise_bound = noise_term(builder, noise, -sigma.expr.transform(estimator.gains.T), f"noise_s[{i}]")
            add_support_constraint(builder, model, direction, e.expr + offset - noise_bound, f"s[{i}]")
        for j in range(n_est):
            tau = _mixture(builder, target.pieces, range(target.d), f"tau[{j}]")
            direction = composed[j] - tau
            bound = e.expr - (estimator.offsets[j] + augment_noise(estimator.gains[j], noise))
            add_support_constraint(builder, model, direction, bound, f"t[{j}]")
        builder.minimize(e.expr)
        return builder.build()

    def eval_error_fixed(self, model: ModelSet, observations: ObservationMap, target: TargetFunctional,
                         estimator: SupAffineEstimator, noise: Optional[NoiseModel] = None) -> float:
        """
        Worst-case error of a fixed sup-affine estimator.

        Returns:
            sup_{f in K, e in noise ball} |gamma(f) - delta(Lambda f + e)|

        Raises:
            InfeasibleProgramError: If the error is unbounded
        """
        program = self.assemble_evaluation_program(model, observations, target, estimator, noise)
        solution = self.solver.solve(program)
        raise_for_status(solution, program, "eval_error_fixed")
        value = max(solution.objective, 0.0)
        logger.info("Fixed-estimator error: %.12g", value)
        return value

    # Noise sweep

    def noise_sweep(self, problem: Problem, radii: Sequence[float]) -> List[Tuple[float, float]]:
        """
        Optimal error for each noise radius.

        The noise order is taken from the problem (inf when it has none).

        Returns:
            (radius, e_hat) pairs in input order
        """
        order = problem.noise.p if problem.noise is not None else "inf"
        points = []
        for radius in radii:
            noisy = Problem(
                model=problem.model,
                observations=problem.observations,
                target=problem.target,
                noise=NoiseModel(p=order, radius=float(radius)),
                name=problem.name,
            )
            points.append((float(radius), self.synthesize(noisy).e_hat))
        return points


# Functional interface

def synthesize(problem: Problem, settings: Optional[Settings] = None) -> SynthesisResult:
    """Optimal estimator for a problem."""
    return EstimatorSynthesizer(settings).synthesize(problem)


def synthesize_sup_polytope(model: Polytope, observations: ObservationMap, target: TargetFunctional,
                            noise: Optional[NoiseModel] = None, settings: Optional[Settings] = None) -> SynthesisResult:
    return EstimatorSynthesizer(settings).synthesize_sup_polytope(model, observations, target, noise)


def synthesize_sup_approx(model: ApproxSet, observations: ObservationMap, target: TargetFunctional,
                          noise: Optional[NoiseModel] = None, settings: Optional[Settings] = None) -> SynthesisResult:
    return EstimatorSynthesizer(settings).synthesize_sup_approx(model, observations, target, noise)


def synthesize_supinf(model: ModelSet, observations: ObservationMap, target: TargetFunctional,
                      noise: Optional[NoiseModel] = None, settings: Optional[Settings] = None) -> SynthesisResult:
    return EstimatorSynthesizer(settings).synthesize_supinf(model, observations, target, noise)


def eval_error_fixed(model: ModelSet, observations: ObservationMap, target: TargetFunctional,
                     estimator: SupAffineEstimator, noise: Optional[NoiseModel] = None,
                     settings: Optional[Settings] = None) -> float:
    return EstimatorSynthesizer(settings).eval_error_fixed(model, observations, target, estimator, noise)


def assemble_synthesis_program(problem: Problem, settings: Optional[Settings] = None) -> ConicProgram:
    return EstimatorSynthesizer(settings).assemble_synthesis_program(problem)


def noise_sweep(problem: Problem, radii: Sequence[float],
                settings: Optional[Settings] = None) -> List[Tuple[float, float]]:
    return EstimatorSynthesizer(settings).noise_sweep(problem, radii)
