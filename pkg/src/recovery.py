"""
Full-recovery maps and plug-in estimators.

A full-recovery map estimates the whole unknown element from its
observations. For polytopes it comes from a componentwise linear program;
for approximability sets it is the closed-form minimizer of the distance to
g + V among the elements consistent with the data. Composing the target
with such a map gives the plug-in estimator, whose worst-case error is then
compared to the optimal one.
"""

import logging
from typing import Optional

import numpy as np
from scipy.linalg import qr, solve_triangular

from src.conic import ConicSolver, ProgramBuilder, raise_for_status
from src.errors import PreconditionError
from src.model_sets import add_support_constraint, noise_term
from src.models import (
    AffineRecoveryMap,
    ApproxSet,
    NoiseModel,
    ObservationMap,
    PluginComparison,
    Polytope,
    Problem,
    SupAffineEstimator,
    TargetFunctional,
    TargetKind,
)
from src.settings import Settings
from src.synthesis import EstimatorSynthesizer


logger = logging.getLogger(__name__)

MAX_CROSS_GRAMIAN_CONDITION = 1e12


def full_recovery_polytope(model: Polytope, observations: ObservationMap,
                           noise: Optional[NoiseModel] = None,
                           settings: Optional[Settings] = None) -> AffineRecoveryMap:
    """
    Componentwise optimal affine recovery map over a polytope.

    Solves, for every coordinate j, the pair of support bounds
    support(v_j - sum_k c_kj u_k) <= e + c0_j and
    support(-v_j + sum_k c_kj u_k) <= e - c0_j, minimizing the common level e.

    Returns:
        AffineRecoveryMap with the optimal level as worst_case_error

    Raises:
        InfeasibleProgramError: If the polytope is unbounded along some coordinate
    """
    dim, m = model.dim, observations.m
    builder = ProgramBuilder()
    e = builder.add_variable("e", 1)
    intercept = builder.add_variable("c0", dim)
    # gains[k, j] lives at index k * dim + j
    gains = builder.add_variable("gains", m * dim)
    for j in range(dim):
        column = np.zeros((m, m * dim))
        column[np.arange(m), np.arange(m) * dim + j] = 1.0
        coeffs = gains.expr.transform(column)
        combination = coeffs.transform(observations.rows.T)
        unit = np.zeros(dim)
        unit[j] = 1.0
        noise_bound = noise_term(builder, noise, coeffs, f"noise[{j}]")
        add_support_constraint(builder, model, unit - combination,
                               e.expr + intercept[j] - noise_bound, f"s[{j}]")
        add_support_constraint(builder, model, combination - unit,
                               e.expr - intercept[j] - noise_bound, f"t[{j}]")
    builder.minimize(e.expr)
    program = builder.build()
    solution = ConicSolver(settings).solve(program)
    raise_for_status(solution, program, "full_recovery_polytope")
    error = max(solution.objective, 0.0)
    logger.info("Full-recovery map: worst-case coordinate error %.12g", error)
    return AffineRecoveryMap(
        intercept=solution.block(program, "c0"),
        gains=solution.block(program, "gains").reshape(m, dim),
        gram=np.eye(dim),
        worst_case_error=error,
    )


def chebyshev_map(model: ApproxSet, observations: ObservationMap) -> AffineRecoveryMap:
    """
    Closed-form optimal recovery map over an approximability set.

    The observation representers are first orthonormalized in the G-metric
    (QR of R U^T with R the Gram factor). With C the cross-Gramian between
    the orthonormal representers and the basis of V, the data y' (in
    orthonormal coordinates) maps to Q [y' - C b] + V^T b where
    b = (C^T C)^{-1} C^T y'. The map is centered at g.

    Raises:
        PreconditionError: If the observations are dependent, or C^T C is
            singular or too ill-conditioned (the condition number is reported)
    """
    dim, m, n = model.dim, observations.m, model.n
    gram = model.gram
    if m == 0:
        if n:
            raise PreconditionError("Chebyshev map needs at least dim(V) observations, got none")
        return AffineRecoveryMap(intercept=model.g, gains=np.zeros((0, dim)), gram=gram)
    if n > m:
        raise PreconditionError(f"Chebyshev map needs m >= dim(V), got m={m} < n={n}")
    if m > dim:
        raise PreconditionError(f"Observation functionals are linearly dependent: m={m} exceeds dim={dim}")

    representers = observations.rows.T
    _, r_u = qr(model.factor @ representers, mode="economic")
    diagonal = np.abs(np.diag(r_u))
    if r_u.shape[0] < m or np.min(diagonal) <= 1e-12 * max(1.0, np.max(diagonal)):
        raise PreconditionError("Observation functionals are linearly dependent in the G-metric")
    # orthonormal representers Q = U R_u^{-1}
    q = solve_triangular(r_u, representers.T, trans="T", lower=False).T
    whiten = solve_triangular(r_u, np.eye(m), trans="T", lower=False)

    if n:
        basis = model.v_basis.T
        cross = q.T @ gram @ basis
        normal = cross.T @ cross
        condition = float(np.linalg.cond(normal))
        if not np.isfinite(condition) or condition > MAX_CROSS_GRAMIAN_CONDITION:
            raise PreconditionError(f"Cross-Gramian C^T C is singular or ill-conditioned (condition {condition:.3g})")
        if condition > 1e8:
            logger.warning("Cross-Gramian C^T C is ill-conditioned (condition %.3g)", condition)
        least_squares = np.linalg.solve(normal, cross.T)
        linear = (q @ (np.eye(m) - cross @ least_squares) + basis @ least_squares) @ whiten
    else:
        linear = q @ whiten

    observed_center = observations.rows @ gram @ model.g
    intercept = model.g - linear @ observed_center
    return AffineRecoveryMap(intercept=intercept, gains=linear.T, gram=gram)


def recovery_map(problem: Problem, settings: Optional[Settings] = None) -> AffineRecoveryMap:
    """The full-recovery map matching the problem's model family."""
    if isinstance(problem.model, Polytope):
        return full_recovery_polytope(problem.model, problem.observations, problem.noise, settings)
    return chebyshev_map(problem.model, problem.observations)


def plugin_estimator(recovery: AffineRecoveryMap, target: TargetFunctional) -> SupAffineEstimator:
    """
    The estimator gamma composed with a recovery map.

    Piece i has offset gamma_i(intercept) and gains gamma_i(gains[k]).

    Raises:
        PreconditionError: If the target is not of Sup kind
    """
    if target.kind != TargetKind.SUP:
        raise PreconditionError("Plug-in estimators are defined for Sup targets")
    paired = target.pieces @ recovery.gram
    return SupAffineEstimator(offsets=paired @ recovery.intercept, gains=paired @ recovery.gains.T)


def compare_plugin(problem: Problem, settings: Optional[Settings] = None) -> PluginComparison:
    """
    Optimal error against the error of the plug-in estimator.

    Returns:
        PluginComparison with e_opt, e_plug and gap = e_plug - e_opt
    """
    synthesizer = EstimatorSynthesizer(settings)
    synthesis = synthesizer.synthesize(problem)
    recovery = recovery_map(problem, synthesizer.settings)
    plugin = plugin_estimator(recovery, problem.target)
    e_plug = synthesizer.eval_error_fixed(problem.model, problem.observations, problem.target,
                                          plugin, problem.noise)
    comparison = PluginComparison(
        e_opt=synthesis.e_hat,
        e_plug=e_plug,
        recovery_map=recovery,
        plugin=plugin,
        synthesis=synthesis,
    )
    logger.info("Plug-in comparison: e_opt=%.12g e_plug=%.12g gap=%.3g",
                comparison.e_opt, comparison.e_plug, comparison.gap)
    return comparison
