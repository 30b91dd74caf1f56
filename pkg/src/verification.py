"""
Independent verification oracles.

Sampling oracles give certified lower bounds: the worst sampled error of an
estimator bounds its true worst-case error from below, and the spread of the
target along sampled fibers of the observation map bounds the optimal error
from below. Both sample in seed-derived chunks, so a larger sample count
only ever extends the stream and the bounds are monotone in it.

The extension checker searches for the scalars of a finite-dimensional
Hahn-Banach type extension in its single-witness form.
"""

import logging
from typing import List, Optional, Sequence

import numpy as np
from scipy.linalg import null_space
from scipy.optimize import linprog

from src.errors import PreconditionError
from src.functionals import eval_estimator_many, eval_target_many, stack_pieces
from src.model_sets import contains_many, sample, sample_noise
from src.models import (
    ApproxSet,
    CheckResult,
    ConsistencyReport,
    Estimator,
    HahnBanachCertificate,
    Problem,
    SupAffineEstimator,
    TargetKind,
)
from src.recovery import plugin_estimator, recovery_map
from src.settings import Settings
from src.synthesis import EstimatorSynthesizer


logger = logging.getLogger(__name__)

HB_TOL = 1e-9
PLUGIN_EQUALITY_RTOL = 1e-5


def _observe(problem: Problem, points: np.ndarray) -> np.ndarray:
    return points @ problem.model.gram @ problem.observations.rows.T


def kernel_basis(problem: Problem) -> np.ndarray:
    """Columns spanning the elements invisible to the observations."""
    if problem.m == 0:
        return np.eye(problem.model.dim)
    return null_space(problem.observations.rows @ problem.model.gram)


class VerificationOracle:
    """
    Runs the sampling oracles and the consistency report.

    Sampling is deterministic given the seed; every oracle uses its own
    derived stream.
    """

    def __init__(self, settings: Optional[Settings] = None):
        """
        Initialize the oracle.

        Args:
            settings: Numerical configuration. Defaults to Settings().
        """
        self.settings = settings or Settings()
        self.synthesizer = EstimatorSynthesizer(self.settings)

    def sampled_error(self, problem: Problem, estimator: Estimator, n_samples: int, seed: int) -> float:
        """
        Largest sampled error |gamma(f) - delta(Lambda f + e)|.

        Returns:
            A lower bound on the worst-case error of the estimator; 0 when n_samples is 0
        """
        if n_samples <= 0:
            return 0.0
        points = sample(problem.model, seed, n_samples, self.settings)
        noise = sample_noise(problem.noise, problem.m, seed, n_samples, self.settings)
        targets = eval_target_many(problem.target, points, problem.model.gram)
        estimates = eval_estimator_many(estimator, _observe(problem, points) + noise)
        value = float(np.max(np.abs(targets - estimates)))
        logger.debug("sampled_error over %d samples: %.12g", n_samples, value)
        return value

    def _directions(self, seed: int, count: int, rank: int) -> np.ndarray:
        chunk_size = self.settings.sample_chunk_size
        chunks = []
        for chunk in range(-(-count // chunk_size)):
            rng = np.random.default_rng([int(seed), int(chunk), 2])
            raw = rng.standard_normal((chunk_size, rank))
            chunks.append(raw / np.linalg.norm(raw, axis=1, keepdims=True))
        return np.vstack(chunks)[:count]

    def _max_step(self, problem: Problem, base: np.ndarray, direction: np.ndarray) -> np.ndarray:
        """Largest t in [0, cap] with base + t * direction in K, per row (doubling then bisection)."""
        model = problem.model
        cap = 10.0 * self.settings.sample_box_bound
        lower = np.zeros(base.shape[0])
        upper = np.minimum(np.ones(base.shape[0]), cap)
        while True:
            inside = contains_many(model, base + upper[:, None] * direction)
            grow = inside & (upper < cap)
            if not np.any(grow):
                break
            lower[grow] = upper[grow]
            upper[grow] = np.minimum(2.0 * upper[grow], cap)
        capped = contains_many(model, base + upper[:, None] * direction)
        for _ in range(self.settings.bisection_iterations):
            middle = 0.5 * (lower + upper)
            inside = contains_many(model, base + middle[:, None] * direction)
            lower = np.where(inside, middle, lower)
            upper = np.where(inside, upper, middle)
        return np.where(capped, upper, lower)

    def eflat_lower_bound(self, problem: Problem, n_pairs: int, seed: int) -> float:
        """
        Sampled two-point lower bound on the optimal error.

        For each sampled f' in K and random direction z in the kernel of the
        observations, both endpoints f' + t+ z and f' - t- z of the fiber
        through f' are located by bisection; the bound is half the spread of
        gamma over the three collinear points, maximized over pairs.

        Returns:
            The bound, or 0 when the kernel is trivial or n_pairs is 0
        """
        basis = kernel_basis(problem)
        if basis.shape[1] == 0:
            logger.info("Observation map is injective; eflat lower bound is 0")
            return 0.0
        if n_pairs <= 0:
            return 0.0
        points = sample(problem.model, seed, n_pairs, self.settings)
        directions = self._directions(seed, n_pairs, basis.shape[1]) @ basis.T
        forward = self._max_step(problem, points, directions)
        backward = self._max_step(problem, points, -directions)
        gram = problem.model.gram
        values = np.column_stack([
            eval_target_many(problem.target, points, gram),
            eval_target_many(problem.target, points + forward[:, None] * directions, gram),
            eval_target_many(problem.target, points - backward[:, None] * directions, gram),
        ])
        value = float(np.max(values.max(axis=1) - values.min(axis=1)) / 2.0)
        logger.debug("eflat lower bound over %d pairs: %.12g", n_pairs, value)
        return value

    def consistency_report(self, problem: Problem, estimator: Optional[Estimator] = None,
                           n_samples: int = 10 ** 4, seed: int = 0) -> ConsistencyReport:
        """
        Run synthesis, fixed evaluation, both sampling bounds and the plug-in comparison.

        Args:
            problem: Problem instance
            estimator: Estimator under test; the synthesized one is checked when None
            n_samples: Samples for sampled_error and pairs for eflat_lower_bound
            seed: Seed of both sampling oracles

        Returns:
            ConsistencyReport with every value and named check
        """
        tolerance = self.settings.check_tol
        checks: List[CheckResult] = []
        values = {}

        def slack(reference: float) -> float:
            return tolerance * max(1.0, abs(reference))

        synthesis = self.synthesizer.synthesize(problem)
        e_hat = synthesis.e_hat
        values["e_hat"] = e_hat
        checks.append(CheckResult("ehat_nonnegative", e_hat >= -tolerance, e_hat, 0.0, tolerance))

        candidate = estimator if estimator is not None else synthesis.estimator
        sup_kind = problem.target.kind == TargetKind.SUP and isinstance(candidate, SupAffineEstimator)
        candidate_bound = e_hat
        if sup_kind:
            fixed_opt = self._fixed(problem, synthesis.estimator)
            values["e_fixed_optimal"] = fixed_opt
            checks.append(CheckResult("fixed_eval_matches_ehat", abs(fixed_opt - e_hat) <= slack(e_hat),
                                      fixed_opt, e_hat, slack(e_hat)))
            candidate_bound = fixed_opt
            if estimator is not None:
                fixed = self._fixed(problem, estimator)
                values["e_delta"] = fixed
                checks.append(CheckResult("fixed_eval_le_ehat", fixed <= e_hat + slack(e_hat),
                                          fixed, e_hat, slack(e_hat),
                                          detail="the supplied estimator is not optimal"
                                          if fixed > e_hat + slack(e_hat) else ""))
                candidate_bound = fixed

        sampled = self.sampled_error(problem, candidate, n_samples, seed)
        values["sampled_error"] = sampled
        checks.append(CheckResult("sampled_error_le_fixed", sampled <= candidate_bound + slack(candidate_bound),
                                  sampled, candidate_bound, slack(candidate_bound),
                                  detail="" if sup_kind else "bounded by e_hat (no fixed evaluation for sup-inf)"))

        eflat = self.eflat_lower_bound(problem, n_samples, seed)
        values["eflat"] = eflat
        checks.append(CheckResult("eflat_le_ehat", eflat <= e_hat + slack(e_hat), eflat, e_hat, slack(e_hat)))

        if problem.target.kind == TargetKind.SUP:
            checks.extend(self._plugin_checks(problem, e_hat, values))

        report = ConsistencyReport(
            problem_name=problem.name,
            seed=int(seed),
            n_samples=int(n_samples),
            tol=self.settings.tol,
            e_hat=e_hat,
            values=values,
            checks=tuple(checks),
        )
        for name in report.failed_checks:
            logger.warning("Consistency check failed: %s", name)
        return report

    def _fixed(self, problem: Problem, estimator: SupAffineEstimator) -> float:
        return self.synthesizer.eval_error_fixed(problem.model, problem.observations, problem.target,
                                                 estimator, problem.noise)

    def _plugin_checks(self, problem: Problem, e_hat: float, values: dict) -> List[CheckResult]:
        try:
            plugin = plugin_estimator(recovery_map(problem, self.settings), problem.target)
        except PreconditionError as exc:
            logger.info("Plug-in comparison skipped: %s", exc)
            return [CheckResult("plugin_equals_optimal", False, float("nan"), e_hat, 0.0,
                                informational=True, detail=f"skipped: {exc}")]
        e_plug = self._fixed(problem, plugin)
        values["e_plug"] = e_plug
        slack = self.settings.check_tol * max(1.0, abs(e_hat))
        equality_tol = PLUGIN_EQUALITY_RTOL * max(e_hat, 1.0)
        equal = abs(e_plug - e_hat) <= equality_tol
        detail = "plug-in estimator is optimal on this instance" if equal else "plug-in estimator is not optimal"
        if not equal and isinstance(problem.model, ApproxSet):
            logger.warning("Plug-in estimator is not optimal on approximability instance %s: "
                           "e_plug=%.12g e_hat=%.12g", problem.name, e_plug, e_hat)
            logger.warning("Plug-in estimator offsets=%s gains=%s", plugin.offsets.tolist(), plugin.gains.tolist())
        return [
            CheckResult("plugin_ge_ehat", e_plug >= e_hat - slack, e_plug, e_hat, slack),
            CheckResult("plugin_equals_optimal", equal, e_plug, e_hat, equality_tol,
                        informational=True, detail=detail),
        ]


def sampled_error(problem: Problem, estimator: Estimator, n_samples: int, seed: int,
                  settings: Optional[Settings] = None) -> float:
    return VerificationOracle(settings).sampled_error(problem, estimator, n_samples, seed)


def eflat_lower_bound(problem: Problem, n_pairs: int, seed: int, settings: Optional[Settings] = None) -> float:
    return VerificationOracle(settings).eflat_lower_bound(problem, n_pairs, seed)


def consistency_report(problem: Problem, estimator: Optional[Estimator] = None, n_samples: int = 10 ** 4,
                       seed: int = 0, settings: Optional[Settings] = None) -> ConsistencyReport:
    return VerificationOracle(settings).consistency_report(problem, estimator, n_samples, seed)


# Extension checker

def _box_linprog(objective, a_ub, b_ub, a_eq=None, b_eq=None, bounds=None):
    result = linprog(objective, A_ub=a_ub, b_ub=b_ub, A_eq=a_eq, b_eq=b_eq, bounds=bounds, method="highs")
    if result.status != 0:
        raise PreconditionError(f"Extension check LP failed: {result.message}")
    return result


def hb_extension_check(mu_list: Sequence, rho_pieces: Sequence, eta_list: Sequence) -> HahnBanachCertificate:
    """
    Search for scalars c with mu_i + sum_k c_k eta_k <= rho on the whole space.

    rho is the sublinear functional max_r rho_r. The hypothesis
    min_i mu_i <= rho on U = intersection of ker(eta_k) is checked first by a
    linear program over the unit l-infinity ball of U. A certificate is then
    sought for each single witness i: mu_i + sum_k c_k eta_k <= rho holds
    everywhere exactly when it lies in the convex hull of the rho_r, which
    is an l1-residual linear program over c and the hull weights.

    Args:
        mu_list: The functionals mu_i
        rho_pieces: Linear pieces of rho
        eta_list: The functionals eta_k (may be empty)

    Returns:
        HahnBanachCertificate; a failed search is not a refutation

    Raises:
        PreconditionError: If min_i mu_i <= rho fails somewhere on U
    """
    mu = stack_pieces(mu_list, "mu_list")
    rho = stack_pieces(rho_pieces, "rho_pieces")
    dim = mu.shape[1]
    eta = stack_pieces(eta_list, "eta_list") if len(eta_list) else np.zeros((0, dim))
    if rho.shape[1] != dim or eta.shape[1] != dim:
        raise PreconditionError("mu, rho and eta functionals must share the dimension")
    m = eta.shape[0]

    subspace = np.eye(dim) if m == 0 else null_space(eta)
    k = subspace.shape[1]
    if k:
        # maximize t subject to t <= (mu_i - rho_r)(U x) for all (i, r), x in [-1, 1]^k
        differences = (mu[:, None, :] - rho[None, :, :]).reshape(-1, dim) @ subspace
        a_ub = np.hstack([-differences, np.ones((differences.shape[0], 1))])
        objective = np.zeros(k + 1)
        objective[-1] = -1.0
        result = _box_linprog(objective, a_ub, np.zeros(differences.shape[0]),
                              bounds=[(-1.0, 1.0)] * k + [(None, None)])
        violation = -result.fun
        if violation > HB_TOL:
            raise PreconditionError(
                f"Hypothesis min_i mu_i <= rho fails on the common kernel (violation {violation:.3g})"
            )

    n_rho = rho.shape[0]
    for i in range(mu.shape[0]):
        # variables: c (m, free), lambda (n_rho, simplex), p (dim, >= 0)
        # -p <= mu_i + eta^T c - rho^T lambda <= p
        a_ub = np.vstack([
            np.hstack([eta.T, -rho.T, -np.eye(dim)]),
            np.hstack([-eta.T, rho.T, -np.eye(dim)]),
        ])
        b_ub = np.concatenate([-mu[i], mu[i]])
        a_eq = np.concatenate([np.zeros(m), np.ones(n_rho), np.zeros(dim)])[None, :]
        objective = np.concatenate([np.zeros(m + n_rho), np.ones(dim)])
        bounds = [(None, None)] * m + [(0.0, None)] * (n_rho + dim)
        result = _box_linprog(objective, a_ub, b_ub, a_eq, np.ones(1), bounds)
        if result.fun <= HB_TOL:
            coefficients = np.asarray(result.x[:m], dtype=float)
            return HahnBanachCertificate(
                certified=True,
                coefficients=coefficients,
                witness_index=i,
                message=f"certified with witness mu_{i}",
            )
    return HahnBanachCertificate(
        certified=False,
        coefficients=None,
        witness_index=None,
        message="no single-witness certificate",
    )


def dominates(certificate: HahnBanachCertificate, mu_list: Sequence, rho_pieces: Sequence,
              eta_list: Sequence, points: np.ndarray) -> np.ndarray:
    """
    Pointwise slack rho(v) - (min_i mu_i(v) + sum_k c_k eta_k(v)) at each row v.

    Nonnegative entries mean the certificate's inequality holds at that point.
    """
    if not certificate.certified:
        raise PreconditionError("Certificate is not certified")
    mu = stack_pieces(mu_list, "mu_list")
    rho = stack_pieces(rho_pieces, "rho_pieces")
    points = np.atleast_2d(np.asarray(points, dtype=float))
    shift = np.zeros(points.shape[0])
    if len(eta_list):
        shift = points @ stack_pieces(eta_list, "eta_list").T @ certificate.coefficients
    return (points @ rho.T).max(axis=1) - ((points @ mu.T).min(axis=1) + shift)
