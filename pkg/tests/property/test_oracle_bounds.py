"""
Property-based tests for the sampling oracles.

Feature: optimal-recovery
Property 2: Sampled Bounds Never Exceed the Optimal Error

The sampled error of the optimal estimator and the sampled two-point lower
bound are both lower bounds on e_hat.
"""

import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from src.settings import Settings
from src.synthesis import EstimatorSynthesizer
from src.verification import VerificationOracle
from tests.strategies.recovery_strategies import approx_problem_strategy, polytope_problem_strategy


ORACLE_SETTINGS = Settings(sample_chunk_size=256)

problems = st.one_of(polytope_problem_strategy(with_noise=True), approx_problem_strategy())


def _slack(e_hat):
    return 1e-6 * max(1.0, e_hat)


@pytest.mark.property
@given(problem=problems, seed=st.integers(0, 2 ** 16))
@settings(max_examples=20, suppress_health_check=[HealthCheck.too_slow])
def test_sampled_error_below_optimal_error(problem, seed):
    """
    Property 2: Sampled Bounds Never Exceed the Optimal Error (Sampled Error)

    For any problem and seed, the largest error of the optimal estimator over
    sampled elements and noise vectors is at most e_hat.
    """
    result = EstimatorSynthesizer().synthesize(problem)
    oracle = VerificationOracle(ORACLE_SETTINGS)
    sampled = oracle.sampled_error(problem, result.estimator, 300, seed)
    assert 0.0 <= sampled <= result.e_hat + _slack(result.e_hat)


@pytest.mark.property
@given(problem=problems, seed=st.integers(0, 2 ** 16))
@settings(max_examples=20, suppress_health_check=[HealthCheck.too_slow])
def test_eflat_below_optimal_error(problem, seed):
    """
    Property 2: Sampled Bounds Never Exceed the Optimal Error (Two-Point Bound)

    For any problem and seed, half the spread of the target over sampled
    fibers of the observation map is at most e_hat.
    """
    result = EstimatorSynthesizer().synthesize(problem)
    eflat = VerificationOracle(ORACLE_SETTINGS).eflat_lower_bound(problem, 200, seed)
    assert 0.0 <= eflat <= result.e_hat + _slack(result.e_hat)
