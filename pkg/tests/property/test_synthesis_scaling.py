"""
Property-based tests for positive homogeneity of synthesis.

Feature: optimal-recovery
Property 9: Optimal Error Scales with the Target

Multiplying every piece of the target by t > 0 multiplies the optimal
error by t, over both model families and with observation noise.
"""

from dataclasses import replace

import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from src.functionals import sup_target
from src.synthesis import EstimatorSynthesizer
from tests.strategies.recovery_strategies import approx_problem_strategy, polytope_problem_strategy


SCALES = st.sampled_from([0.5, 2.0, 3.0])


def _check_scaling(problem, t):
    synthesizer = EstimatorSynthesizer()
    base = synthesizer.synthesize(problem)
    scaled = synthesizer.synthesize(replace(problem, target=sup_target(t * problem.target.pieces)))
    assert scaled.e_hat == pytest.approx(t * base.e_hat, rel=1e-6, abs=1e-7 * t)


@pytest.mark.property
@given(problem=polytope_problem_strategy(with_noise=True), t=SCALES)
@settings(max_examples=20, suppress_health_check=[HealthCheck.too_slow])
def test_polytope_error_scales(problem, t):
    """
    Property 9: Optimal Error Scales with the Target (Polytopes)

    For any polytope problem and t > 0: e_hat(t * gamma) = t * e_hat(gamma).
    """
    _check_scaling(problem, t)


@pytest.mark.property
@given(problem=approx_problem_strategy(with_noise=True), t=SCALES)
@settings(max_examples=20, suppress_health_check=[HealthCheck.too_slow])
def test_approx_error_scales(problem, t):
    """
    Property 9: Optimal Error Scales with the Target (Approximability Sets)

    For any approximability problem and t > 0: e_hat(t * gamma) = t * e_hat(gamma).
    """
    _check_scaling(problem, t)
