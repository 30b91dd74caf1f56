"""
Property-based tests for target functionals.

Feature: optimal-recovery
Property 5: Sup-Inf Representations Evaluate Their Targets

The l-th largest, difference-of-sups and negated targets evaluate to the
values they are built to represent.
"""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from src.functionals import (
    difference_of_sups_target,
    eval_target,
    lth_largest_target,
    negate_target,
    sup_target,
)
from tests.strategies.recovery_strategies import half_integer_matrix


values_strategy = st.lists(st.integers(-20, 20).map(lambda k: k / 4.0), min_size=1, max_size=5)


@pytest.mark.property
@given(values=values_strategy, data=st.data())
@settings(max_examples=100)
def test_lth_largest_is_order_statistic(values, data):
    """
    Property 5: Sup-Inf Representations Evaluate Their Targets (l-th Largest)

    For any values v_1..v_d and rank l: the l-th largest target over the unit
    pieces evaluated at v is the l-th entry of v sorted in decreasing order.
    """
    d = len(values)
    l = data.draw(st.integers(1, d))
    target = lth_largest_target(np.eye(d), l)
    assert eval_target(target, values) == sorted(values, reverse=True)[l - 1]


@st.composite
def _two_families(draw):
    dim = draw(st.integers(1, 3))
    mu = half_integer_matrix(draw, draw(st.integers(1, 3)), dim)
    nu = half_integer_matrix(draw, draw(st.integers(1, 3)), dim)
    f = half_integer_matrix(draw, 1, dim)[0]
    return mu, nu, f


@pytest.mark.property
@given(parts=_two_families())
@settings(max_examples=100)
def test_difference_of_sups(parts):
    """
    Property 5: Sup-Inf Representations Evaluate Their Targets (Difference of Sups)

    For any families mu, nu and element f: the target equals max mu f - max nu f.
    """
    mu, nu, f = parts
    target = difference_of_sups_target(mu, nu)
    assert eval_target(target, f) == pytest.approx(np.max(mu @ f) - np.max(nu @ f))


@pytest.mark.property
@given(parts=_two_families())
@settings(max_examples=100)
def test_negation(parts):
    """
    Property 5: Sup-Inf Representations Evaluate Their Targets (Negation)

    For any sup target and sup-inf target: negating flips the sign of the value.
    """
    mu, nu, f = parts
    for target in (sup_target(mu), difference_of_sups_target(mu, nu)):
        assert eval_target(negate_target(target), f) == pytest.approx(-eval_target(target, f))
