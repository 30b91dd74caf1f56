"""
Property-based tests for deterministic sampling.

Feature: optimal-recovery
Property 6: Sample Streams Are Prefix-Stable

For a fixed seed, the first n samples never depend on how many samples are
requested, and every sample lies in its set.
"""

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from src.model_sets import contains_many, sample, sample_noise
from src.models import NoiseModel
from src.settings import Settings
from tests.strategies.recovery_strategies import approx_set_strategy, polytope_strategy


SMALL_CHUNKS = Settings(sample_chunk_size=16)


@pytest.mark.property
@given(model=st.one_of(polytope_strategy(), approx_set_strategy()), seed=st.integers(0, 2 ** 20),
       n=st.integers(1, 40), extra=st.integers(0, 40))
@settings(max_examples=40, suppress_health_check=[HealthCheck.too_slow])
def test_model_samples_are_prefix_stable(model, seed, n, extra):
    """
    Property 6: Sample Streams Are Prefix-Stable (Model Sets)

    For any model set, seed and counts n <= n + k: sample(n) equals the first
    n rows of sample(n + k), and all rows are members of the set.
    """
    short = sample(model, seed, n, SMALL_CHUNKS)
    long = sample(model, seed, n + extra, SMALL_CHUNKS)
    np.testing.assert_array_equal(short, long[:n])
    assert np.all(contains_many(model, long))


@pytest.mark.property
@given(p=st.sampled_from(["1", "2", "inf"]), radius=st.integers(1, 4).map(lambda k: k / 4.0),
       m=st.integers(1, 4), seed=st.integers(0, 2 ** 20), n=st.integers(1, 40), extra=st.integers(0, 40))
@settings(max_examples=60)
def test_noise_samples_are_prefix_stable(p, radius, m, seed, n, extra):
    """
    Property 6: Sample Streams Are Prefix-Stable (Noise Balls)

    For any noise ball, seed and counts: noise samples are prefix-stable and
    lie in the ball.
    """
    noise = NoiseModel(p=p, radius=radius)
    short = sample_noise(noise, m, seed, n, SMALL_CHUNKS)
    long = sample_noise(noise, m, seed, n + extra, SMALL_CHUNKS)
    np.testing.assert_array_equal(short, long[:n])
    norms = np.linalg.norm(long, ord={"1": 1, "2": 2, "inf": np.inf}[p], axis=1)
    assert np.all(norms <= radius * (1.0 + 1e-12))
