import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from markovclt.chain import center_observable, edge_measure, validate_chain
from markovclt.errors import NotStochastic, Reducible

from conftest import random_irreducible


def test_alternating_uniform_pi_and_period():
    chain = validate_chain([[0.0, 1.0], [1.0, 0.0]])
    np.testing.assert_allclose(chain.pi, [0.5, 0.5], atol=1e-14)
    assert chain.period_flag


def test_iid_chain_pi_equals_row():
    p = np.array([0.5, 0.25, 0.25])
    chain = validate_chain(np.tile(p, (3, 1)))
    np.testing.assert_allclose(chain.pi, p, atol=1e-12)
    assert not chain.period_flag


@given(st.integers(0, 10_000))
@settings(max_examples=50, deadline=None)
def test_stationarity_residual_random_chains(seed):
    rng = np.random.default_rng(seed)
    chain = validate_chain(random_irreducible(rng, int(rng.integers(2, 9))))
    assert np.max(np.abs(chain.pi @ chain.Q - chain.pi)) <= 1e-10
    assert abs(chain.pi.sum() - 1.0) <= 1e-12


def test_not_stochastic_row_sum():
    with pytest.raises(NotStochastic):
        validate_chain([[0.5, 0.49], [0.5, 0.5]])


def test_not_stochastic_negative_entry():
    with pytest.raises(NotStochastic):
        validate_chain([[1.1, -0.1], [0.5, 0.5]])


def test_reducible_block_matrix():
    with pytest.raises(Reducible):
        validate_chain([[1.0, 0.0], [0.0, 1.0]])


def test_edge_measure_alternating():
    chain = validate_chain([[0.0, 1.0], [1.0, 0.0]])
    np.testing.assert_allclose(edge_measure(chain), [[0.0, 0.5], [0.5, 0.0]], atol=1e-14)


def test_edge_measure_iid_outer_product():
    p = np.array([0.3, 0.3, 0.4])
    chain = validate_chain(np.tile(p, (3, 1)))
    np.testing.assert_allclose(edge_measure(chain), np.outer(p, p), atol=1e-12)


def test_edge_measure_normalization_and_marginal():
    rng = np.random.default_rng(5)
    chain = validate_chain(random_irreducible(rng, 5))
    m = edge_measure(chain)
    assert abs(m.sum() - 1.0) <= 1e-12
    np.testing.assert_allclose(m.sum(axis=1), chain.pi, atol=1e-12)


def test_center_constant_observable_is_zero():
    chain = validate_chain(np.full((3, 3), 1 / 3))
    g = center_observable(np.full((3, 2), 7.0), chain)
    np.testing.assert_allclose(g.values, 0.0, atol=1e-14)


def test_center_is_idempotent():
    rng = np.random.default_rng(1)
    chain = validate_chain(random_irreducible(rng, 4))
    once = center_observable(rng.standard_normal((4, 3)), chain)
    twice = center_observable(once.values, chain)
    np.testing.assert_allclose(once.values, twice.values, atol=1e-14)
    assert np.max(np.abs(chain.pi @ once.values)) <= 1e-10


def test_center_subtracts_pi_means():
    p = np.array([0.5, 0.25, 0.25])
    chain = validate_chain(np.tile(p, (3, 1)))
    g = center_observable(np.eye(3), chain)
    np.testing.assert_allclose(g.values, np.eye(3) - p, atol=1e-14)
