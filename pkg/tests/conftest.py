import numpy as np
import pytest

from markovclt.chain import center_observable, reference_chain, validate_chain


def random_irreducible(rng, n_states, floor=0.05):
    """Dense random stochastic matrix; the floor keeps it irreducible and aperiodic."""
    Q = rng.random((n_states, n_states)) + floor
    return Q / Q.sum(axis=1, keepdims=True)


def random_chain_and_obs(seed, n_states=None, d=1):
    rng = np.random.default_rng(seed)
    if n_states is None:
        n_states = int(rng.integers(3, 9))
    chain = validate_chain(random_irreducible(rng, n_states))
    g = center_observable(rng.standard_normal((n_states, d)), chain)
    return chain, g


@pytest.fixture
def alternating():
    chain = validate_chain([[0.0, 1.0], [1.0, 0.0]])
    g = center_observable([[1.0], [-1.0]], chain)
    return chain, g


@pytest.fixture
def iid_pm1():
    """Two-state chain with identical rows: i.i.d. +-1 sampling."""
    chain = validate_chain(np.full((2, 2), 0.5))
    g = center_observable([[1.0], [-1.0]], chain)
    return chain, g


@pytest.fixture
def reference():
    return reference_chain()
