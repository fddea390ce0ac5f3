import numpy as np
import pytest

from markovclt.chain import center_observable, validate_chain
from markovclt.decomposition import kernel_from_h, limit_kernel, poisson_solve
from markovclt.errors import MissingEdge
from markovclt.resolvent import partial_sums
from markovclt.simulate import (
    _sample_batch,
    path_functionals,
    sample_brownian,
    sample_path,
    scaled_path,
    simulate_ensemble,
)

from conftest import random_chain_and_obs


def test_deterministic_chain_path(alternating):
    chain, _ = alternating
    np.testing.assert_array_equal(sample_path(chain, 0, 4, seed=123), [0, 1, 0, 1, 0])


def test_zero_length_path(reference):
    chain, _ = reference
    np.testing.assert_array_equal(sample_path(chain, 2, 0, seed=1), [2])


def test_iid_state_frequencies(iid_pm1):
    chain, _ = iid_pm1
    n = 100_000
    path = sample_path(chain, 0, n, seed=99)
    freq = np.bincount(path[1:], minlength=2) / n
    assert np.max(np.abs(freq - chain.pi)) <= 4.0 / np.sqrt(n)


def test_path_reproducibility_and_batch_consistency(reference):
    chain, _ = reference
    a = sample_path(chain, 0, 50, seed=7, path_id=3)
    b = sample_path(chain, 0, 50, seed=7, path_id=3)
    np.testing.assert_array_equal(a, b)
    batch = _sample_batch(chain, 0, 50, seed=7, path_ids=np.array([2, 3, 4]))
    np.testing.assert_array_equal(batch[1], a)
    assert not np.array_equal(batch[0], batch[1])  # distinct path ids differ


def test_path_functionals_zero_observable(reference):
    chain, _ = reference
    g0 = center_observable(np.zeros((3, 1)), chain)
    kernel = limit_kernel(chain, g0)
    table = partial_sums(chain, g0, 16)
    trace = path_functionals(sample_path(chain, 0, 16, seed=4), g0, kernel, table)
    for arr in (trace.S, trace.M, trace.R, trace.S_tilde):
        np.testing.assert_allclose(arr, 0.0, atol=0)


def test_path_functionals_alternating(alternating):
    chain, g = alternating
    kernel = limit_kernel(chain, g)
    table = partial_sums(chain, g, 8)
    trace = path_functionals(np.array([0, 1, 0, 1, 0, 1, 0, 1, 0]), g, kernel, table)
    np.testing.assert_allclose(trace.S[:, 0], [0, 1, 0, 1, 0, 1, 0, 1, 0], atol=1e-12)
    np.testing.assert_allclose(trace.M, 0.0, atol=1e-8)
    np.testing.assert_allclose(trace.R, trace.S, atol=1e-8)


def test_path_functionals_iid_remainder_identity(iid_pm1):
    chain, g = iid_pm1
    kernel = kernel_from_h(chain, poisson_solve(chain, g), "poisson")
    table = partial_sums(chain, g, 64)
    path = sample_path(chain, 1, 64, seed=11)
    trace = path_functionals(path, g, kernel, table)
    # h = g for the i.i.d. chain, so R_k = g(X_0) - g(X_k).
    expected = g.values[path[0]] - g.values[path]
    np.testing.assert_allclose(trace.R, expected, atol=1e-10)


def test_trace_identities(reference):
    chain, g = reference
    kernel = limit_kernel(chain, g)
    table = partial_sums(chain, g, 128)
    h = poisson_solve(chain, g)
    trace = path_functionals(sample_path(chain, 1, 128, seed=21), g, kernel, table)
    np.testing.assert_allclose(trace.S - trace.M - trace.R, 0.0, atol=0)
    np.testing.assert_allclose(
        trace.S_tilde, trace.S - table.T[:129, 1, :], atol=1e-12)
    # Pathwise identity R_k = h(X_0) - h(X_k), up to the kernel tolerance.
    expected = h[trace.states[0]] - h[trace.states]
    assert np.max(np.abs(trace.R - expected)) <= 1e-9 * 128


def test_missing_edge_rejected(alternating):
    chain, g = alternating
    kernel = limit_kernel(chain, g)
    table = partial_sums(chain, g, 4)
    with pytest.raises(MissingEdge):
        path_functionals(np.array([0, 0, 1]), g, kernel, table)


def test_scaled_path_floor_convention(alternating):
    chain, g = alternating
    kernel = limit_kernel(chain, g)
    table = partial_sums(chain, g, 4)
    trace = path_functionals(np.array([0, 1, 0, 1, 0]), g, kernel, table)
    sp = scaled_path(trace)
    assert sp.at(0.0) == pytest.approx(0.0)
    assert sp.at(0.24)[0] == pytest.approx(0.0)  # [4 * 0.24] = 0
    np.testing.assert_allclose(sp.at(1.0), trace.S[4] / 2.0, atol=1e-15)
    np.testing.assert_allclose(sp.values[:, 0], np.array([0, 1, 0, 1, 0]) / 2.0, atol=1e-15)


def test_scaled_path_centered_variant(reference):
    chain, g = reference
    kernel = limit_kernel(chain, g)
    table = partial_sums(chain, g, 16)
    trace = path_functionals(sample_path(chain, 0, 16, seed=2), g, kernel, table)
    sp = scaled_path(trace, variant="centered")
    np.testing.assert_allclose(sp.values, trace.S_tilde / 4.0, atol=1e-15)


def test_brownian_rank_zero_is_flat():
    sp = sample_brownian(np.zeros((2, 0)), [0.5, 1.0], seed=3)
    np.testing.assert_allclose(sp.values, 0.0, atol=0)


def test_brownian_unit_variance():
    draws = np.array(
        [sample_brownian(np.eye(1), [1.0], seed=5, path_id=i).values[-1, 0] for i in range(20_000)]
    )
    assert abs(draws.mean()) <= 3.0 / np.sqrt(len(draws))
    assert abs(draws.var() - 1.0) <= 3.0 * np.sqrt(2.0 / len(draws))


def test_brownian_covariance_self_test():
    rng = np.random.default_rng(0)
    Lambda = rng.standard_normal((2, 2))
    n = 20_000
    W1 = np.stack(
        [sample_brownian(Lambda, [0.5, 1.0], seed=9, path_id=i).values[-1] for i in range(n)]
    )
    target = Lambda @ Lambda.T
    cov = np.cov(W1.T)
    se = np.sqrt((np.outer(np.diag(target), np.diag(target)) + target ** 2) / n)
    assert np.all(np.abs(cov - target) <= 3.0 * se)


def test_ensemble_worker_independence(reference):
    chain, g = reference
    kernel = limit_kernel(chain, g)
    kw = dict(start=0, n=200, n_paths=64, seed=17, checkpoints=[50, 200])
    one = simulate_ensemble(chain, g, kernel, workers=1, **kw)
    eight = simulate_ensemble(chain, g, kernel, workers=8, **kw)
    np.testing.assert_array_equal(one.S_at, eight.S_at)
    np.testing.assert_array_equal(one.M_at, eight.M_at)
    np.testing.assert_array_equal(one.max_abs_R, eight.max_abs_R)


def test_martingale_mean_zero_band(reference):
    chain, g = reference
    kernel = limit_kernel(chain, g)
    from markovclt.decomposition import diffusion_matrix

    D = diffusion_matrix(chain, kernel)
    n, n_paths = 400, 4000
    ens = simulate_ensemble(chain, g, kernel, start=1, n=n, n_paths=n_paths, seed=31)
    mean_M = ens.M_at[:, -1, :].mean(axis=0)
    band = 3.0 * np.sqrt(np.trace(D.D) * n / n_paths)
    assert np.linalg.norm(mean_M) <= band
