"""End-to-end acceptance suite.

Each test exercises one numbered acceptance criterion at its stated
tolerance and prints a single PASS/FAIL line; run with ``pytest -v`` (add
``-s`` to see the lines for passing tests too).
"""

import numpy as np
import pytest
import yaml

from markovclt.chain import center_observable, reference_chain, validate_chain
from markovclt.cli import main
from markovclt.decomposition import (
    InvalidRegime,
    diffusion_matrix,
    kernel_from_h,
    limit_kernel,
    lq_exponent,
    poisson_solve,
    remainder_second_moment,
)
from markovclt.oracle import enumerate_paths, exact_moments, exact_Sn_covariance
from markovclt.resolvent import partial_sums, resolvent_series, solve_resolvent
from markovclt.verify import collect_sup_decay_stats, marginal_gof, maximal_inequality_check

from conftest import random_chain_and_obs, random_irreducible


def _report(number, name, passed):
    print(f"acceptance {number:2d} {name}: {'PASS' if passed else 'FAIL'}")
    return passed


def _alternating():
    chain = validate_chain([[0.0, 1.0], [1.0, 0.0]])
    return chain, center_observable([[1.0], [-1.0]], chain)


def _iid_pm1():
    chain = validate_chain(np.full((2, 2), 0.5))
    return chain, center_observable([[1.0], [-1.0]], chain)


def _exact_kernel(chain, g):
    return kernel_from_h(chain, poisson_solve(chain, g), "poisson")


def test_01_resolvent_exactness():
    chain, g = _alternating()
    ok = True
    for eps in (1.0, 0.1, 2.0 ** -20):
        sol = solve_resolvent(chain, g, eps)
        expected = g.values / (2.0 + eps)
        ok &= float(np.max(np.abs(sol.h - expected))) <= 1e-12
        # Series cross-check wherever the truncation bound is certifiably tiny.
        K = 1
        while (1.0 + eps) ** (-K) / eps >= 1e-10 and K < 10_000:
            K *= 2
        series = resolvent_series(chain, g, eps, K)
        if series.error_bound < 1e-10:
            ok &= float(np.max(np.abs(series.values - sol.h))) <= 1e-9
    assert _report(1, "resolvent_exactness", ok)


def test_02_martingale_property():
    ok = True
    for seed in range(50):
        rng = np.random.default_rng(1000 + seed)
        n_states = int(rng.integers(3, 9))
        d = int(rng.integers(1, 4))
        chain = validate_chain(random_irreducible(rng, n_states))
        g = center_observable(rng.standard_normal((n_states, d)), chain)
        kernel = limit_kernel(chain, g)
        defect = float(np.max(np.abs(np.einsum("xy,xyi->xi", chain.Q, kernel.H))))
        ok &= defect <= 1e-10
        gap = np.sqrt(np.sum(
            chain.pi[:, None, None] * chain.Q[:, :, None]
            * (kernel.H - _exact_kernel(chain, g).H) ** 2))
        ok &= float(gap) <= 1e-6
    assert _report(2, "martingale_property", ok)


def test_03_diffusion_ground_truth():
    ok = True
    # i.i.d. chains: D equals the stationary covariance of g.
    rng = np.random.default_rng(7)
    for d in (1, 2, 3):
        pi = rng.dirichlet(np.ones(4))
        chain = validate_chain(np.tile(pi, (4, 1)))
        g = center_observable(rng.standard_normal((4, d)), chain)
        D = diffusion_matrix(chain, _exact_kernel(chain, g))
        cov_pi = np.einsum("x,xi,xj->ij", chain.pi, g.values, g.values)
        ok &= float(np.max(np.abs(D.D - cov_pi))) <= 1e-12
    # Alternating chain: bounded sums, degenerate diffusion.
    chain, g = _alternating()
    D = diffusion_matrix(chain, _exact_kernel(chain, g))
    ok &= D.rank_m == 0 and float(np.max(np.abs(D.D))) <= 1e-12
    assert _report(3, "diffusion_ground_truth", ok)


def test_04_oracle_equivalence():
    n = 6
    ok = True
    for seed in range(20):
        chain, g = random_chain_and_obs(2000 + seed, n_states=3, d=2)
        kernel = _exact_kernel(chain, g)
        D = diffusion_matrix(chain, kernel)
        ER2 = 0.0
        EMMT = np.zeros((g.d, g.d))
        for x in range(chain.n_states):
            ER2 += chain.pi[x] * exact_moments(enumerate_paths(chain, g, kernel, x, n))["E_R_sq"]
            EMMT += chain.pi[x] * exact_moments(enumerate_paths(chain, g, kernel, x, 1))["E_MMT"]
        ok &= abs(ER2 - remainder_second_moment(chain, g, n)) <= 1e-10
        ok &= float(np.max(np.abs(EMMT - D.D))) <= 1e-10
    assert _report(4, "oracle_equivalence", ok)


def test_05_diffusion_consistency():
    chain, g = reference_chain()
    D = diffusion_matrix(chain, _exact_kernel(chain, g))
    n = 10_000
    gap = float(np.max(np.abs(exact_Sn_covariance(chain, g, n) / n - D.D)))
    ok = gap <= 0.01 * float(np.max(np.abs(D.D)))
    assert _report(5, "diffusion_consistency", ok)


def test_06_invariance_surrogate():
    chain, g = _iid_pm1()
    kernel = _exact_kernel(chain, g)
    D = diffusion_matrix(chain, kernel)
    passes = sum(
        marginal_gof(chain, g, kernel, D, 0, 4096, 2000, [0.25, 0.5, 1.0], seed=seed).passed
        for seed in range(20))
    assert _report(6, "invariance_surrogate", passes >= 19), f"{passes}/20 seeds passed"


def test_07_remainder_decay():
    chain, g = reference_chain()
    h = poisson_solve(chain, g)
    kernel = kernel_from_h(chain, h, "poisson")
    bound = 2.0 * float(np.max(np.linalg.norm(h, axis=1)))
    stats = collect_sup_decay_stats(chain, g, kernel, 0, [100, 1000, 10_000], 1000, seed=3)
    percs = [float(np.percentile(stats[n], 95)) for n in (100, 1000, 10_000)]
    ok = percs[0] > percs[1] > percs[2]
    for n, vals in stats.items():
        ok &= bool(np.all(vals <= bound / np.sqrt(n) + 1e-10))
    assert _report(7, "remainder_decay", ok)


def test_08_maximal_inequality():
    ok = True
    for seed in range(20):
        chain, g = random_chain_and_obs(3000 + seed, d=2)
        table = partial_sums(chain, g, 1024)
        lam_max = float(np.max(np.linalg.norm(table.T, axis=2)))
        rep = maximal_inequality_check(
            chain, g, table, [2 ** j for j in range(11)],
            np.linspace(0.05 * lam_max, 2.0 * lam_max, 20), k_list=range(7))
        ok &= rep.passed and rep.statistics["violations"] == 0
    assert _report(8, "maximal_inequality", ok)


def test_09_centered_functional():
    n = 10_000
    ok = True
    chains = [reference_chain()] + [random_chain_and_obs(4000 + s, n_states=4, d=1)
                                    for s in range(4)]
    for chain, g in chains:
        h = poisson_solve(chain, g)
        table = partial_sums(chain, g, n)
        stat = np.max(np.linalg.norm(table.T, axis=2), axis=0) / np.sqrt(n)
        bound = 4.0 * float(np.max(np.linalg.norm(h, axis=1))) / np.sqrt(n)
        ok &= bool(np.all(stat <= bound + 1e-12))
    # i.i.d. closed form: T_k(x) = g(x) for all k >= 1.
    chain, g = _iid_pm1()
    table = partial_sums(chain, g, 256)
    stat = np.max(np.abs(table.T[:, :, 0]), axis=0) / np.sqrt(256)
    ok &= bool(np.all(np.abs(stat - np.abs(g.values[:, 0]) / np.sqrt(256)) <= 1e-12))
    assert _report(9, "centered_functional", ok)


def test_10_exponent_arithmetic():
    ok = True
    for p in np.linspace(2.1, 10.0, 10):
        for alpha in np.linspace(0.04, 0.46, 10):
            exps = lq_exponent(float(p), float(alpha))
            ok &= 2.0 < exps.q < p
            ok &= exps.a - exps.b / 2.0 + alpha * exps.b < 0.0
    with pytest.raises(InvalidRegime):
        lq_exponent(4.0, 0.5)
    assert _report(10, "exponent_arithmetic", ok)


def test_11_reproducibility(tmp_path):
    cfg = {
        "chain": {"matrix": [[0.5, 0.3, 0.2], [0.2, 0.6, 0.2], [0.1, 0.3, 0.6]]},
        "observable": {"values": [[1.0, 0.5], [-1.0, 0.25], [0.5, -1.0]]},
        "growth": {"n_max": 256, "fit_range": [4, 256]},
        "simulate": {"starts": [0], "n_list": [100, 400], "n_paths": 200, "seed": 11},
        "verify": {"gof_n": 512, "decay_threshold": 0.2,
                   "schedule": {"r": 2, "gamma": 0.5, "beta": 1.05, "j": 3}},
        "oracle": {"n": 5},
    }
    path = tmp_path / "run.yaml"
    path.write_text(yaml.safe_dump(cfg))
    out1, out8 = tmp_path / "w1", tmp_path / "w8"
    assert main(["verify", "--config", str(path), "--out", str(out1), "--workers", "1"]) == 0
    assert main(["verify", "--config", str(path), "--out", str(out8), "--workers", "8"]) == 0
    tables = sorted(p.name for p in out1.glob("table_*.txt"))
    ok = bool(tables)
    for name in tables:
        ok &= (out1 / name).read_text() == (out8 / name).read_text()
    assert _report(11, "reproducibility", ok)
