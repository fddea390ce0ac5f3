"""Brute-force exact laws on tiny instances, used to ground-truth everything else."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .chain import FiniteChain, Observable
from .decomposition import MartingaleKernel
from .errors import TooLarge

QUANT = 1e-9  # value-tuple quantization when merging float atoms


@dataclass(frozen=True)
class ExactDistribution:
    """Exact joint law of (S_n, M_n, R_n) from a fixed start state."""

    n: int
    start: int
    support: list  # (probability, (S, M, R)) with d-vector components


def enumerate_paths(
    chain: FiniteChain,
    g: Observable,
    kernel: MartingaleKernel,
    start: int,
    n: int,
    max_paths: int = 10 ** 7,
) -> ExactDistribution:
    """Exhaustive path enumeration, weighting each path by its probability."""
    if chain.n_states ** n > max_paths:
        raise TooLarge(f"{chain.n_states}^{n} paths exceed the budget {max_paths}")
    d = g.d
    # Partial-path frontier, expanded one step at a time; zero-probability
    # branches are pruned so the frontier tracks the support only.
    states = np.array([start], dtype=np.int64)
    probs = np.array([1.0])
    S = np.zeros((1, d))
    M = np.zeros((1, d))
    for _ in range(n):
        x = states
        nxt_states, nxt_probs, nxt_S, nxt_M = [], [], [], []
        for y in range(chain.n_states):
            q = chain.Q[x, y]
            keep = q > 0
            if not np.any(keep):
                continue
            nxt_states.append(np.full(np.count_nonzero(keep), y, dtype=np.int64))
            nxt_probs.append(probs[keep] * q[keep])
            nxt_S.append(S[keep] + g.values[x[keep]])
            nxt_M.append(M[keep] + kernel.H[x[keep], y])
        states = np.concatenate(nxt_states)
        probs = np.concatenate(nxt_probs)
        S = np.concatenate(nxt_S)
        M = np.concatenate(nxt_M)

    atoms: dict[tuple, list] = {}
    for i in range(len(probs)):
        s, m = S[i], M[i]
        r = s - m
        key = tuple(np.round(np.concatenate([s, m]) / QUANT).astype(np.int64))
        if key in atoms:
            atoms[key][0] += probs[i]
        else:
            atoms[key] = [probs[i], (s.copy(), m.copy(), r.copy())]
    support = [(p, v) for p, v in atoms.values()]
    total = sum(p for p, _ in support)
    assert abs(total - 1.0) < 1e-12
    return ExactDistribution(n=n, start=start, support=support)


def exact_moments(dist: ExactDistribution) -> dict:
    """Weighted-sum moments of the enumerated joint law."""
    probs = np.array([p for p, _ in dist.support])
    S = np.array([v[0] for _, v in dist.support])
    M = np.array([v[1] for _, v in dist.support])
    R = np.array([v[2] for _, v in dist.support])
    ES = probs @ S
    cov_S = np.einsum("i,ij,ik->jk", probs, S, S) - np.outer(ES, ES)
    return {
        "E_S": ES,
        "Cov_S": cov_S,
        "E_R_sq": float(probs @ np.sum(R ** 2, axis=1)),
        "E_MMT": np.einsum("i,ij,ik->jk", probs, M, M),
        "E_M": probs @ M,
    }


def exact_Sn_covariance(chain: FiniteChain, g: Observable, n: int) -> np.ndarray:
    """Stationary Cov(S_n) via matrix-power autocovariances, no enumeration.

    Cov(S_n) = n C_0 + sum_{l=1}^{n-1} (n - l)(C_l + C_l^T) with
    C_l = sum_x pi(x) g(x) (Q^l g)(x)^T; scales to n = 10^4 and beyond.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    G = g.values
    Gw = (chain.pi[:, None] * G).T  # (d, n_states)
    cov = n * (Gw @ G)
    v = G
    for l in range(1, n):
        v = chain.Q @ v
        C_l = Gw @ v
        cov = cov + (n - l) * (C_l + C_l.T)
    return 0.5 * (cov + cov.T)
