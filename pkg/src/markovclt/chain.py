"""Finite-state Markov chain model: validation, stationary law, observables."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.sparse.csgraph import connected_components

from .errors import NotStochastic, Reducible, SolveFailure

STOCHASTIC_TOL = 1e-12
STATIONARY_TOL = 1e-10


def _freeze(a: np.ndarray) -> np.ndarray:
    out = np.array(a, dtype=float, copy=True)
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class FiniteChain:
    """Irreducible row-stochastic matrix with its stationary distribution.

    Immutable after construction; safe to share across workers.
    """

    Q: np.ndarray
    pi: np.ndarray
    period_flag: bool

    @property
    def n_states(self) -> int:
        return self.Q.shape[0]


@dataclass(frozen=True)
class Observable:
    """Per-state d-vector table with zero mean under the stationary law."""

    values: np.ndarray  # (n_states, d)
    p_exponent: float = 4.0

    @property
    def d(self) -> int:
        return self.values.shape[1]


def _stationary_direct(Q: np.ndarray) -> np.ndarray:
    """Solve (Q^T - I) pi = 0 with the normalization row appended in place."""
    n = Q.shape[0]
    A = Q.T - np.eye(n)
    A[-1, :] = 1.0
    b = np.zeros(n)
    b[-1] = 1.0
    try:
        pi = np.linalg.solve(A, b)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - guarded by irreducibility
        raise SolveFailure(f"stationary solve failed: {exc}") from exc
    pi = np.clip(pi, 0.0, None)
    return pi / pi.sum()


def _stationary_power(Q: np.ndarray, tol: float = 1e-14, max_iter: int = 200_000) -> np.ndarray:
    """Power iteration on (I + Q)/2; the damping handles periodic chains."""
    n = Q.shape[0]
    P = 0.5 * (np.eye(n) + Q)
    v = np.full(n, 1.0 / n)
    for _ in range(max_iter):
        w = v @ P
        if np.max(np.abs(w - v)) < tol:
            return w / w.sum()
        v = w
    return v / v.sum()


def _period(Q: np.ndarray) -> int:
    """Period of an irreducible support graph via BFS level differences."""
    n = Q.shape[0]
    level = np.full(n, -1, dtype=int)
    level[0] = 0
    queue = [0]
    g = 0
    while queue:
        u = queue.pop()
        for v in np.nonzero(Q[u] > 0)[0]:
            if level[v] < 0:
                level[v] = level[u] + 1
                queue.append(v)
            else:
                g = math.gcd(g, level[u] + 1 - level[v])
    return abs(g) if g != 0 else 1


def validate_chain(Q, tol: float = STOCHASTIC_TOL) -> FiniteChain:
    """Validate a transition matrix and compute its stationary distribution.

    The stationary vector comes from a direct linear solve, cross-checked
    against damped power iteration; disagreement means numerical breakdown.
    """
    Q = np.asarray(Q, dtype=float)
    if Q.ndim != 2 or Q.shape[0] != Q.shape[1]:
        raise NotStochastic(f"matrix must be square, got shape {Q.shape}")
    if not np.all(np.isfinite(Q)):
        raise NotStochastic("matrix has non-finite entries")
    if np.any(Q < 0):
        raise NotStochastic("matrix has negative entries")
    row_err = np.max(np.abs(Q.sum(axis=1) - 1.0))
    if row_err > tol:
        raise NotStochastic(f"row sums deviate from 1 by {row_err:.3e} (tol {tol:.1e})")

    n_comp, _ = connected_components(Q > 0, directed=True, connection="strong")
    if n_comp != 1:
        raise Reducible(f"support graph has {n_comp} strongly connected components")

    pi = _stationary_direct(Q)
    pi_check = _stationary_power(Q)
    if np.max(np.abs(pi - pi_check)) > 1e-8:
        raise SolveFailure("stationary solve and power iteration disagree")
    stat_err = np.max(np.abs(pi @ Q - pi))
    if stat_err > STATIONARY_TOL:
        raise SolveFailure(f"stationary residual {stat_err:.3e} above tolerance")

    return FiniteChain(Q=_freeze(Q), pi=_freeze(pi), period_flag=_period(Q) > 1)


def edge_measure(chain: FiniteChain) -> np.ndarray:
    """Joint law of one transition: entry (x, y) = pi(x) Q(x, y)."""
    return chain.pi[:, None] * chain.Q


def center_observable(raw, chain: FiniteChain, p_exponent: float = 4.0) -> Observable:
    """Subtract the pi-mean from each column of a raw per-state table."""
    raw = np.asarray(raw, dtype=float)
    if raw.ndim == 1:
        raw = raw[:, None]
    if raw.shape[0] != chain.n_states:
        raise ValueError(f"observable has {raw.shape[0]} rows, chain has {chain.n_states} states")
    centered = raw - chain.pi @ raw
    return Observable(values=_freeze(centered), p_exponent=float(p_exponent))


def pi_norm(chain: FiniteChain, values: np.ndarray) -> float:
    """L2 norm under pi of a per-state d-vector table."""
    return float(np.sqrt(np.sum(chain.pi * np.sum(np.asarray(values) ** 2, axis=1))))


def load_matrix(path) -> np.ndarray:
    """Read a whitespace-separated numeric matrix from a text file."""
    return np.atleast_2d(np.loadtxt(path, dtype=float))


# 3-state spectral-gap chain used as the desk-scale reference instance.
REFERENCE_Q = np.array(
    [
        [0.50, 0.30, 0.20],
        [0.20, 0.60, 0.20],
        [0.10, 0.30, 0.60],
    ]
)
REFERENCE_G_RAW = np.array(
    [
        [1.0, 0.5],
        [-1.0, 0.25],
        [0.5, -1.0],
    ]
)


def reference_chain() -> tuple[FiniteChain, Observable]:
    """Build the bundled 3-state reference chain and its centered observable."""
    chain = validate_chain(REFERENCE_Q)
    return chain, center_observable(REFERENCE_G_RAW, chain)
