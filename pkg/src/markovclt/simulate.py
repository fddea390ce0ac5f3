"""Path sampling and pathwise functionals: S, M, R, centered sums, scaled paths.

Randomness is counter-based: every path owns a Philox stream keyed by
(seed, path_id) and uniform j of that stream drives step j. Results are
therefore independent of worker count and scheduling order.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .chain import FiniteChain, Observable
from .decomposition import MartingaleKernel
from .errors import MissingEdge
from .resolvent import PartialSumTable


@dataclass(frozen=True)
class PathTrace:
    """Cumulative functionals along one path; S_k - M_k - R_k = 0 by construction."""

    start: int
    n: int
    states: np.ndarray  # (n + 1,)
    S: np.ndarray  # (n + 1, d)
    M: np.ndarray  # (n + 1, d)
    R: np.ndarray  # (n + 1, d)
    S_tilde: np.ndarray  # (n + 1, d)


@dataclass(frozen=True)
class ScaledPath:
    """Right-continuous step function t -> n^{-1/2} S_{[n t]} on [0, 1]."""

    n: int
    grid: np.ndarray  # (n + 1,) time points k/n
    values: np.ndarray  # (n + 1, d)

    def at(self, t: float) -> np.ndarray:
        k = min(int(np.floor(self.n * t)), self.n)
        return self.values[k]


@dataclass(frozen=True)
class EnsembleSummary:
    """Streaming per-path statistics captured at checkpoint steps."""

    start: int
    n: int
    checkpoints: np.ndarray  # (c,)
    S_at: np.ndarray  # (n_paths, c, d)
    M_at: np.ndarray  # (n_paths, c, d)
    max_abs_R: np.ndarray  # (n_paths, c) running max of |R_k|, k <= checkpoint
    seed: int
    path_ids: np.ndarray


def _path_uniforms(seed: int, path_id: int, n: int) -> np.ndarray:
    gen = np.random.Generator(np.random.Philox(key=[int(seed), int(path_id)]))
    return gen.random(n)


def sample_path(chain: FiniteChain, start: int, n: int, seed: int, path_id: int = 0) -> np.ndarray:
    """One path of length n from a fixed start, by inverse-CDF transitions."""
    if not (0 <= start < chain.n_states):
        raise ValueError(f"start {start} out of range")
    states = np.empty(n + 1, dtype=np.int64)
    states[0] = start
    if n == 0:
        return states
    cdf = np.cumsum(chain.Q, axis=1)
    u = _path_uniforms(seed, path_id, n)
    x = start
    for k in range(n):
        x = int(np.searchsorted(cdf[x], u[k], side="right"))
        x = min(x, chain.n_states - 1)  # guard against cdf[-1] = 1 - ulp
        states[k + 1] = x
    return states


def _sample_batch(chain: FiniteChain, start: int, n: int, seed: int, path_ids: np.ndarray) -> np.ndarray:
    """Paths for a block of path ids, vectorized over paths at each step."""
    cdf = np.cumsum(chain.Q, axis=1)
    u = np.stack([_path_uniforms(seed, pid, n) for pid in path_ids])
    states = np.empty((len(path_ids), n + 1), dtype=np.int64)
    states[:, 0] = start
    x = states[:, 0]
    for k in range(n):
        x = np.sum(u[:, k, None] >= cdf[x], axis=1)
        np.clip(x, 0, chain.n_states - 1, out=x)
        states[:, k + 1] = x
    return states


def path_functionals(
    path: np.ndarray,
    g: Observable,
    kernel: MartingaleKernel,
    T: PartialSumTable,
) -> PathTrace:
    """Cumulative S, M, R and centered sums along a realized path."""
    path = np.asarray(path, dtype=np.int64)
    n = len(path) - 1
    if T.n_max < n:
        raise ValueError(f"partial-sum table covers n <= {T.n_max}, path has n = {n}")
    x, y = path[:-1], path[1:]
    if n > 0 and not np.all(kernel.support[x, y]):
        bad = int(np.argmin(kernel.support[x, y]))
        raise MissingEdge(f"transition {path[bad]} -> {path[bad + 1]} at step {bad} is off the support")
    d = g.d
    S = np.zeros((n + 1, d))
    M = np.zeros((n + 1, d))
    if n > 0:
        np.cumsum(g.values[x], axis=0, out=S[1:])
        np.cumsum(kernel.H[x, y], axis=0, out=M[1:])
    S_tilde = S - T.T[: n + 1, path[0], :]
    return PathTrace(start=int(path[0]), n=n, states=path, S=S, M=M, R=S - M, S_tilde=S_tilde)


def scaled_path(trace: PathTrace, variant: str = "plain") -> ScaledPath:
    """Scale a trace to the unit interval with n^{-1/2} and floor time indexing."""
    if variant not in ("plain", "centered"):
        raise ValueError(f"unknown variant {variant!r}")
    vals = trace.S if variant == "plain" else trace.S_tilde
    n = trace.n
    return ScaledPath(n=n, grid=np.arange(n + 1) / n, values=vals / np.sqrt(n))


def sample_brownian(Lambda: np.ndarray, grid: Sequence[float], seed: int, path_id: int = 0) -> ScaledPath:
    """Reference path W = Lambda B on a given grid, B standard m-dimensional."""
    grid = np.asarray(grid, dtype=float)
    if len(grid) and (np.any(np.diff(grid) <= 0) or grid[0] <= 0 or grid[-1] > 1):
        raise ValueError("grid must be increasing within (0, 1]")
    Lambda = np.atleast_2d(np.asarray(Lambda, dtype=float))
    d, m = Lambda.shape
    times = np.concatenate([[0.0], grid])
    values = np.zeros((len(times), d))
    if m > 0 and len(grid) > 0:
        gen = np.random.Generator(np.random.Philox(key=[int(seed), int(path_id)]))
        z = gen.standard_normal((len(grid), m))
        incr = z * np.sqrt(np.diff(times))[:, None] @ Lambda.T
        values[1:] = np.cumsum(incr, axis=0)
    return ScaledPath(n=len(grid), grid=times, values=values)


def simulate_ensemble(
    chain: FiniteChain,
    g: Observable,
    kernel: MartingaleKernel,
    start: int,
    n: int,
    n_paths: int,
    seed: int,
    checkpoints: Sequence[int] | None = None,
    workers: int = 1,
    path_id_offset: int = 0,
) -> EnsembleSummary:
    """Many paths from one start, reduced to streaming summaries.

    Memory stays O(n_paths * d): only S, M at the checkpoints and the running
    max of |R| are retained, which keeps n = 10^6 feasible.
    """
    if checkpoints is None:
        checkpoints = [n]
    cps = np.asarray(sorted(set(int(c) for c in checkpoints)), dtype=np.int64)
    if len(cps) == 0 or cps[0] < 1 or cps[-1] > n:
        raise ValueError("checkpoints must lie in 1..n")
    path_ids = np.arange(path_id_offset, path_id_offset + n_paths, dtype=np.int64)

    def run_block(ids: np.ndarray):
        states = _sample_batch(chain, start, n, seed, ids)
        d = g.d
        P = len(ids)
        S = np.zeros((P, d))
        M = np.zeros((P, d))
        run_max = np.zeros(P)
        S_at = np.zeros((P, len(cps), d))
        M_at = np.zeros((P, len(cps), d))
        max_at = np.zeros((P, len(cps)))
        cp_set = {int(c): i for i, c in enumerate(cps)}
        for k in range(n):
            x, y = states[:, k], states[:, k + 1]
            S += g.values[x]
            M += kernel.H[x, y]
            np.maximum(run_max, np.linalg.norm(S - M, axis=1), out=run_max)
            i = cp_set.get(k + 1)
            if i is not None:
                S_at[:, i] = S
                M_at[:, i] = M
                max_at[:, i] = run_max
        return S_at, M_at, max_at

    if workers <= 1 or n_paths < 2 * workers:
        blocks = [run_block(path_ids)]
    else:
        chunks = np.array_split(path_ids, workers)
        with ThreadPoolExecutor(max_workers=workers) as pool:
            blocks = list(pool.map(run_block, chunks))
    S_at = np.concatenate([b[0] for b in blocks])
    M_at = np.concatenate([b[1] for b in blocks])
    max_at = np.concatenate([b[2] for b in blocks])
    return EnsembleSummary(
        start=int(start), n=int(n), checkpoints=cps,
        S_at=S_at, M_at=M_at, max_abs_R=max_at, seed=int(seed), path_ids=path_ids,
    )
