"""Resolvent equation solves, partial-sum tables, and growth-exponent fits."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .chain import FiniteChain, Observable, pi_norm
from .errors import SolveFailure

RESIDUAL_TOL = 1e-9


@dataclass(frozen=True)
class ResolventSolution:
    """Solution h of (1+eps) h - Q h = g with its sup-norm residual."""

    epsilon: float
    h: np.ndarray  # (n_states, d)
    residual: float


@dataclass(frozen=True)
class SeriesTruncation:
    """K-term geometric-series approximation of the resolvent solution."""

    values: np.ndarray
    n_terms: int
    error_bound: float


@dataclass(frozen=True)
class PartialSumTable:
    """T[n] = sum_{k<n} Q^k g for n = 0..n_max, with L2(pi) norms."""

    T: np.ndarray  # (n_max + 1, n_states, d), T[0] = 0
    norms: np.ndarray  # (n_max + 1,)

    @property
    def n_max(self) -> int:
        return self.T.shape[0] - 1


@dataclass(frozen=True)
class GrowthReport:
    """Log-log fit of ||T_n||_2 against n over dyadic n."""

    alpha_hat: float
    C_hat: float
    fit_range: tuple[int, int]
    residual_r2: float
    n_fitted: np.ndarray
    excluded_zero_norms: np.ndarray
    degenerate: bool = False


def solve_resolvent(chain: FiniteChain, g: Observable, epsilon: float) -> ResolventSolution:
    """Direct dense solve of ((1+eps) I - Q) h = g.

    The matrix is strictly diagonally dominant for eps > 0, hence nonsingular.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    n = chain.n_states
    A = (1.0 + epsilon) * np.eye(n) - chain.Q
    try:
        h = np.linalg.solve(A, g.values)
    except np.linalg.LinAlgError as exc:  # pragma: no cover
        raise SolveFailure(f"resolvent solve failed at eps={epsilon}: {exc}") from exc
    residual = float(np.max(np.abs((1.0 + epsilon) * h - chain.Q @ h - g.values)))
    bound = RESIDUAL_TOL * (1.0 + float(np.max(np.abs(g.values))))
    if residual > bound:
        raise SolveFailure(f"resolvent residual {residual:.3e} above {bound:.3e}")
    return ResolventSolution(epsilon=float(epsilon), h=h, residual=residual)


def resolvent_series(chain: FiniteChain, g: Observable, epsilon: float, K: int) -> SeriesTruncation:
    """K-term truncation of h = sum_{k>=1} (1+eps)^{-k} Q^{k-1} g."""
    if K < 1:
        raise ValueError("K must be at least 1")
    term = g.values / (1.0 + epsilon)
    acc = term.copy()
    for _ in range(1, K):
        term = (chain.Q @ term) / (1.0 + epsilon)
        acc += term
    bound = (1.0 + epsilon) ** (-K) * float(np.max(np.abs(g.values))) / epsilon
    return SeriesTruncation(values=acc, n_terms=K, error_bound=bound)


def partial_sums(chain: FiniteChain, g: Observable, n_max: int) -> PartialSumTable:
    """Accumulate T[n+1] = g + Q T[n] and record L2(pi) norms."""
    if n_max < 1:
        raise ValueError("n_max must be at least 1")
    n, d = g.values.shape
    T = np.zeros((n_max + 1, n, d))
    norms = np.zeros(n_max + 1)
    for k in range(n_max):
        T[k + 1] = g.values + chain.Q @ T[k]
        norms[k + 1] = pi_norm(chain, T[k + 1])
    return PartialSumTable(T=T, norms=norms)


def estimate_growth(table: PartialSumTable, fit_range: tuple[int, int]) -> GrowthReport:
    """Least-squares exponent of ||T_n||_2 ~ n^alpha over dyadic n.

    Zero norms (exact cancellation on periodic chains) are excluded from the
    log fit, never clamped. C_hat is the tightest constant with
    ||T_n||_2^2 <= C_hat * n over the fitted points.
    """
    lo, hi = fit_range
    if not (1 <= lo < hi <= table.n_max):
        raise ValueError(f"fit_range {fit_range} outside table range 1..{table.n_max}")
    ns = np.array([n for n in (2 ** j for j in range(0, table.n_max.bit_length() + 1)) if lo <= n <= hi])
    if len(ns) < 4:
        raise ValueError("fit range must contain at least 4 dyadic points")
    vals = table.norms[ns]
    nonzero = vals > 0
    excluded = ns[~nonzero]
    ns_fit, vals_fit = ns[nonzero], vals[nonzero]
    if len(ns_fit) == 0:
        return GrowthReport(
            alpha_hat=0.0, C_hat=0.0, fit_range=(lo, hi), residual_r2=0.0,
            n_fitted=ns_fit, excluded_zero_norms=excluded, degenerate=True,
        )
    if len(ns_fit) == 1:
        slope, r2 = 0.0, 1.0
    else:
        x, y = np.log(ns_fit), np.log(vals_fit)
        slope, intercept = np.polyfit(x, y, 1)
        fitted = slope * x + intercept
        ss_res = float(np.sum((y - fitted) ** 2))
        ss_tot = float(np.sum((y - y.mean()) ** 2))
        r2 = 1.0 if ss_tot == 0 else 1.0 - ss_res / ss_tot
    C_hat = float(np.max(vals_fit ** 2 / ns_fit))
    return GrowthReport(
        alpha_hat=float(slope), C_hat=C_hat, fit_range=(lo, hi), residual_r2=float(r2),
        n_fitted=ns_fit, excluded_zero_norms=excluded,
    )


def resolvent_norm_scan(chain: FiniteChain, g: Observable, k_max: int):
    """Resolvent norms along the dyadic schedule delta_k = 2^{-k}.

    Returns the (delta_k, ||h_{delta_k}||_2) pairs and a fitted exponent of
    ||h_delta||_2 ~ delta^{-a}, comparable to the partial-sum growth exponent.
    """
    if k_max < 1:
        raise ValueError("k_max must be at least 1")
    deltas = 2.0 ** -np.arange(1, k_max + 1)
    norms = np.array([pi_norm(chain, solve_resolvent(chain, g, d).h) for d in deltas])
    nonzero = norms > 0
    if np.count_nonzero(nonzero) >= 2:
        slope, _ = np.polyfit(-np.log(deltas[nonzero]), np.log(norms[nonzero]), 1)
        fitted_exponent = float(slope)
    else:
        fitted_exponent = 0.0
    return list(zip(deltas.tolist(), norms.tolist())), fitted_exponent
