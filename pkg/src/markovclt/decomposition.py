"""Martingale kernel construction, diffusion matrix, and moment-exponent arithmetic."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .chain import FiniteChain, Observable
from .errors import InvalidRegime, NoConvergence, SolveFailure
from .resolvent import solve_resolvent

MARTINGALE_TOL = 1e-10
EIG_CUTOFF = 1e-10


@dataclass(frozen=True)
class MartingaleKernel:
    """Per-edge increment function H(x, y), defined on the support of Q.

    Rows summed against Q(x, .) vanish: the increments form a martingale
    difference sequence along any path of the chain.
    """

    H: np.ndarray  # (n_states, n_states, d); zero off the support
    support: np.ndarray  # boolean (n_states, n_states)
    source: str  # "epsilon_limit" | "poisson"
    cauchy_gap: float

    @property
    def d(self) -> int:
        return self.H.shape[2]


@dataclass(frozen=True)
class DiffusionMatrix:
    """Limiting covariance rate D with a factor Lambda, D = Lambda Lambda^T."""

    D: np.ndarray  # (d, d)
    Lambda: np.ndarray  # (d, rank_m)
    rank_m: int


@dataclass(frozen=True)
class MomentExponents:
    """Admissible (q, a, b) derived from a moment exponent p and growth alpha."""

    p: float
    alpha: float
    q: float
    a: float
    b: float


def l2_pi1_norm(chain: FiniteChain, H: np.ndarray) -> float:
    """L2 norm of an edge function under pi1(x, y) = pi(x) Q(x, y)."""
    w = chain.pi[:, None] * chain.Q
    return float(np.sqrt(np.sum(w[:, :, None] * H ** 2)))


def kernel_from_h(chain: FiniteChain, h: np.ndarray, source: str, cauchy_gap: float = 0.0) -> MartingaleKernel:
    """Assemble H(x, y) = h(y) - (Qh)(x) on the support of Q."""
    Qh = chain.Q @ h
    H = h[None, :, :] - Qh[:, None, :]
    support = chain.Q > 0
    H = np.where(support[:, :, None], H, 0.0)
    defect = np.max(np.abs(np.einsum("xy,xyd->xd", chain.Q, H)))
    if defect > MARTINGALE_TOL:
        raise SolveFailure(f"martingale defect {defect:.3e} above {MARTINGALE_TOL:.1e}")
    return MartingaleKernel(H=H, support=support, source=source, cauchy_gap=float(cauchy_gap))


def poisson_solve(chain: FiniteChain, g: Observable) -> np.ndarray:
    """Unique pi-mean-zero solution h of (I - Q) h = g.

    Solved as (I - Q + 1 pi^T) h = g; the rank-one correction pins the
    pi-mean to zero and makes the system nonsingular.
    """
    n = chain.n_states
    A = np.eye(n) - chain.Q + np.outer(np.ones(n), chain.pi)
    try:
        h = np.linalg.solve(A, g.values)
    except np.linalg.LinAlgError as exc:  # pragma: no cover
        raise SolveFailure(f"Poisson solve failed: {exc}") from exc
    residual = np.max(np.abs((np.eye(n) - chain.Q) @ h - g.values))
    if residual > 1e-10 * (1.0 + np.max(np.abs(g.values))):
        raise SolveFailure(f"Poisson residual {residual:.3e} too large")
    return h


def limit_kernel(chain: FiniteChain, g: Observable, k_max: int = 60, tol: float = 1e-9) -> MartingaleKernel:
    """Kernel as the small-epsilon limit along the dyadic schedule 2^{-k}.

    Stops once consecutive kernels are within tol in L2(pi1), then
    cross-checks against the exact Poisson-route kernel within 10 * tol.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    prev = None
    gaps = []
    for k in range(1, k_max + 1):
        h = solve_resolvent(chain, g, 2.0 ** -k).h
        Qh = chain.Q @ h
        H = np.where((chain.Q > 0)[:, :, None], h[None, :, :] - Qh[:, None, :], 0.0)
        if prev is not None:
            gap = l2_pi1_norm(chain, H - prev)
            gaps.append(gap)
            if gap < tol:
                exact = kernel_from_h(chain, poisson_solve(chain, g), source="poisson")
                mismatch = l2_pi1_norm(chain, H - exact.H)
                if mismatch > 10.0 * tol:
                    raise NoConvergence(
                        f"epsilon-route kernel off the Poisson route by {mismatch:.3e} (> 10*tol)"
                    )
                return kernel_from_h(chain, h, source="epsilon_limit", cauchy_gap=gap)
        prev = H
    raise NoConvergence(f"kernel gap not below {tol:.1e} after k_max={k_max}; gaps={gaps}")


def diffusion_matrix(chain: FiniteChain, kernel: MartingaleKernel) -> DiffusionMatrix:
    """D = sum_{x,y} pi(x) Q(x,y) H(x,y) H(x,y)^T, factored as Lambda Lambda^T."""
    w = chain.pi[:, None] * chain.Q
    D = np.einsum("xy,xyi,xyj->ij", w, kernel.H, kernel.H)
    D = 0.5 * (D + D.T)
    eigvals, eigvecs = np.linalg.eigh(D)
    keep = eigvals > EIG_CUTOFF
    Lambda = eigvecs[:, keep] * np.sqrt(eigvals[keep])
    return DiffusionMatrix(D=D, Lambda=Lambda, rank_m=int(np.count_nonzero(keep)))


def lq_exponent(p: float, alpha: float, selector: float = 0.5) -> MomentExponents:
    """Pick admissible Holder exponents from the (p, alpha) regime.

    q sits a fraction `selector` of the way from 2 to the upper bound
    (3 - 2 alpha) p / (1 - 2 alpha + p); then a = p (q - 2) / (p - 2) and
    b = q - a, which must satisfy a - b/2 + alpha b < 0.
    """
    if p <= 2 or not (0 < alpha < 0.5):
        raise InvalidRegime(f"need p > 2 and 0 < alpha < 1/2, got p={p}, alpha={alpha}")
    if not (0 < selector < 1):
        raise ValueError("selector must lie in (0, 1)")
    q_bound = (3.0 - 2.0 * alpha) * p / (1.0 - 2.0 * alpha + p)
    if q_bound <= 2.0:  # pragma: no cover - excluded by the regime check above
        raise InvalidRegime(f"empty admissible interval: q_bound={q_bound}")
    q = 2.0 + selector * (q_bound - 2.0)
    a = p * (q - 2.0) / (p - 2.0)
    b = q - a
    crit = a - b / 2.0 + alpha * b
    if not (2.0 < q < p) or crit >= 0:
        raise InvalidRegime(f"exponent check failed: q={q}, a={a}, b={b}, a-b/2+alpha*b={crit}")
    return MomentExponents(p=float(p), alpha=float(alpha), q=float(q), a=float(a), b=float(b))


def remainder_second_moment(chain: FiniteChain, g: Observable, n: int) -> float:
    """Exact stationary E|R_n|^2 for the remainder R_n = S_n - M_n.

    On a finite chain R_n = h(X_0) - h(X_n) pathwise with h the Poisson
    solution, so the moment is a weighted sum over (X_0, X_n) pairs.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    h = poisson_solve(chain, g)
    Qn = np.linalg.matrix_power(chain.Q, n)
    diff2 = np.sum((h[:, None, :] - h[None, :, :]) ** 2, axis=2)
    return float(np.sum(chain.pi[:, None] * Qn * diff2))
