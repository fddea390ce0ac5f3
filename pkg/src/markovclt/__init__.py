"""Martingale decomposition laboratory for additive functionals of finite Markov chains."""

__version__ = "0.1.0"

from .chain import FiniteChain, Observable, center_observable, edge_measure, validate_chain
from .decomposition import (
    DiffusionMatrix,
    MartingaleKernel,
    MomentExponents,
    diffusion_matrix,
    limit_kernel,
    lq_exponent,
    poisson_solve,
    remainder_second_moment,
)
from .estimator import MartingaleApproximator
from .resolvent import (
    GrowthReport,
    PartialSumTable,
    ResolventSolution,
    estimate_growth,
    partial_sums,
    resolvent_norm_scan,
    resolvent_series,
    solve_resolvent,
)
from .simulate import (
    PathTrace,
    ScaledPath,
    path_functionals,
    sample_brownian,
    sample_path,
    scaled_path,
    simulate_ensemble,
)

__all__ = [
    "FiniteChain",
    "Observable",
    "validate_chain",
    "edge_measure",
    "center_observable",
    "ResolventSolution",
    "PartialSumTable",
    "GrowthReport",
    "solve_resolvent",
    "resolvent_series",
    "partial_sums",
    "estimate_growth",
    "resolvent_norm_scan",
    "MartingaleKernel",
    "DiffusionMatrix",
    "MomentExponents",
    "poisson_solve",
    "limit_kernel",
    "diffusion_matrix",
    "lq_exponent",
    "remainder_second_moment",
    "PathTrace",
    "ScaledPath",
    "sample_path",
    "path_functionals",
    "scaled_path",
    "sample_brownian",
    "simulate_ensemble",
    "MartingaleApproximator",
]
