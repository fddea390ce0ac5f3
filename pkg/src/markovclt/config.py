"""YAML run configuration: chain/observable sources and per-stage parameters."""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .chain import FiniteChain, Observable, center_observable, load_matrix, validate_chain
from .errors import ConfigError


@dataclass
class RunConfig:
    chain_matrix: np.ndarray
    observable_values: np.ndarray
    p_exponent: float = 4.0
    # epsilon schedule
    kernel_k_max: int = 60
    kernel_tol: float = 1e-9
    # growth fit
    growth_n_max: int = 1024
    growth_fit_range: tuple = (8, 1024)
    # simulation
    starts: list = field(default_factory=lambda: [0])
    n_list: list = field(default_factory=lambda: [100, 1000, 10000])
    n_paths: int = 1000
    seed: int | None = None
    # verification
    t_grid: list = field(default_factory=lambda: [0.25, 0.5, 1.0])
    significance: float = 0.01
    decay_threshold: float = 0.05
    gof_n: int = 4096
    schedule_r: int = 2
    schedule_gamma: float = 0.5
    schedule_beta: float = 1.05
    schedule_j: int = 5
    # moment exponents
    p: float = 4.0
    alpha_override: float | None = None
    q_selector: float = 0.5
    # oracle
    oracle_n: int = 6
    oracle_max_paths: int = 10 ** 7
    output_dir: str = "out"
    workers: int = 1
    raw_text: str = ""


def _load_source(block, what: str, base: Path) -> np.ndarray:
    if not isinstance(block, dict):
        raise ConfigError(f"{what} section must be a mapping")
    if "file" in block:
        path = base / block["file"]
        if not path.exists():
            raise ConfigError(f"{what} file not found: {path}")
        return load_matrix(path)
    if "matrix" in block:
        return np.atleast_2d(np.asarray(block["matrix"], dtype=float))
    if "values" in block:
        return np.atleast_2d(np.asarray(block["values"], dtype=float))
    raise ConfigError(f"{what} section needs 'matrix', 'values', or 'file'")


def load_config(path) -> RunConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    text = path.read_text()
    raw = yaml.safe_load(text)
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a mapping")
    base = path.parent
    try:
        Q = _load_source(raw["chain"], "chain", base)
        g_block = raw["observable"]
        g_raw = _load_source(g_block, "observable", base)
    except KeyError as exc:
        raise ConfigError(f"missing config section: {exc}") from exc
    if g_raw.shape[0] != Q.shape[0] and g_raw.shape[1] == Q.shape[0]:
        g_raw = g_raw.T  # allow row-vector observables in inline configs

    cfg = RunConfig(chain_matrix=Q, observable_values=g_raw, raw_text=text)
    cfg.p_exponent = float(g_block.get("p_exponent", cfg.p_exponent))

    eps = raw.get("epsilon", {})
    cfg.kernel_k_max = int(eps.get("k_max", cfg.kernel_k_max))
    cfg.kernel_tol = float(eps.get("tol", cfg.kernel_tol))

    growth = raw.get("growth", {})
    cfg.growth_n_max = int(growth.get("n_max", cfg.growth_n_max))
    fr = growth.get("fit_range", list(cfg.growth_fit_range))
    cfg.growth_fit_range = (int(fr[0]), int(fr[1]))

    sim = raw.get("simulate", {})
    cfg.starts = [int(s) for s in sim.get("starts", cfg.starts)]
    cfg.n_list = [int(n) for n in sim.get("n_list", cfg.n_list)]
    cfg.n_paths = int(sim.get("n_paths", cfg.n_paths))
    if "seed" in sim:
        cfg.seed = int(sim["seed"])

    ver = raw.get("verify", {})
    cfg.t_grid = [float(t) for t in ver.get("t_grid", cfg.t_grid)]
    cfg.significance = float(ver.get("significance", cfg.significance))
    cfg.decay_threshold = float(ver.get("decay_threshold", cfg.decay_threshold))
    cfg.gof_n = int(ver.get("gof_n", cfg.gof_n))
    sched = ver.get("schedule", {})
    cfg.schedule_r = int(sched.get("r", cfg.schedule_r))
    cfg.schedule_gamma = float(sched.get("gamma", cfg.schedule_gamma))
    cfg.schedule_beta = float(sched.get("beta", cfg.schedule_beta))
    cfg.schedule_j = int(sched.get("j", cfg.schedule_j))

    mom = raw.get("moments", {})
    cfg.p = float(mom.get("p", cfg.p))
    if mom.get("alpha") is not None:
        cfg.alpha_override = float(mom["alpha"])
    cfg.q_selector = float(mom.get("q_selector", cfg.q_selector))

    orc = raw.get("oracle", {})
    cfg.oracle_n = int(orc.get("n", cfg.oracle_n))
    cfg.oracle_max_paths = int(orc.get("max_paths", cfg.oracle_max_paths))

    cfg.output_dir = str(raw.get("output_dir", cfg.output_dir))
    cfg.workers = int(raw.get("workers", cfg.workers))
    return cfg


def build_inputs(cfg: RunConfig) -> tuple[FiniteChain, Observable]:
    chain = validate_chain(cfg.chain_matrix)
    g = center_observable(cfg.observable_values, chain, cfg.p_exponent)
    return chain, g
