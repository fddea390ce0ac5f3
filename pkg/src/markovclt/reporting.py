"""Flat-text emission of matrices, kernels, and verification reports."""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .chain import FiniteChain
from .decomposition import MartingaleKernel
from .verify import VerificationReport


def write_matrix(path, arr) -> None:
    arr = np.atleast_2d(np.asarray(arr, dtype=float))
    np.savetxt(path, arr, fmt="%.17g")


def write_kernel(path, chain: FiniteChain, kernel: MartingaleKernel) -> None:
    """One row per support edge: x, y, Q(x, y), kernel components."""
    rows = []
    for x in range(chain.n_states):
        for y in range(chain.n_states):
            if kernel.support[x, y]:
                rows.append([x, y, chain.Q[x, y], *kernel.H[x, y]])
    np.savetxt(path, np.array(rows), fmt="%.17g")


def write_keyvalues(path, mapping: dict) -> None:
    with open(path, "w") as fh:
        for key, value in mapping.items():
            fh.write(f"{key} = {value}\n")


def write_report(out_dir, report: VerificationReport) -> None:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    kv = {
        "test": report.name,
        "passed": report.passed,
        "sample_size": report.sample_size,
        "seed": report.seed,
        **{f"stat.{k}": v for k, v in report.statistics.items()},
    }
    for i, note in enumerate(report.notes):
        kv[f"note.{i}"] = note
    write_keyvalues(out_dir / f"report_{report.name}.txt", kv)
    for tname, table in report.tables.items():
        write_matrix(out_dir / f"table_{report.name}_{tname}.txt", table)


def write_manifest(out_dir, config_text: str, seed, workers: int) -> None:
    import hashlib

    from . import __version__

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = {
        "config_sha256": hashlib.sha256(config_text.encode()).hexdigest(),
        "seed": seed,
        "workers": workers,
        "package_version": __version__,
        "numpy_version": np.__version__,
    }
    with open(out_dir / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
