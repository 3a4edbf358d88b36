"""Experiment drivers: single runs, convergence races and scaling grids.

Every driver writes plain CSV (fixed header, ``.`` decimal separator) plus a
summary.json of final figures.  Reported times cover the solve only; file
I/O and objective logging are excluded.
"""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import json
import os

import numpy as np

from .memory import MemoryLedger
from .multiplicative import mu_factorize
from .solver import ConvergenceLog, IterationRecord, NmfConfig, factorize, full_objective, init_factors
from .sparse import SparseMatrix, load_matrix_market, save_matrix_market, save_tsv
from .synth import SyntheticSpec, synthesize

__all__ = [
    "ALGORITHMS",
    "write_log_csv",
    "read_log_csv",
    "load_dataset",
    "run_experiment",
    "race",
    "scaling_report",
]

ALGORITHMS = ("srcd", "mu")


def write_log_csv(log: ConvergenceLog, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(ConvergenceLog.FIELDS)
        for rec in log:
            writer.writerow([
                rec.iteration,
                repr(float(rec.elapsed_seconds)),
                repr(float(rec.kl_objective)),
                repr(float(rec.total_objective)),
                repr(float(rec.sparsity_w)),
                repr(float(rec.sparsity_f)),
            ])


def read_log_csv(path) -> ConvergenceLog:
    log = ConvergenceLog()
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != ConvergenceLog.FIELDS:
            raise ValueError(f"unexpected log header: {header}")
        for row in reader:
            log.append(IterationRecord(
                iteration=int(row[0]),
                elapsed_seconds=float(row[1]),
                kl_objective=float(row[2]),
                total_objective=float(row[3]),
                sparsity_w=float(row[4]),
                sparsity_f=float(row[5]),
            ))
    return log


def load_dataset(dataset) -> SparseMatrix:
    """Resolve a path, SyntheticSpec or ready SparseMatrix into a matrix."""
    if isinstance(dataset, SparseMatrix):
        return dataset
    if isinstance(dataset, SyntheticSpec):
        return synthesize(dataset)
    return load_matrix_market(dataset)


def _hash_factors(factors) -> str:
    digest = hashlib.sha256()
    digest.update(factors.w.values.tobytes())
    digest.update(factors.f.values.tobytes())
    return digest.hexdigest()


def _write_summary(path, payload) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def run_experiment(dataset, algorithm: str, cfg: NmfConfig, out_dir) -> int:
    """Factorize one dataset with one algorithm and dump logs and factors.

    Writes log.csv, W.mtx/W.tsv, F.mtx/F.tsv and summary.json under
    ``out_dir``.  Returns 0 on success.
    """
    if algorithm not in ALGORITHMS:
        raise ValueError(f"algorithm must be one of {ALGORITHMS}")
    V = load_dataset(dataset)
    os.makedirs(out_dir, exist_ok=True)
    ledger = MemoryLedger()
    if algorithm == "srcd":
        result = factorize(V, cfg, ledger=ledger)
    else:
        result = mu_factorize(V, cfg, ledger=ledger)
    write_log_csv(result.log, os.path.join(out_dir, "log.csv"))
    save_matrix_market(result.factors.w, os.path.join(out_dir, "W.mtx"))
    save_tsv(result.factors.w, os.path.join(out_dir, "W.tsv"))
    save_matrix_market(result.factors.f, os.path.join(out_dir, "F.mtx"))
    save_tsv(result.factors.f, os.path.join(out_dir, "F.tsv"))
    kl, total = full_objective(V, result.factors.w, result.factors.f, cfg.reg, cfg.tol.eps_div)
    _write_summary(os.path.join(out_dir, "summary.json"), {
        "algorithm": algorithm,
        "n_rows": V.n_rows,
        "n_cols": V.n_cols,
        "nnz": V.nnz,
        "rank": cfg.rank,
        "iterations": result.iterations_run,
        "converged": result.converged,
        "final_kl_objective": kl,
        "final_total_objective": total,
        "sparsity_w": result.factors.w.sparsity(),
        "sparsity_f": result.factors.f.sparsity(),
        "solve_seconds": result.solve_seconds,
        "peak_accounted_bytes": result.peak_accounted_bytes,
    })
    return 0


def race(dataset, cfg: NmfConfig, budget_seconds: float, out_dir) -> int:
    """Race both algorithms from bitwise-identical factors under one budget.

    Emits race.csv with (algorithm, elapsed_seconds, kl_objective) rows,
    including the shared starting objective at elapsed 0, plus summary.json.
    """
    V = load_dataset(dataset)
    os.makedirs(out_dir, exist_ok=True)
    mean_v = float(V.values.sum()) / (V.n_rows * V.n_cols)
    factors0 = init_factors(V.n_rows, V.n_cols, cfg.rank, cfg.seed, mean_v)
    starts = {name: factors0.copy() for name in ALGORITHMS}
    hashes = {name: _hash_factors(f0) for name, f0 in starts.items()}
    if len(set(hashes.values())) != 1:
        raise AssertionError(f"race initial factors diverged: {hashes}")
    kl0, _ = full_objective(V, factors0.w, factors0.f, cfg.reg, cfg.tol.eps_div)
    run_cfg = dataclasses.replace(
        cfg, time_budget_seconds=budget_seconds, rel_obj_tol=0.0, log_objectives=True
    )
    results = {}
    results["srcd"] = factorize(V, run_cfg, factors0=starts["srcd"])
    results["mu"] = mu_factorize(V, run_cfg, factors0=starts["mu"])
    with open(os.path.join(out_dir, "race.csv"), "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["algorithm", "elapsed_seconds", "kl_objective"])
        for name in ALGORITHMS:
            writer.writerow([name, repr(0.0), repr(float(kl0))])
            for rec in results[name].log:
                writer.writerow([name, repr(float(rec.elapsed_seconds)), repr(float(rec.kl_objective))])
    final_kl = {
        name: (res.log.records[-1].kl_objective if len(res.log) else kl0)
        for name, res in results.items()
    }
    _write_summary(os.path.join(out_dir, "summary.json"), {
        "initial_factor_sha256": hashes["srcd"],
        "initial_kl_objective": kl0,
        "budget_seconds": budget_seconds,
        "final_kl": final_kl,
        "iterations": {name: res.iterations_run for name, res in results.items()},
    })
    return 0


def scaling_report(dataset, r_values, n_threads_values, iters: int, out_dir, seed: int = 0) -> int:
    """Time a fixed iteration count over a (rank, threads) grid.

    No convergence cutoff and no objective logging, so wall_seconds isolates
    the per-iteration cost.  Writes scaling.csv of (r, n_threads,
    wall_seconds).
    """
    r_values = list(r_values)
    n_threads_values = list(n_threads_values)
    if not r_values or not n_threads_values:
        raise ValueError("rank and thread grids must be nonempty")
    if isinstance(dataset, SyntheticSpec):
        seed = dataset.seed
    V = load_dataset(dataset)
    os.makedirs(out_dir, exist_ok=True)
    rows = []
    for r in r_values:
        for threads in n_threads_values:
            cfg = NmfConfig(
                rank=r,
                seed=seed,
                max_outer_iters=iters,
                rel_obj_tol=0.0,
                n_workers=threads,
                log_objectives=False,
            )
            result = factorize(V, cfg)
            rows.append((r, threads, result.solve_seconds))
    with open(os.path.join(out_dir, "scaling.csv"), "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["r", "n_threads", "wall_seconds"])
        for r, threads, secs in rows:
            writer.writerow([r, threads, repr(float(secs))])
    return 0
