"""Multiplicative-update reference solver for the comparison suite.

Classical rescaling updates: each factor is multiplied by the ratio of a
data-weighted numerator to the fixed factor's row sums.  The data ratio
V / (W^T F) is zero off the stored entries, so both numerators cost
O(nnz(V) * r) and no dense reconstruction is ever formed.  Updates keep
every entry strictly positive, which is why MU factor sparsity is always 0.
"""

from __future__ import annotations

import dataclasses
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import _kernels
from .memory import MemoryLedger
from .solver import (
    ConvergenceLog,
    FactorPair,
    IterationRecord,
    NmfConfig,
    RegConfig,
    full_objective,
    init_factors,
    _chunk_bounds,
)
from .sparse import SparseMatrix

__all__ = ["MuState", "mu_iterate", "mu_factorize", "MuResult"]


@dataclasses.dataclass
class MuState:
    """Current factors plus the division guard; factors stay strictly positive."""

    factors: FactorPair
    eps_mu: float = 1e-16

    def __post_init__(self):
        if self.eps_mu <= 0.0:
            raise ValueError("eps_mu must be strictly positive")
        if np.any(self.factors.w.values <= 0.0) or np.any(self.factors.f.values <= 0.0):
            raise ValueError("MU requires strictly positive starting factors")


def _mu_half_update(v_oriented: SparseMatrix, fixed, moving, eps_mu, n_workers, num_bufs):
    """One multiplicative rescale of `moving` against `fixed`, in place."""
    sum_fixed = fixed.row_sums()

    def run(args):
        (j_lo, j_hi), buf = args
        _kernels.mu_update_range(
            v_oriented.col_ptr, v_oriented.row_idx, v_oriented.values,
            fixed.values, moving.values, sum_fixed, eps_mu, buf, j_lo, j_hi,
        )

    chunks = _chunk_bounds(moving.n_items, len(num_bufs))
    tasks = [(c, num_bufs[i]) for i, c in enumerate(chunks)]
    if len(tasks) <= 1:
        for task in tasks:
            run(task)
    else:
        with ThreadPoolExecutor(max_workers=len(tasks)) as pool:
            list(pool.map(run, tasks))


def mu_iterate(V: SparseMatrix, state: MuState, vt: SparseMatrix | None = None,
               n_workers: int = 1, num_bufs=None) -> MuState:
    """One full multiplicative update (F first, then W), in place.

    The KL objective is nonincreasing across the call up to guard-term
    noise.  ``vt`` may be passed to reuse a precomputed transpose.
    """
    if vt is None:
        vt = V.transpose()
    w, f = state.factors.w, state.factors.f
    if num_bufs is None:
        num_bufs = [np.zeros(w.n_latent) for _ in range(n_workers)]
    _mu_half_update(V, w, f, state.eps_mu, n_workers, num_bufs)
    _mu_half_update(vt, f, w, state.eps_mu, n_workers, num_bufs)
    return state


@dataclasses.dataclass
class MuResult:
    factors: FactorPair
    log: ConvergenceLog
    iterations_run: int
    converged: bool
    solve_seconds: float
    peak_accounted_bytes: int


def mu_factorize(
    V: SparseMatrix,
    cfg: NmfConfig,
    factors0: FactorPair | None = None,
    ledger: MemoryLedger | None = None,
    eps_mu: float = 1e-16,
) -> MuResult:
    """Run MU with the same loop contract as the coordinate-descent solver.

    Shares init_factors so convergence races start from identical points;
    regularization weights are ignored (the baseline is unregularized).
    """
    if V.nnz == 0:
        raise ValueError("refusing to factorize an empty matrix (nnz == 0)")
    _kernels.warm_up()
    ledger = ledger if ledger is not None else MemoryLedger()
    n, m = V.shape
    r = cfg.rank
    ledger.track("V", V.col_ptr, V.row_idx, V.values)
    vt = V.transpose()
    ledger.track("Vt", vt.col_ptr, vt.row_idx, vt.values)
    if factors0 is None:
        mean_v = float(V.values.sum()) / (n * m)
        factors = init_factors(n, m, r, cfg.seed, mean_v)
    else:
        factors = factors0.copy()
    state = MuState(factors, eps_mu=eps_mu)
    w, f = factors.w, factors.f
    ledger.track("W", w.values)
    ledger.track("F", f.values)
    num_bufs = [np.zeros(r) for _ in range(cfg.n_workers)]
    for i, buf in enumerate(num_bufs):
        ledger.track(f"worker_num{i}", buf)

    log = ConvergenceLog()
    solve_seconds = 0.0
    converged = False
    iterations = 0
    prev_total = None
    no_reg = RegConfig()
    for it in range(1, cfg.max_outer_iters + 1):
        if cfg.time_budget_seconds is not None and solve_seconds >= cfg.time_budget_seconds:
            break
        t0 = time.perf_counter()
        mu_iterate(V, state, vt, cfg.n_workers, num_bufs)
        solve_seconds += time.perf_counter() - t0
        iterations = it
        if cfg.log_objectives:
            kl, total = full_objective(V, w, f, no_reg, cfg.tol.eps_div)
            log.append(IterationRecord(
                iteration=it,
                elapsed_seconds=solve_seconds,
                kl_objective=kl,
                total_objective=total,
                sparsity_w=w.sparsity(),
                sparsity_f=f.sparsity(),
            ))
            if prev_total is not None:
                if (prev_total - total) / max(1.0, prev_total) < cfg.rel_obj_tol:
                    converged = True
                    break
            prev_total = total
    return MuResult(
        factors=factors,
        log=log,
        iterations_run=iterations,
        converged=converged,
        solve_seconds=solve_seconds,
        peak_accounted_bytes=ledger.peak_bytes,
    )
