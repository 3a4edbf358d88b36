"""Alternating solver: parallel column sweeps until the objective settles.

Each outer iteration draws one random coordinate order, precomputes the
fixed factor's row sums, then runs a full sweep over the columns of V
(updating F) followed by a full sweep over the columns of V^T (updating W).
Columns are independent convex subproblems, so they fan out to a thread
pool; workers share the read-only inputs and write disjoint columns.
"""

from __future__ import annotations

import dataclasses
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import _kernels
from .memory import MemoryLedger
from .sparse import DenseFactor, SparseMatrix
from .subproblem import SolveStats, SubproblemWorkspace, Tolerances

__all__ = [
    "RegConfig",
    "NmfConfig",
    "FactorPair",
    "IterationRecord",
    "ConvergenceLog",
    "NmfResult",
    "init_factors",
    "sweep",
    "factorize",
    "full_objective",
]


@dataclasses.dataclass(frozen=True)
class RegConfig:
    """Regularization weights: alpha* are L2, beta* are L1; 1 is W, 2 is F."""

    alpha1: float = 0.0
    alpha2: float = 0.0
    beta1: float = 0.0
    beta2: float = 0.0

    def __post_init__(self):
        if min(self.alpha1, self.alpha2, self.beta1, self.beta2) < 0.0:
            raise ValueError("regularization weights must be >= 0")


@dataclasses.dataclass(frozen=True)
class NmfConfig:
    rank: int = 10
    reg: RegConfig = RegConfig()
    max_outer_iters: int = 100
    rel_obj_tol: float = 1e-6
    seed: int = 0
    n_workers: int = 1
    tol: Tolerances = Tolerances()
    # budget checked after each outer iteration, on solve time only
    time_budget_seconds: float | None = None
    # skip per-iteration objective logging (used by fixed-iteration timing
    # runs; disables the rel_obj_tol stop)
    log_objectives: bool = True

    def __post_init__(self):
        if self.rank < 1:
            raise ValueError("rank must be >= 1")
        if self.max_outer_iters < 0:
            raise ValueError("max_outer_iters must be >= 0")
        if self.rel_obj_tol < 0.0:
            raise ValueError("rel_obj_tol must be >= 0")
        if self.n_workers < 1:
            raise ValueError("n_workers must be >= 1")


@dataclasses.dataclass
class FactorPair:
    """The two factors: W is (r, n) over rows of V, F is (r, m) over columns."""

    w: DenseFactor
    f: DenseFactor

    def copy(self) -> "FactorPair":
        return FactorPair(self.w.copy(), self.f.copy())


@dataclasses.dataclass(frozen=True)
class IterationRecord:
    iteration: int
    elapsed_seconds: float
    kl_objective: float
    total_objective: float
    sparsity_w: float
    sparsity_f: float


class ConvergenceLog:
    """Per-outer-iteration records with strictly increasing time and index."""

    FIELDS = (
        "iteration",
        "elapsed_seconds",
        "kl_objective",
        "total_objective",
        "sparsity_w",
        "sparsity_f",
    )

    def __init__(self, records=()):
        self.records: list[IterationRecord] = list(records)

    def append(self, record: IterationRecord) -> None:
        if self.records:
            last = self.records[-1]
            if record.iteration != last.iteration + 1:
                raise ValueError("iteration numbers must increase by 1")
            if record.elapsed_seconds <= last.elapsed_seconds:
                raise ValueError("elapsed_seconds must be strictly increasing")
        elif record.iteration != 1:
            raise ValueError("iteration numbering starts at 1")
        self.records.append(record)

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(rec, name) for rec in self.records])


@dataclasses.dataclass
class NmfResult:
    factors: FactorPair
    log: ConvergenceLog
    iterations_run: int
    converged: bool
    solve_seconds: float
    stats: SolveStats
    peak_accounted_bytes: int


def init_factors(n: int, m: int, r: int, seed, mean_v: float = 1.0) -> FactorPair:
    """Random positive factors scaled so E[(W^T F)_ij] equals mean_v.

    Entries are i.i.d. uniform on (0, s] with s = 2*sqrt(mean_v / r), drawn
    from a seeded PCG64 generator so runs are reproducible across platforms.
    """
    if min(n, m, r) < 1:
        raise ValueError("n, m, r must all be >= 1")
    rng = np.random.default_rng(seed)
    scale = 2.0 * np.sqrt(max(mean_v, np.finfo(float).tiny) / r)
    w = scale * (1.0 - rng.random((r, n)))
    f = scale * (1.0 - rng.random((r, m)))
    return FactorPair(DenseFactor(w), DenseFactor(f))


def _chunk_bounds(n_cols: int, n_chunks: int):
    edges = np.linspace(0, n_cols, n_chunks + 1).astype(np.int64)
    return [(int(a), int(b)) for a, b in zip(edges[:-1], edges[1:]) if b > a]


def sweep(
    v_oriented: SparseMatrix,
    fixed: DenseFactor,
    moving: DenseFactor,
    sums_fixed: np.ndarray,
    ids: np.ndarray,
    alpha: float,
    beta: float,
    tol: Tolerances = Tolerances(),
    n_workers: int = 1,
    workspaces: list[SubproblemWorkspace] | None = None,
) -> SolveStats:
    """Solve every column subproblem of one factor side, in place.

    ``fixed`` rows act as the operator columns (A = fixed^T); all columns of
    ``moving`` share the same coordinate order ``ids``.  Thread count does
    not change the result: columns are independent and each is written by
    exactly one worker.
    """
    n = fixed.n_items
    r = fixed.n_latent
    if moving.n_latent != r:
        raise ValueError("fixed and moving factors disagree on rank")
    if v_oriented.n_rows != n or v_oriented.n_cols != moving.n_items:
        raise ValueError(
            f"data is {v_oriented.shape}, expected ({n}, {moving.n_items})"
        )
    ids = np.ascontiguousarray(ids, dtype=np.int64)
    sums_fixed = np.ascontiguousarray(sums_fixed, dtype=np.float64)
    if workspaces is None:
        workspaces = [SubproblemWorkspace.allocate(n, r) for _ in range(n_workers)]
    stat_arrays = [np.zeros(_kernels.STATS_LEN, dtype=np.int64) for _ in workspaces]

    def run(chunk_and_ws):
        (j_lo, j_hi), ws, st = chunk_and_ws
        _kernels.sweep_range(
            v_oriented.col_ptr, v_oriented.row_idx, v_oriented.values,
            fixed.values, sums_fixed, moving.values, j_lo, j_hi, ids,
            float(alpha), float(beta), tol.eps_grad, tol.eps_x, tol.eps_div,
            tol.inner_iter_cap, ws.ax, ws.x, st,
        )

    chunks = _chunk_bounds(moving.n_items, len(workspaces))
    tasks = [(c, workspaces[i], stat_arrays[i]) for i, c in enumerate(chunks)]
    if len(tasks) <= 1:
        for task in tasks:
            run(task)
    else:
        with ThreadPoolExecutor(max_workers=len(tasks)) as pool:
            list(pool.map(run, tasks))
    total = np.sum(stat_arrays, axis=0) if stat_arrays else np.zeros(_kernels.STATS_LEN, dtype=np.int64)
    return SolveStats.from_array(total)


def full_objective(V: SparseMatrix, w: DenseFactor, f: DenseFactor, reg: RegConfig, eps_div: float = 1e-16):
    """(kl, total) objective without forming the dense reconstruction.

    The reconstruction mass sums to <sumW, sumF>, so the cost is
    O(nnz(V)*r + (n+m)*r).  ``total`` adds the four regularization terms.
    """
    if w.n_items != V.n_rows or f.n_items != V.n_cols or w.n_latent != f.n_latent:
        raise ValueError("factor dimensions do not match the data")
    data = _kernels.kl_data_term(V.col_ptr, V.row_idx, V.values, w.values, f.values, float(eps_div))
    kl = float(data) + float(w.row_sums() @ f.row_sums())
    total = kl
    total += 0.5 * reg.alpha1 * float(np.sum(w.values * w.values))
    total += 0.5 * reg.alpha2 * float(np.sum(f.values * f.values))
    total += reg.beta1 * float(np.sum(w.values))
    total += reg.beta2 * float(np.sum(f.values))
    return kl, total


def factorize(
    V: SparseMatrix,
    cfg: NmfConfig,
    factors0: FactorPair | None = None,
    ledger: MemoryLedger | None = None,
) -> NmfResult:
    """Run alternating sweeps of column subproblems until convergence.

    Stops when the relative objective decrease drops below cfg.rel_obj_tol,
    after cfg.max_outer_iters iterations, or when the optional time budget
    is exhausted.  Auxiliary memory stays proportional to
    nnz(V) + (n + m) * r + n_workers * max(n, m).
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
        if factors.w.values.shape != (r, n) or factors.f.values.shape != (r, m):
            raise ValueError("factors0 shapes do not match the data and rank")
    w, f = factors.w, factors.f
    ledger.track("W", w.values)
    ledger.track("F", f.values)
    workspaces_f = [SubproblemWorkspace.allocate(n, r) for _ in range(cfg.n_workers)]
    for i, ws in enumerate(workspaces_f):
        ledger.track(f"worker_ax_f{i}", ws.ax, ws.x)
    workspaces_w = [SubproblemWorkspace.allocate(m, r) for _ in range(cfg.n_workers)]
    for i, ws in enumerate(workspaces_w):
        ledger.track(f"worker_ax_w{i}", ws.ax, ws.x)

    rng = np.random.default_rng(cfg.seed)
    log = ConvergenceLog()
    stats = SolveStats()
    solve_seconds = 0.0
    converged = False
    iterations = 0
    prev_total = None
    for it in range(1, cfg.max_outer_iters + 1):
        if cfg.time_budget_seconds is not None and solve_seconds >= cfg.time_budget_seconds:
            break
        t0 = time.perf_counter()
        ids = rng.permutation(r).astype(np.int64)
        sum_w = w.row_sums()
        st = sweep(V, w, f, sum_w, ids, cfg.reg.alpha2, cfg.reg.beta2,
                   cfg.tol, cfg.n_workers, workspaces_f)
        stats.cap_hits += st.cap_hits
        stats.degenerate += st.degenerate
        stats.inner_iters += st.inner_iters
        sum_f = f.row_sums()
        st = sweep(vt, f, w, sum_f, ids, cfg.reg.alpha1, cfg.reg.beta1,
                   cfg.tol, cfg.n_workers, workspaces_w)
        stats.cap_hits += st.cap_hits
        stats.degenerate += st.degenerate
        stats.inner_iters += st.inner_iters
        solve_seconds += time.perf_counter() - t0
        iterations = it

        if cfg.log_objectives:
            kl, total = full_objective(V, w, f, cfg.reg, cfg.tol.eps_div)
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
    return NmfResult(
        factors=factors,
        log=log,
        iterations_run=iterations,
        converged=converged,
        solve_seconds=solve_seconds,
        stats=stats,
        peak_accounted_bytes=ledger.peak_bytes,
    )
