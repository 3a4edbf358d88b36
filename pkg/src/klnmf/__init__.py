"""Sparse randomized coordinate descent NMF under KL divergence.

Library surface: sparse storage and MatrixMarket I/O, the per-column
projected-Newton subproblem solver, the alternating solver, a
multiplicative-update baseline, synthetic data, and benchmark drivers.
"""

from .bench import race, run_experiment, scaling_report
from .memory import MemoryLedger
from .multiplicative import MuResult, MuState, mu_factorize, mu_iterate
from .solver import (
    ConvergenceLog,
    FactorPair,
    IterationRecord,
    NmfConfig,
    NmfResult,
    RegConfig,
    factorize,
    full_objective,
    init_factors,
    sweep,
)
from .sparse import (
    ColumnView,
    DenseFactor,
    DuplicateEntryError,
    MatrixMarketError,
    SparseMatrix,
    load_matrix_market,
    row_sums,
    save_matrix_market,
    save_tsv,
)
from .subproblem import (
    SolveStats,
    SubproblemWorkspace,
    Tolerances,
    grad_and_hess,
    kkt_violations,
    newton_step,
    solve_column,
    subproblem_objective,
)
from .synth import SyntheticSpec, planted_product, synthesize

__version__ = "0.1.0"

__all__ = [
    "ColumnView",
    "ConvergenceLog",
    "DenseFactor",
    "DuplicateEntryError",
    "FactorPair",
    "IterationRecord",
    "MatrixMarketError",
    "MemoryLedger",
    "MuResult",
    "MuState",
    "NmfConfig",
    "NmfResult",
    "RegConfig",
    "SolveStats",
    "SparseMatrix",
    "SubproblemWorkspace",
    "SyntheticSpec",
    "Tolerances",
    "factorize",
    "full_objective",
    "grad_and_hess",
    "init_factors",
    "kkt_violations",
    "load_matrix_market",
    "mu_factorize",
    "mu_iterate",
    "newton_step",
    "planted_product",
    "race",
    "row_sums",
    "run_experiment",
    "save_matrix_market",
    "save_tsv",
    "scaling_report",
    "solve_column",
    "subproblem_objective",
    "sweep",
    "synthesize",
]
