"""Synthetic sparse matrices that stand in for the text/digit corpora.

A planted factor pair fixes the latent structure; the sparsity pattern is an
exact-size uniform sample of cells, so the requested sparsity is met by
construction.  The count model draws Poisson-like integers, the tfidf model
positive reals.
"""

from __future__ import annotations

import dataclasses

import numpy as np

from .sparse import SparseMatrix

__all__ = ["SyntheticSpec", "synthesize", "planted_product"]

VALUE_MODELS = ("count", "tfidf")


@dataclasses.dataclass(frozen=True)
class SyntheticSpec:
    n: int
    m: int
    r_true: int = 5
    sparsity: float = 0.99
    value_model: str = "count"
    seed: int = 0
    factor_sparsity: float = 0.5

    def __post_init__(self):
        if min(self.n, self.m, self.r_true) < 1:
            raise ValueError("n, m, r_true must be >= 1")
        if not 0.0 <= self.sparsity < 1.0:
            raise ValueError(f"sparsity must lie in [0, 1), got {self.sparsity}")
        if self.value_model not in VALUE_MODELS:
            raise ValueError(f"value_model must be one of {VALUE_MODELS}")
        if not 0.0 <= self.factor_sparsity < 1.0:
            raise ValueError("factor_sparsity must lie in [0, 1)")


def _planted_factors(spec: SyntheticSpec, rng):
    w = rng.uniform(0.5, 1.5, size=(spec.r_true, spec.n))
    f = rng.uniform(0.5, 1.5, size=(spec.r_true, spec.m))
    w[rng.random((spec.r_true, spec.n)) < spec.factor_sparsity] = 0.0
    f[rng.random((spec.r_true, spec.m)) < spec.factor_sparsity] = 0.0
    return w, f


def synthesize(spec: SyntheticSpec) -> SparseMatrix:
    """Sample a sparse nonnegative matrix with exactly the requested nnz."""
    rng = np.random.default_rng(spec.seed)
    w, f = _planted_factors(spec, rng)
    total = spec.n * spec.m
    nnz = int(round((1.0 - spec.sparsity) * total))
    cells = rng.choice(total, size=nnz, replace=False)
    rows = cells // spec.m
    cols = cells % spec.m
    base = np.sum(w[:, rows] * f[:, cols], axis=0)
    if spec.value_model == "count":
        vals = 1.0 + rng.poisson(base).astype(np.float64)
    else:
        vals = base + rng.uniform(0.1, 1.0, size=nnz)
    return SparseMatrix.from_coo(spec.n, spec.m, rows, cols, vals)


def planted_product(n: int, m: int, r: int, seed) -> tuple[SparseMatrix, np.ndarray, np.ndarray]:
    """Exact V = W^T F with strictly positive planted factors (dense pattern).

    Used by exact-recovery experiments; returns (V, W, F).
    """
    rng = np.random.default_rng(seed)
    w = rng.uniform(0.5, 1.5, size=(r, n))
    f = rng.uniform(0.5, 1.5, size=(r, m))
    product = w.T @ f
    rows, cols = np.nonzero(product > 0.0)
    return SparseMatrix.from_coo(n, m, rows, cols, product[rows, cols]), w, f
