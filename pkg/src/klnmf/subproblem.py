"""One regularized KL column subproblem: min_{x >= 0} D(v || Ax) + reg.

The solver is randomized coordinate descent with projected Newton steps.
``A`` is always handed over transposed as ``at`` of shape (r, n): row
``at[k]`` is the k-th column of the operator, contiguous in memory.
"""

from __future__ import annotations

import dataclasses

import numpy as np

from . import _kernels

__all__ = [
    "Tolerances",
    "SubproblemWorkspace",
    "SolveStats",
    "grad_and_hess",
    "newton_step",
    "solve_column",
    "subproblem_objective",
    "kkt_violations",
]


@dataclasses.dataclass(frozen=True)
class Tolerances:
    """Stopping and guard tolerances of the coordinate solver.

    eps_grad bounds the gradient in the inner-loop entry test, eps_x is the
    relative step cutoff, eps_div guards denominators and the log argument.
    """

    eps_grad: float = 1e-10
    eps_x: float = 0.1
    eps_div: float = 1e-16
    inner_iter_cap: int = 128

    def __post_init__(self):
        if self.eps_grad <= 0.0 or self.eps_x <= 0.0 or self.eps_div < 0.0:
            raise ValueError("tolerances must be positive (eps_div may be 0)")
        if self.eps_x >= 1.0:
            raise ValueError("eps_x must be < 1")
        if self.inner_iter_cap < 1:
            raise ValueError("inner_iter_cap must be >= 1")


@dataclasses.dataclass
class SubproblemWorkspace:
    """Per-worker scratch: the maintained product buffer and an x staging row."""

    ax: np.ndarray
    x: np.ndarray

    @classmethod
    def allocate(cls, n: int, r: int) -> "SubproblemWorkspace":
        return cls(np.zeros(n), np.zeros(r))

    def nbytes(self) -> int:
        return self.ax.nbytes + self.x.nbytes


@dataclasses.dataclass
class SolveStats:
    """Counters accumulated across solve_column calls."""

    cap_hits: int = 0
    degenerate: int = 0
    inner_iters: int = 0
    passes: int = 0

    @classmethod
    def from_array(cls, arr) -> "SolveStats":
        return cls(
            cap_hits=int(arr[_kernels.STAT_CAP_HITS]),
            degenerate=int(arr[_kernels.STAT_DEGENERATE]),
            inner_iters=int(arr[_kernels.STAT_INNER_ITERS]),
            passes=int(arr[_kernels.STAT_PASSES]),
        )


def grad_and_hess(k, v_indices, v_values, at, ax, sum_a, x_k, alpha, beta, eps_div=1e-16):
    """Gradient and Hessian diagonal of the reduced objective at coordinate k.

    Costs O(nnz(v)) given the precomputed column sums ``sum_a``.

    Parameters
    ----------
    k : int
        Coordinate index.
    v_indices, v_values : arrays
        Sparse column of the data (row indices and values).
    at : (r, n) array
        Transposed operator; ``at[k]`` is the k-th column of A.
    ax : (n,) array
        Maintained product A @ x.
    sum_a : (r,) array
        Column sums of A.
    x_k : float
        Current value of the coordinate.
    alpha, beta : float
        L2 and L1 regularization weights.
    """
    v_indices = np.ascontiguousarray(v_indices, dtype=np.int64)
    v_values = np.ascontiguousarray(v_values, dtype=np.float64)
    return _kernels._grad_hess(
        int(k), v_indices, v_values, at, ax, sum_a, float(x_k), float(alpha), float(beta), float(eps_div)
    )


def newton_step(x_k, gradient, hessian_diag):
    """Projected Newton step max(0, x - grad/hess); returns (new_x, delta).

    A nonpositive Hessian diagonal reports no movement: the coordinate is
    treated as converged by the caller.
    """
    if hessian_diag <= 0.0:
        return float(x_k), 0.0
    new_x = max(0.0, x_k - gradient / hessian_diag)
    return new_x, new_x - x_k


def solve_column(
    v_indices, v_values, at, sum_a, x0, alpha, beta, ids,
    tol: Tolerances = Tolerances(), workspace: SubproblemWorkspace | None = None,
    max_passes: int = 200,
):
    """Minimize D(v || Ax) + (alpha/2)||x||_2^2 + beta||x||_1 over x >= 0.

    Coordinates are visited in the order ``ids``; each runs an inner
    projected-Newton loop that maintains ax = A @ x incrementally and stops
    on the relative-step cutoff.  Passes over the coordinates repeat until
    none of them moves, so the returned point carries a stationarity
    certificate; pass ``max_passes=1`` for the single sweep the alternating
    solver uses.  Returns (x, SolveStats).
    """
    at = np.ascontiguousarray(at, dtype=np.float64)
    r, n = at.shape
    v_indices = np.ascontiguousarray(v_indices, dtype=np.int64)
    v_values = np.ascontiguousarray(v_values, dtype=np.float64)
    x0 = np.asarray(x0, dtype=np.float64)
    if x0.shape != (r,):
        raise ValueError(f"x0 has shape {x0.shape}, expected ({r},)")
    if np.any(x0 < 0.0):
        raise ValueError("x0 must be nonnegative")
    if v_indices.shape[0] and (v_indices.min() < 0 or v_indices.max() >= n):
        raise ValueError("column index out of range for the operator")
    ids = np.ascontiguousarray(ids, dtype=np.int64)
    if sorted(ids.tolist()) != list(range(r)):
        raise ValueError("ids must be a permutation of 0..r-1")
    if workspace is None:
        workspace = SubproblemWorkspace.allocate(n, r)
    x = workspace.x
    x[:] = x0
    stats = np.zeros(_kernels.STATS_LEN, dtype=np.int64)
    if max_passes < 1:
        raise ValueError("max_passes must be >= 1")
    _kernels.solve_column(
        v_indices, v_values, at, np.ascontiguousarray(sum_a, dtype=np.float64),
        x, workspace.ax, ids,
        float(alpha), float(beta), tol.eps_grad, tol.eps_x, tol.eps_div,
        tol.inner_iter_cap, max_passes, stats,
    )
    return x.copy(), SolveStats.from_array(stats)


def subproblem_objective(v_indices, v_values, at, x, alpha, beta, eps_div=1e-16):
    """Objective value D(v || Ax) + (alpha/2)||x||_2^2 + beta||x||_1.

    Uses the convention 0*log 0 = 0: rows where v is zero contribute only
    their reconstruction [Ax]_i.
    """
    at = np.ascontiguousarray(at, dtype=np.float64)
    x = np.ascontiguousarray(x, dtype=np.float64)
    v_indices = np.ascontiguousarray(v_indices, dtype=np.int64)
    v_values = np.ascontiguousarray(v_values, dtype=np.float64)
    ax = np.zeros(at.shape[1])
    data = _kernels.subproblem_data_term(v_indices, v_values, at, x, ax, float(eps_div))
    return data + 0.5 * alpha * float(x @ x) + beta * float(np.abs(x).sum())


def kkt_violations(v_indices, v_values, at, sum_a, x, alpha, beta, tol: Tolerances = Tolerances()):
    """Per-coordinate stationarity violations at x (all zero when optimal).

    Bound coordinates (x_k <= eps_grad) must have gradient >= -eps_grad;
    interior ones must have |gradient| <= max(eps_grad, eps_x * x_k * hess_k),
    the residual the relative-step cutoff can leave behind.
    """
    at = np.ascontiguousarray(at, dtype=np.float64)
    x = np.ascontiguousarray(x, dtype=np.float64)
    out = np.zeros(x.shape[0])
    ax = np.zeros(at.shape[1])
    _kernels.kkt_violation(
        np.ascontiguousarray(v_indices, dtype=np.int64),
        np.ascontiguousarray(v_values, dtype=np.float64),
        at, np.ascontiguousarray(sum_a, dtype=np.float64), x, ax,
        float(alpha), float(beta), tol.eps_grad, tol.eps_x, tol.eps_div, out,
    )
    return out
