"""Numba kernels for the per-column solves, objectives and MU updates.

All kernels release the GIL so the sweep worker pool gets real parallelism,
and none of them allocate: every buffer is owned by the caller so the
solver's allocation accounting stays exact.

Layout convention: a factor is a C-order (r, n_items) array, so row ``at[k]``
is the k-th column of the linear operator A = factor^T and is contiguous.
The maintained product ``ax`` and ``at[k]`` are streamed together in the
inner update.
"""

import numpy as np
from numba import njit

# stats slots shared between kernels and the Python drivers
STAT_CAP_HITS = 0
STAT_DEGENERATE = 1
STAT_INNER_ITERS = 2
STAT_PASSES = 3
STATS_LEN = 4


@njit(cache=True, nogil=True, error_model="numpy", inline="always")
def _grad_hess(k, v_idx, v_val, at, ax, sum_a, x_k, alpha, beta, eps_div):
    """First/second derivative of the reduced objective in coordinate k."""
    g = sum_a[k] + alpha * x_k + beta
    h = alpha
    row = at[k]
    for p in range(v_idx.shape[0]):
        a = row[v_idx[p]]
        if a != 0.0:
            q = a / (ax[v_idx[p]] + eps_div)
            g -= v_val[p] * q
            h += v_val[p] * q * q
    return g, h


@njit(cache=True, nogil=True, error_model="numpy")
def compute_ax(at, x, ax):
    """Fill ax = A @ x, skipping exactly-zero coordinates of x."""
    n = at.shape[1]
    for i in range(n):
        ax[i] = 0.0
    for k in range(x.shape[0]):
        xk = x[k]
        if xk != 0.0:
            row = at[k]
            for i in range(n):
                ax[i] += xk * row[i]


@njit(cache=True, nogil=True, error_model="numpy")
def solve_column(
    v_idx, v_val, at, sum_a, x, ax, ids,
    alpha, beta, eps_grad, eps_x, eps_div, inner_cap, max_passes, stats,
):
    """Randomized projected-Newton coordinate descent for one column.

    Updates ``x`` in place, visiting coordinates in the order ``ids`` and
    keeping ``ax`` consistent with ``at`` and ``x`` throughout.  Passes over
    the coordinates repeat until one of them moves nothing (so the exit
    state carries a stationarity certificate) or ``max_passes`` is reached;
    the alternating solver runs single passes and lets its outer iterations
    do the polishing.  ``stats`` accumulates cap hits, degeneracy events,
    inner iterations and passes.
    """
    n = at.shape[1]
    compute_ax(at, x, ax)
    for _ in range(max_passes):
        stats[STAT_PASSES] += 1
        moved = False
        for t in range(ids.shape[0]):
            k = ids[t]
            x_enter = x[k]
            g, h = _grad_hess(k, v_idx, v_val, at, ax, sum_a, x[k], alpha, beta, eps_div)
            inner = 0
            while (g < -eps_grad) or (abs(g) > eps_grad and x[k] > eps_grad):
                if h <= 0.0:
                    # zero curvature: the slice is linear, so a positive
                    # slope sends the coordinate to the bound; a negative
                    # one cannot happen except through numerical degeneracy
                    if g > 0.0:
                        delta = -x[k]
                        if delta != 0.0:
                            row = at[k]
                            for i in range(n):
                                ax[i] += delta * row[i]
                                if ax[i] < 0.0:
                                    ax[i] = 0.0
                            x[k] = 0.0
                    else:
                        stats[STAT_DEGENERATE] += 1
                    break
                target = x[k] - g / h
                if target < 0.0:
                    target = 0.0
                delta = target - x[k]
                row = at[k]
                # negative rounding residue near total deactivation would
                # put sign noise under the eps_div guard; clamping keeps the
                # smoothed gradient well defined
                for i in range(n):
                    ax[i] += delta * row[i]
                    if ax[i] < 0.0:
                        ax[i] = 0.0
                xs = x[k]
                x[k] = xs + delta
                inner += 1
                stats[STAT_INNER_ITERS] += 1
                if abs(delta) < eps_x * xs:
                    break
                if inner >= inner_cap:
                    stats[STAT_CAP_HITS] += 1
                    break
                g, h = _grad_hess(k, v_idx, v_val, at, ax, sum_a, x[k], alpha, beta, eps_div)
            if x[k] != x_enter:
                moved = True
        if not moved:
            break


@njit(cache=True, nogil=True, error_model="numpy")
def sweep_range(
    col_ptr, row_idx, values, at, sum_a, moving, j_lo, j_hi, ids,
    alpha, beta, eps_grad, eps_x, eps_div, inner_cap, ax_buf, x_buf, stats,
):
    """Solve columns j_lo..j_hi-1 of the moving factor against fixed ``at``.

    One coordinate pass per column per sweep; successive outer iterations
    refine the columns further.
    """
    r = at.shape[0]
    for j in range(j_lo, j_hi):
        for k in range(r):
            x_buf[k] = moving[k, j]
        lo = col_ptr[j]
        hi = col_ptr[j + 1]
        solve_column(
            row_idx[lo:hi], values[lo:hi], at, sum_a, x_buf, ax_buf, ids,
            alpha, beta, eps_grad, eps_x, eps_div, inner_cap, 1, stats,
        )
        for k in range(r):
            moving[k, j] = x_buf[k]


@njit(cache=True, nogil=True, error_model="numpy")
def kl_data_term(col_ptr, row_idx, values, w, f, eps_div):
    """Sum of v*log(v/((W^T F)+eps)) - v over the stored entries."""
    r = w.shape[0]
    total = 0.0
    for j in range(col_ptr.shape[0] - 1):
        for p in range(col_ptr[j], col_ptr[j + 1]):
            i = row_idx[p]
            d = 0.0
            for k in range(r):
                d += w[k, i] * f[k, j]
            v = values[p]
            total += v * np.log(v / (d + eps_div)) - v
    return total


@njit(cache=True, nogil=True, error_model="numpy")
def subproblem_data_term(v_idx, v_val, at, x, ax, eps_div):
    """KL data term of one column: full sum of ax plus support terms."""
    compute_ax(at, x, ax)
    total = 0.0
    for i in range(ax.shape[0]):
        total += ax[i]
    for p in range(v_idx.shape[0]):
        v = v_val[p]
        total += v * np.log(v / (ax[v_idx[p]] + eps_div)) - v
    return total


@njit(cache=True, nogil=True, error_model="numpy")
def kkt_violation(v_idx, v_val, at, sum_a, x, ax, alpha, beta, eps_grad, eps_x, eps_div, out):
    """Per-coordinate stationarity violation at x (0 where satisfied).

    At the bound (x_k <= eps_grad) the gradient must be >= -eps_grad; at
    interior coordinates |grad| may not exceed max(eps_grad, eps_x * x_k * hess).
    """
    compute_ax(at, x, ax)
    for k in range(x.shape[0]):
        g, h = _grad_hess(k, v_idx, v_val, at, ax, sum_a, x[k], alpha, beta, eps_div)
        if x[k] <= eps_grad:
            out[k] = max(0.0, -g - eps_grad)
        else:
            scale = max(eps_grad, eps_x * x[k] * h)
            out[k] = max(0.0, abs(g) - scale)


@njit(cache=True, nogil=True, error_model="numpy")
def mu_update_range(col_ptr, row_idx, values, fixed, moving, sum_fixed, eps_mu, num_buf, j_lo, j_hi):
    """Multiplicative update of moving columns j_lo..j_hi-1 given fixed.

    moving[:, j] *= (num + eps) / (sum_fixed + eps) where num is the
    fixed-weighted ratio of data to reconstruction, evaluated only on the
    stored entries of column j.
    """
    r = fixed.shape[0]
    for j in range(j_lo, j_hi):
        for k in range(r):
            num_buf[k] = 0.0
        for p in range(col_ptr[j], col_ptr[j + 1]):
            i = row_idx[p]
            d = 0.0
            for k in range(r):
                d += fixed[k, i] * moving[k, j]
            ratio = values[p] / (d + eps_mu)
            for k in range(r):
                num_buf[k] += fixed[k, i] * ratio
        for k in range(r):
            moving[k, j] = moving[k, j] * (num_buf[k] + eps_mu) / (sum_fixed[k] + eps_mu)


def warm_up():
    """Trigger JIT compilation of every kernel on toy inputs.

    Keeps compilation cost out of timed runs and out of memory-accounting
    windows.
    """
    at = np.ones((2, 3))
    x = np.array([1.0, 1.0])
    ax = np.zeros(3)
    ids = np.arange(2, dtype=np.int64)
    stats = np.zeros(STATS_LEN, dtype=np.int64)
    v_idx = np.array([0, 2], dtype=np.int64)
    v_val = np.array([1.0, 2.0])
    sum_a = at.sum(axis=1)
    out = np.zeros(2)
    col_ptr = np.array([0, 2], dtype=np.int64)
    solve_column(v_idx, v_val, at, sum_a, x, ax, ids, 0.0, 0.0, 1e-10, 0.1, 1e-16, 8, 4, stats)
    sweep_range(col_ptr, v_idx, v_val, at, sum_a, np.ones((2, 1)), 0, 1, ids,
                0.0, 0.0, 1e-10, 0.1, 1e-16, 8, ax, x, stats)
    kl_data_term(col_ptr, v_idx, v_val, at, np.ones((2, 1)), 1e-16)
    subproblem_data_term(v_idx, v_val, at, x, ax, 1e-16)
    kkt_violation(v_idx, v_val, at, sum_a, x, ax, 0.0, 0.0, 1e-10, 0.1, 1e-16, out)
    mu_update_range(col_ptr, v_idx, v_val, at, np.ones((2, 1)), sum_a, 1e-16, x.copy(), 0, 1)
