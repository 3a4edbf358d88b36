import numpy as np
import pytest

from klnmf import (
    DenseFactor,
    MemoryLedger,
    NmfConfig,
    RegConfig,
    SparseMatrix,
    SyntheticSpec,
    Tolerances,
    factorize,
    full_objective,
    init_factors,
    planted_product,
    row_sums,
    sweep,
    synthesize,
)

from oracles import brute_force_kl


def small_synthetic(seed=0, n=20, m=30, sparsity=0.7):
    return synthesize(SyntheticSpec(n=n, m=m, r_true=3, sparsity=sparsity, seed=seed))


class TestInitFactors:
    def test_deterministic(self):
        a = init_factors(5, 7, 3, seed=42, mean_v=2.0)
        b = init_factors(5, 7, 3, seed=42, mean_v=2.0)
        assert np.array_equal(a.w.values, b.w.values)
        assert np.array_equal(a.f.values, b.f.values)

    def test_range(self):
        pair = init_factors(30, 40, 6, seed=1, mean_v=3.0)
        scale = 2.0 * np.sqrt(3.0 / 6)
        for factor in (pair.w, pair.f):
            assert np.all(factor.values > 0.0)
            assert np.all(factor.values <= scale)

    def test_reconstruction_mean_matches_data_mean(self):
        rng = np.random.default_rng(0)
        V = small_synthetic(seed=3, n=20, m=30, sparsity=0.5)
        mean_v = V.values.sum() / (20 * 30)
        pair = init_factors(20, 30, 5, seed=9, mean_v=mean_v)
        recon_mean = (pair.w.values.T @ pair.f.values).mean()
        assert mean_v / 3.0 < recon_mean < mean_v * 3.0


class TestFullObjective:
    def test_exact_product_is_zero(self):
        V, w, f = planted_product(8, 11, 2, seed=4)
        kl, total = full_objective(V, DenseFactor(w), DenseFactor(f), RegConfig())
        assert abs(kl) <= 1e-9 * V.nnz
        assert total == kl

    @pytest.mark.parametrize("seed", range(4))
    def test_matches_brute_force(self, seed):
        rng = np.random.default_rng(seed)
        n, m, r = 5, 6, 3
        V = small_synthetic(seed=seed, n=n, m=m, sparsity=0.4)
        w = rng.uniform(0.1, 1.5, size=(r, n))
        f = rng.uniform(0.1, 1.5, size=(r, m))
        kl, _ = full_objective(V, DenseFactor(w), DenseFactor(f), RegConfig(), eps_div=0.0)
        ref = brute_force_kl(V.to_dense(), w, f)
        assert kl == pytest.approx(ref, rel=1e-10)

    @pytest.mark.parametrize("seed", range(6))
    def test_row_sum_identity(self, seed):
        # <sumW, sumF> equals the full reconstruction mass
        rng = np.random.default_rng(seed)
        w = rng.uniform(0.0, 2.0, size=(4, 7))
        f = rng.uniform(0.0, 2.0, size=(4, 9))
        lhs = float(w.sum(axis=1) @ f.sum(axis=1))
        rhs = float((w.T @ f).sum())
        assert lhs == pytest.approx(rhs, rel=1e-12)

    def test_regularization_terms(self):
        V = SparseMatrix.from_coo(2, 2, [0], [0], [1.0])
        w = DenseFactor(np.full((2, 2), 0.5))
        f = DenseFactor(np.full((2, 2), 0.5))
        reg = RegConfig(alpha1=2.0, alpha2=4.0, beta1=1.0, beta2=3.0)
        kl, total = full_objective(V, w, f, reg)
        expected_extra = 0.5 * 2.0 * 1.0 + 0.5 * 4.0 * 1.0 + 1.0 * 2.0 + 3.0 * 2.0
        assert total - kl == pytest.approx(expected_extra, rel=1e-12)


class TestSweep:
    def test_scalar_sweep(self):
        # r=1, V=[[2]], fixed W=[[1]]: the F-sweep lands on [[2]]
        V = SparseMatrix.from_coo(1, 1, [0], [0], [2.0])
        w = DenseFactor(np.array([[1.0]]))
        f = DenseFactor(np.array([[1.0]]))
        sweep(V, w, f, row_sums(w), np.array([0]), 0.0, 0.0)
        # single-pass accuracy is eps_x-limited; outer iterations refine
        assert f.values[0, 0] == pytest.approx(2.0, rel=0.05)
        sweep(V, w, f, row_sums(w), np.array([0]), 0.0, 0.0,
              tol=Tolerances(eps_x=1e-8))
        assert f.values[0, 0] == pytest.approx(2.0, rel=1e-6)

    def test_worker_count_invariance(self):
        V = small_synthetic(seed=5, n=15, m=40)
        pair = init_factors(15, 40, 4, seed=2, mean_v=1.0)
        ids = np.random.default_rng(0).permutation(4)
        outputs = []
        for workers in (1, 2, 4):
            f = pair.f.copy()
            sweep(V, pair.w, f, row_sums(pair.w), ids, 0.1, 0.05, n_workers=workers)
            outputs.append(f.values.copy())
        assert np.array_equal(outputs[0], outputs[1])
        assert np.array_equal(outputs[0], outputs[2])

    def test_objective_does_not_increase(self):
        V = small_synthetic(seed=7, n=6, m=8, sparsity=0.5)
        pair = init_factors(6, 8, 3, seed=3, mean_v=float(V.values.mean()))
        reg = RegConfig(alpha2=0.1, beta2=0.05)
        _, before = full_objective(V, pair.w, pair.f, reg)
        sweep(V, pair.w, pair.f, row_sums(pair.w), np.arange(3), 0.1, 0.05)
        _, after = full_objective(V, pair.w, pair.f, reg)
        assert after <= before + 1e-8

    def test_dimension_mismatch(self):
        V = small_synthetic(seed=0, n=10, m=12)
        pair = init_factors(10, 12, 3, seed=0)
        with pytest.raises(ValueError):
            sweep(V.transpose(), pair.w, pair.f, row_sums(pair.w), np.arange(3), 0.0, 0.0)


class TestFactorize:
    def test_empty_matrix_refused(self):
        V = SparseMatrix(2, 2, np.zeros(3, dtype=np.int64), np.array([], dtype=np.int64), np.array([]))
        with pytest.raises(ValueError, match="empty"):
            factorize(V, NmfConfig(rank=2))

    def test_zero_iterations(self):
        V = small_synthetic()
        res = factorize(V, NmfConfig(rank=3, max_outer_iters=0))
        assert res.iterations_run == 0
        assert len(res.log) == 0
        assert not res.converged

    def test_monotone_objective(self):
        V = small_synthetic(seed=8)
        res = factorize(V, NmfConfig(rank=4, max_outer_iters=40, rel_obj_tol=0.0, seed=1))
        objs = res.log.column("total_objective")
        assert np.all(np.diff(objs) <= 1e-8)

    def test_planted_rank1_recovery(self):
        V, _, _ = planted_product(25, 35, 1, seed=6)
        res = factorize(V, NmfConfig(rank=1, max_outer_iters=30, rel_obj_tol=0.0, seed=2))
        final_kl = res.log.records[-1].kl_objective
        assert final_kl <= 1e-6 * V.nnz

    def test_nonnegativity(self):
        V = small_synthetic(seed=9)
        res = factorize(V, NmfConfig(rank=3, max_outer_iters=10, seed=3,
                                     reg=RegConfig(beta1=0.2, beta2=0.2)))
        assert np.all(res.factors.w.values >= 0.0)
        assert np.all(res.factors.f.values >= 0.0)

    def test_worker_invariance_bitwise(self):
        V = small_synthetic(seed=10, n=25, m=50, sparsity=0.8)
        results = [
            factorize(V, NmfConfig(rank=5, max_outer_iters=8, seed=11, n_workers=k,
                                   rel_obj_tol=0.0))
            for k in (1, 2, 4)
        ]
        for other in results[1:]:
            assert np.array_equal(results[0].factors.w.values, other.factors.w.values)
            assert np.array_equal(results[0].factors.f.values, other.factors.f.values)
            assert np.array_equal(results[0].log.column("total_objective"),
                                  other.log.column("total_objective"))

    def test_convergence_flag(self):
        V, _, _ = planted_product(10, 14, 1, seed=12)
        res = factorize(V, NmfConfig(rank=1, max_outer_iters=100, rel_obj_tol=1e-9, seed=4))
        assert res.converged
        assert res.iterations_run < 100

    def test_budget_zero_runs_nothing(self):
        V = small_synthetic(seed=13)
        res = factorize(V, NmfConfig(rank=2, max_outer_iters=50, time_budget_seconds=0.0))
        assert res.iterations_run == 0

    def test_given_initial_factors_not_mutated(self):
        V = small_synthetic(seed=14)
        pair = init_factors(V.n_rows, V.n_cols, 3, seed=5, mean_v=1.0)
        w_before = pair.w.values.copy()
        factorize(V, NmfConfig(rank=3, max_outer_iters=5), factors0=pair)
        assert np.array_equal(pair.w.values, w_before)

    def test_ledger_accounting(self):
        V = small_synthetic(seed=15, n=40, m=60, sparsity=0.9)
        ledger = MemoryLedger()
        cfg = NmfConfig(rank=4, max_outer_iters=5, n_workers=2)
        factorize(V, cfg, ledger=ledger)
        assert ledger.peak_bytes > 0
        # nothing anywhere near a dense n*m allocation
        assert ledger.max_single_bytes < 8 * V.n_rows * V.n_cols

    def test_stationarity_trend(self):
        # aggregate KKT residual trends down over the tail of the run
        from klnmf import kkt_violations, row_sums as rs
        V = small_synthetic(seed=16, n=30, m=45, sparsity=0.8)
        residuals = []
        for iters in (10, 50):
            res = factorize(V, NmfConfig(rank=4, max_outer_iters=iters, rel_obj_tol=0.0, seed=6))
            w, f = res.factors.w, res.factors.f
            total = 0.0
            sums = rs(w)
            for j in range(V.n_cols):
                view = V.column(j)
                total += float(np.sum(kkt_violations(
                    view.indices, view.values, w.values, sums, f.values[:, j], 0.0, 0.0)))
            residuals.append(total)
        assert residuals[1] <= residuals[0] + 1e-6


class TestConfigValidation:
    @pytest.mark.parametrize("kwargs", [
        {"rank": 0},
        {"max_outer_iters": -1},
        {"rel_obj_tol": -0.1},
        {"n_workers": 0},
    ])
    def test_invalid(self, kwargs):
        with pytest.raises(ValueError):
            NmfConfig(**kwargs)

    def test_negative_reg_rejected(self):
        with pytest.raises(ValueError):
            RegConfig(alpha1=-1.0)
