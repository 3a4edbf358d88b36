import json

import pytest

from klnmf import SparseMatrix, save_matrix_market
from klnmf.cli import main


def test_run_with_synthetic(tmp_path):
    out = tmp_path / "out"
    status = main([
        "run", "--synthetic", "40,80,3,0.9,count", "--rank", "3",
        "--max-iters", "5", "--seed", "1", "--out", str(out),
    ])
    assert status == 0
    assert (out / "summary.json").exists()


def test_run_with_input_file(tmp_path):
    mtx = tmp_path / "v.mtx"
    m = SparseMatrix.from_coo(4, 5, [0, 1, 2, 3], [0, 1, 2, 3], [1.0, 2.0, 3.0, 4.0])
    save_matrix_market(m, mtx)
    out = tmp_path / "out"
    status = main([
        "run", "--input", str(mtx), "--rank", "2", "--max-iters", "3",
        "--algorithm", "mu", "--out", str(out),
    ])
    assert status == 0
    summary = json.loads((out / "summary.json").read_text())
    assert summary["algorithm"] == "mu"
    assert summary["nnz"] == 4


def test_regularization_flags(tmp_path):
    out = tmp_path / "out"
    status = main([
        "run", "--synthetic", "30,60,3,0.9,count", "--rank", "4",
        "--beta1", "0.3", "--beta2", "0.3", "--max-iters", "10",
        "--out", str(out),
    ])
    assert status == 0
    summary = json.loads((out / "summary.json").read_text())
    assert summary["sparsity_w"] > 0.0


def test_race_command(tmp_path):
    out = tmp_path / "out"
    status = main([
        "race", "--synthetic", "30,60,3,0.9,count", "--rank", "3",
        "--budget", "0.2", "--out", str(out),
    ])
    assert status == 0
    assert (out / "race.csv").exists()


def test_scaling_command(tmp_path):
    out = tmp_path / "out"
    status = main([
        "scaling", "--synthetic", "20,40,2,0.9,count",
        "--r-values", "2,4", "--thread-values", "1", "--iters", "2",
        "--out", str(out),
    ])
    assert status == 0
    assert (out / "scaling.csv").exists()


def test_usage_error_exit_code():
    assert main(["run", "--rank", "3"]) == 1            # no data source
    assert main(["run", "--synthetic", "bad", "--out", "/tmp/x"]) == 1
    assert main([]) == 1


def test_runtime_error_exit_code(tmp_path):
    missing = tmp_path / "missing.mtx"
    status = main(["run", "--input", str(missing), "--out", str(tmp_path / "o")])
    assert status == 2


def test_conflicting_sources_rejected(tmp_path):
    status = main([
        "run", "--input", "x.mtx", "--synthetic", "10,10,2,0.5,count",
        "--out", str(tmp_path),
    ])
    assert status == 1
