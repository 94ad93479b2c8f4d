# tests/test_cli.py
import json
from io import StringIO

import pandas as pd
import pytest

from main import EXIT_DATA, EXIT_DIVERGED, EXIT_IO, EXIT_MAX_EPOCHS, EXIT_OK, EXIT_USAGE, main

TINY_L2 = ["--instance", "m=20", "--instance", "N=60", "--instance", "block_size=6",
           "--instance", "nnz_per_row=6", "--instance", "groups=5"]
TINY_L1 = ["--instance", "m=8", "--instance", "N=24", "--instance", "block_size=3",
           "--instance", "k=3", "--instance", "groups=4", "--instance", "two_group_first=4"]


@pytest.fixture(autouse=True)
def output_dir(tmp_path, monkeypatch):
    monkeypatch.setenv("FLEXADMM_OUTPUT_DIR", str(tmp_path / "results"))
    monkeypatch.setenv("FLEXADMM_THREADS", "1")
    return tmp_path / "results"


@pytest.fixture
def l2_dir(tmp_path):
    target = tmp_path / "l2"
    assert main(["gen", "l2", "--seed", "3", "--out-dir", str(target)] + TINY_L2) == EXIT_OK
    return target


@pytest.fixture
def l1_dir(tmp_path):
    target = tmp_path / "l1"
    assert main(["gen", "l1", "--seed", "4", "--out-dir", str(target)] + TINY_L1) == EXIT_OK
    return target


def _usage_exit(argv):
    with pytest.raises(SystemExit) as info:
        main(argv)
    return info.value.code


def test_gen_default_location(output_dir, capsys):
    assert main(["gen", "l1"] + TINY_L1) == EXIT_OK
    printed = capsys.readouterr().out.strip()
    assert printed == str(output_dir / "l1_seed0")
    for name in ("meta.json", "A.mtx", "b.vec", "x_star.vec"):
        assert (output_dir / "l1_seed0" / name).is_file()


def test_gen_is_deterministic(tmp_path):
    for name in ("a", "b"):
        assert main(["gen", "l2", "--seed", "8", "--out-dir", str(tmp_path / name)] + TINY_L2) == EXIT_OK
    assert (tmp_path / "a" / "A.mtx").read_bytes() == (tmp_path / "b" / "A.mtx").read_bytes()
    assert (tmp_path / "a" / "b.vec").read_bytes() == (tmp_path / "b" / "b.vec").read_bytes()


def test_bad_thread_setting_is_a_data_error(tmp_path, monkeypatch):
    monkeypatch.setenv("FLEXADMM_THREADS", "many")
    assert main(["gen", "l2", "--out-dir", str(tmp_path / "x")] + TINY_L2) == EXIT_DATA


def test_gen_rejects_bad_instance_values(tmp_path):
    assert main(["gen", "l2", "--out-dir", str(tmp_path / "x"), "--instance", "N=61"]) == EXIT_DATA
    assert _usage_exit(["gen", "l2", "--instance", "N"]) == EXIT_USAGE


def test_solve_converged(l2_dir, capsys):
    capsys.readouterr()
    code = main(["solve", str(l2_dir), "--alg", "fadmm", "--tol", "1e6"])
    assert code == EXIT_OK
    report = json.loads(capsys.readouterr().out)
    assert report["status"] == "converged"
    assert report["algorithm"] == "fadmm"
    assert report["tau_rule"] == "fadmm-theory"


def test_solve_max_epochs_writes_trace(l2_dir, tmp_path, capsys):
    trace = tmp_path / "trace.csv"
    code = main(["solve", str(l2_dir), "--alg", "hadmm", "--groups", "5", "--max-epochs", "4",
                 "--tol", "1e-300", "--trace", str(trace)])
    assert code == EXIT_MAX_EPOCHS
    frame = pd.read_csv(trace)
    assert list(frame["epoch"]) == [1, 2, 3, 4]
    assert json.loads(capsys.readouterr().out)["epochs"] == 4


def test_solve_g_metric_columns(l2_dir, tmp_path):
    trace = tmp_path / "trace.csv"
    code = main(["solve", str(l2_dir), "--alg", "fadmm", "--g-metric", "--max-epochs", "5",
                 "--tol", "1e-300", "--trace", str(trace)])
    assert code == EXIT_MAX_EPOCHS
    frame = pd.read_csv(trace)
    assert len(frame) == 5
    assert frame["g_dist_to_ref"].notna().all()
    assert frame["g_step"].notna().all()
    assert frame["g_dist_to_ref"].abs().lt(float("inf")).all()


def test_solve_without_g_metric_leaves_columns_empty(l2_dir, tmp_path):
    trace = tmp_path / "trace.csv"
    main(["solve", str(l2_dir), "--alg", "fadmm", "--max-epochs", "2", "--tol", "1e-300", "--trace", str(trace)])
    frame = pd.read_csv(trace)
    assert frame["g_dist_to_ref"].isna().all()
    assert frame["g_step"].isna().all()


def test_solve_diverged(l2_dir, capsys):
    code = main(["solve", str(l2_dir), "--alg", "jadmm", "--rho", "5", "--tau-value", "1e-3"])
    assert code == EXIT_DIVERGED
    assert json.loads(capsys.readouterr().out)["diverged"] is True


def test_solve_l1_relative_error_stop(l1_dir, capsys):
    code = main(["solve", str(l1_dir), "--alg", "hadmm2", "--max-epochs", "3"])
    assert code in (EXIT_OK, EXIT_MAX_EPOCHS)
    report = json.loads(capsys.readouterr().out)
    assert report["tau_rule"] == "hadmm2-theory"
    assert report["final_relative_error"] is not None


def test_solve_l1_flexible_needs_mu(l1_dir):
    assert main(["solve", str(l1_dir), "--alg", "fadmm", "--max-epochs", "2"]) == EXIT_DATA
    assert main(["solve", str(l1_dir), "--alg", "fadmm", "--mu", "1", "--max-epochs", "2"]) == EXIT_MAX_EPOCHS


@pytest.mark.parametrize("argv", [
    ["solve", "somewhere", "--alg", "hadmm"],
    ["solve", "somewhere", "--alg", "admm"],
    ["solve", "somewhere", "--alg", "fadmm", "--rho", "0"],
    ["solve", "somewhere", "--alg", "fadmm", "--tau-value", "1", "--tau-multiplier", "0.2"],
    ["sweep", "cfg.toml", "--runs", "0"],
    ["gen", "l3"],
    [],
])
def test_usage_errors(argv):
    assert _usage_exit(argv) == EXIT_USAGE


def test_missing_problem_directory(tmp_path):
    assert main(["solve", str(tmp_path / "missing"), "--alg", "fadmm"]) == EXIT_IO


def test_sweep_writes_csv(tmp_path, output_dir, capsys):
    cfg = tmp_path / "tiny.toml"
    cfg.write_text(
        'family = "l2"\n'
        'algorithms = ["jadmm", "fadmm"]\n'
        'tau = [1.0, 0.5]\n'
        'runs_per_cell = 2\n'
        'max_epochs = 20\n'
        'output = "tiny.csv"\n'
        '[instance]\nm = 12\nN = 40\nblock_size = 4\nnnz_per_row = 3\ngroups = 5\n',
        encoding="utf-8")
    assert main(["sweep", str(cfg), "--runs", "1"]) == EXIT_OK
    table = pd.read_csv(output_dir / "tiny.csv")
    assert list(table["algorithm"]) == ["jadmm", "jadmm", "fadmm", "fadmm"]
    assert (table["runs"] == 1).all()
    assert "jadmm" in capsys.readouterr().out


def test_sweep_config_errors(tmp_path):
    empty = tmp_path / "empty.toml"
    empty.write_text('family = "l2"\nalgorithms = []\n', encoding="utf-8")
    assert _usage_exit(["sweep", str(empty)]) == EXIT_USAGE

    unknown = tmp_path / "unknown.toml"
    unknown.write_text('family = "l2"\nalgorithms = ["fadmm"]\nrepeats = 2\n', encoding="utf-8")
    assert main(["sweep", str(unknown)]) == EXIT_DATA

    broken = tmp_path / "broken.toml"
    broken.write_text("family = \n", encoding="utf-8")
    assert main(["sweep", str(broken)]) == EXIT_DATA

    assert main(["sweep", str(tmp_path / "absent.toml")]) == EXIT_IO


def test_tau_report_l2(l2_dir, capsys):
    capsys.readouterr()
    assert main(["tau-report", str(l2_dir), "--groups", "5"]) == EXIT_OK
    frame = pd.read_csv(StringIO(capsys.readouterr().out))
    assert list(frame.columns) == ["block_index", "rule", "tau", "status"]
    assert sorted(set(frame["rule"])) == ["fadmm-theory", "hadmm-theory", "jadmm-theory"]
    assert len(frame) == 3 * 10


def test_tau_report_l1_lists_two_group_rule(l1_dir, tmp_path):
    out = tmp_path / "tau.csv"
    assert main(["tau-report", str(l1_dir), "--out", str(out)]) == EXIT_OK
    frame = pd.read_csv(out)
    assert set(frame["rule"]) == {"jadmm-theory", "hadmm2-theory"}
    assert (frame["tau"] > 0).all()
