# tests/test_sweep.py
import numpy as np
import pandas as pd
import pytest

from core.config import Config
from core.exceptions import InvalidConfigError, NotStronglyConvexError
from experiments.sweep import (
    BUNDLED_CONFIGS, SWEEP_COLUMNS, SweepSpec, bundled_config, run_records, run_sweep, summarize,
)
from utils.formatter import DIVERGED_MARK, Formatter

TINY_L2 = dict(m=12, N=40, block_size=4, nnz_per_row=3, groups=5)
TINY_L1 = dict(m=8, N=24, block_size=3, k=3, groups=4, two_group_first=4)


@pytest.fixture
def config():
    return Config(threads=1)


@pytest.mark.parametrize("name,family,algorithms", [
    ("table1", "l2", ["jadmm", "hadmm", "fadmm"]),
    ("table2", "l2", ["jadmm", "hadmm", "fadmm"]),
    ("table3", "l1", ["jadmm", "hadmm2", "hadmm", "fadmm"]),
    ("table4", "l1", ["jadmm", "hadmm2", "hadmm", "fadmm"]),
])
def test_bundled_configs_parse(name, family, algorithms):
    spec = SweepSpec.from_file(bundled_config(name))
    assert spec.family == family
    assert spec.algorithms == algorithms
    assert spec.output == f"{name}.csv"


def test_bundled_cells():
    assert SweepSpec.from_file(bundled_config("table2")).cells() == [1.0, 0.6, 0.4, 0.22, 0.2, 0.1]
    assert SweepSpec.from_file(bundled_config("table4")).cells() == [0.2, 0.1, 0.05, 0.03, 0.02]
    table3 = SweepSpec.from_file(bundled_config("table3"))
    assert table3.is_theory
    assert table3.runs_for("jadmm") == 5
    assert table3.runs_for("fadmm") == 20


def test_unknown_bundled_config():
    with pytest.raises(FileNotFoundError):
        bundled_config("table9")
    assert BUNDLED_CONFIGS.is_dir()


@pytest.mark.parametrize("overrides", [
    dict(family="l3"),
    dict(algorithms=[]),
    dict(algorithms=["admm"]),
    dict(tau="tuned"),
    dict(tau=[]),
    dict(tau=[0.5, -1.0]),
    dict(runs_per_cell=0),
    dict(divergence_cutoff=1.0),
    dict(assumed_mu=0.0),
    dict(instance={"blocks": 3}),
])
def test_invalid_specs(overrides):
    with pytest.raises(InvalidConfigError):
        SweepSpec(**{"family": "l2", "algorithms": ["fadmm"], **overrides})


def test_unknown_keys_in_file(tmp_path):
    path = tmp_path / "bad.toml"
    path.write_text('family = "l2"\nalgorithms = ["fadmm"]\nrepeat = 3\n', encoding="utf-8")
    with pytest.raises(InvalidConfigError):
        SweepSpec.from_file(path)


def test_l1_theory_needs_assumed_mu(config):
    spec = SweepSpec("l1", ["fadmm"], runs_per_cell=1, instance=TINY_L1)
    with pytest.raises(NotStronglyConvexError):
        run_records(spec, config)


def test_small_tuned_sweep_layout(config):
    spec = SweepSpec("l2", ["jadmm", "hadmm", "fadmm"], tau=[1.0, 0.5], runs_per_cell=2,
                     runs_overrides={"jadmm": 1}, seed=5, max_epochs=30, instance=TINY_L2)
    records = run_records(spec, config)
    assert len(records) == 2 * 2 + 2 * 2 + 1 * 2
    assert set(records["status"]) <= {"converged", "diverged", "max-epochs"}
    assert (records["epochs"] <= 30).all()

    table = summarize(records, spec)
    assert list(table.columns) == SWEEP_COLUMNS
    assert list(table["algorithm"]) == ["jadmm", "jadmm", "hadmm", "hadmm", "fadmm", "fadmm"]
    assert list(table["tau_multiplier"]) == [1.0, 0.5] * 3
    assert list(table["runs"]) == [1, 1, 2, 2, 2, 2]


def test_sweep_is_reproducible(config):
    spec = SweepSpec("l1", ["jadmm", "hadmm2"], tau="theory", runs_per_cell=2, seed=9,
                     max_epochs=25, instance=TINY_L1)
    first = run_sweep(spec, config)
    second = run_sweep(spec, config)
    pd.testing.assert_frame_equal(first, second)
    assert first["tau_multiplier"].isna().all()
    assert list(first["tau_rule"]) == ["jadmm-theory", "hadmm2-theory"]


def _records(statuses, epochs, residuals):
    return pd.DataFrame({
        "run": range(len(statuses)),
        "seed": range(len(statuses)),
        "algorithm": "fadmm",
        "tau_rule": "uniform",
        "tau_multiplier": 0.5,
        "status": statuses,
        "epochs": epochs,
        "half_sq_residual": residuals,
    })


def test_summary_averages_converged_runs_only():
    spec = SweepSpec("l2", ["fadmm"], tau=[0.5])
    records = _records(["converged", "converged", "diverged", "max-epochs"],
                       [10, 20, 3, 100], [1e-11, 3e-11, np.inf, 1e-3])
    row = summarize(records, spec).iloc[0]
    assert row["mean_epochs"] == 15.0
    assert row["std_epochs"] == 5.0
    assert row["mean_half_sq_residual"] == pytest.approx(2e-11)
    assert row["diverged_fraction"] == 0.25
    assert bool(row["diverged"])


def test_summary_divergence_cutoff():
    spec = SweepSpec("l2", ["fadmm"], tau=[0.5], divergence_cutoff=0.3)
    records = _records(["converged", "converged", "diverged", "converged"], [1, 2, 3, 3], [0.0] * 4)
    row = summarize(records, spec).iloc[0]
    assert not bool(row["diverged"])
    assert row["mean_epochs"] == 2.0


def test_sweep_table_marks_diverged_cells():
    spec = SweepSpec("l1", ["jadmm", "fadmm"], tau=[0.2, 0.1])
    records = pd.concat([
        _records(["converged"], [40], [1e-12]).assign(algorithm="jadmm", tau_multiplier=0.2),
        _records(["diverged"], [12], [np.inf]).assign(algorithm="jadmm", tau_multiplier=0.1),
        _records(["converged"], [25], [2e-12]).assign(algorithm="fadmm", tau_multiplier=0.2),
        _records(["converged"], [18], [3e-12]).assign(algorithm="fadmm", tau_multiplier=0.1),
    ], ignore_index=True)
    text = Formatter().sweep_table(summarize(records, spec))
    lines = text.splitlines()
    assert "jadmm" in lines[0] and "fadmm" in lines[0]
    assert DIVERGED_MARK in text
    assert "40.0" in text and "25.0" in text and "18.0" in text
    assert "½‖r‖²" in text
    assert Formatter().sweep_table(summarize(records, spec), with_residuals=False).count("½‖r‖²") == 0


def test_csv_floats_round_trip(tmp_path):
    df = pd.DataFrame({"x": [0.1, 1.0 / 3.0, np.nan]})
    path = Formatter().write_csv(df, tmp_path / "out" / "t.csv")
    back = pd.read_csv(path)
    assert back["x"].iloc[0] == 0.1
    assert back["x"].iloc[1] == 1.0 / 3.0
    assert np.isnan(back["x"].iloc[2])
    assert "\r" not in path.read_text()
