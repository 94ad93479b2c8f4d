# tests/test_config.py
import json
import logging

import pytest

from core.config import Config, load_mapping
from core.exceptions import InvalidConfigError
from core.logging_setup import configure_logging


@pytest.fixture(autouse=True)
def clean_env(monkeypatch):
    for name in ("FLEXADMM_OUTPUT_DIR", "FLEXADMM_LOG_LEVEL", "FLEXADMM_THREADS"):
        monkeypatch.delenv(name, raising=False)


def test_defaults():
    config = Config()
    assert config.output_dir == "results"
    assert config.float_digits == 17
    assert config.divergence_threshold == 1e12
    assert config.divergence_grace_epochs == 10
    assert config.threads >= 1


def test_environment_overrides(monkeypatch):
    monkeypatch.setenv("FLEXADMM_OUTPUT_DIR", "/tmp/flex")
    monkeypatch.setenv("FLEXADMM_THREADS", "3")
    monkeypatch.setenv("FLEXADMM_LOG_LEVEL", "DEBUG")
    config = Config()
    assert (config.output_dir, config.threads, config.log_level) == ("/tmp/flex", 3, "DEBUG")


@pytest.mark.parametrize("kwargs", [dict(threads=0), dict(workers=0), dict(power_tol=0.0),
                                    dict(divergence_threshold=-1.0)])
def test_validation(kwargs):
    with pytest.raises(InvalidConfigError):
        Config(**kwargs)


def test_from_file_json_and_toml(tmp_path):
    as_json = tmp_path / "c.json"
    as_json.write_text(json.dumps({"workers": 2, "power_tol": 1e-12}), encoding="utf-8")
    as_toml = tmp_path / "c.toml"
    as_toml.write_text("workers = 2\npower_tol = 1e-12\n", encoding="utf-8")
    for path in (as_json, as_toml):
        config = Config.from_file(path)
        assert config.workers == 2
        assert config.power_tol == 1e-12
    assert Config.from_json(str(as_json)).to_dict()["workers"] == 2


def test_from_file_rejects_unknown_keys(tmp_path):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"ticker": "AAPL"}), encoding="utf-8")
    with pytest.raises(InvalidConfigError):
        Config.from_file(path)


def test_load_mapping_errors(tmp_path):
    bad = tmp_path / "bad.toml"
    bad.write_text("x = [", encoding="utf-8")
    with pytest.raises(InvalidConfigError):
        load_mapping(bad)
    listing = tmp_path / "list.json"
    listing.write_text("[1, 2]", encoding="utf-8")
    with pytest.raises(InvalidConfigError):
        load_mapping(listing)
    with pytest.raises(FileNotFoundError):
        load_mapping(tmp_path / "none.json")


def test_verbosity_lowers_level():
    configure_logging("WARNING", 1)
    assert logging.getLogger().level == logging.INFO
    configure_logging("WARNING", 5)
    assert logging.getLogger().level == logging.DEBUG
    configure_logging("nonsense")
    assert logging.getLogger().level == logging.WARNING


def test_non_integer_threads_is_a_config_error(monkeypatch):
    monkeypatch.setenv("FLEXADMM_THREADS", "many")
    with pytest.raises(InvalidConfigError):
        Config()
