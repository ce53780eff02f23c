"""Tests for config module."""

import os
import tempfile
from pathlib import Path

import pytest

from pystein.config import (
    DEFAULT_TOLERANCES,
    EXPERIMENTS,
    N_BUDGET,
    ExperimentConfig,
    Tolerances,
    resolve,
)
from pystein.errors import ConfigError

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


def test_tolerance_defaults():
    assert resolve(None) is DEFAULT_TOLERANCES
    tol = DEFAULT_TOLERANCES.with_overrides(dim_cap=8)
    assert tol.dim_cap == 8
    assert tol.psd == DEFAULT_TOLERANCES.psd
    assert resolve(tol) is tol


def test_tolerances_are_frozen():
    with pytest.raises(Exception):
        Tolerances().psd = 1.0


def test_every_experiment_has_a_budget():
    assert set(EXPERIMENTS) == set(N_BUDGET)


def test_from_dict_defaults():
    config = ExperimentConfig.from_dict({"experiment": "stein-iid"})
    assert config.n_range == [1, 2, 3]
    assert config.eps == [0.1]
    assert config.alpha == [1.5, 2.0]
    assert config.seed == 0
    config.validate()


def test_from_dict_range_mapping():
    data = {"experiment": "examples", "n_range": {"min": 2, "max": 4}}
    config = ExperimentConfig.from_dict(data)
    assert config.n_range == [2, 3, 4]


def test_from_dict_requires_experiment():
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"n_range": [1]})


class TestValidate:
    def test_unknown_experiment(self):
        with pytest.raises(ConfigError):
            ExperimentConfig(experiment="stein-classical").validate()

    def test_budget(self):
        config = ExperimentConfig(experiment="stein-composite", n_range=[1, 5])
        with pytest.raises(ConfigError, match="budget"):
            config.validate()

    def test_bad_ranges(self):
        with pytest.raises(ConfigError):
            ExperimentConfig(experiment="stein-iid", n_range=[]).validate()
        with pytest.raises(ConfigError):
            ExperimentConfig(experiment="stein-iid", n_range=[0, 1]).validate()
        with pytest.raises(ConfigError):
            ExperimentConfig(experiment="stein-iid", eps=[1.0]).validate()
        with pytest.raises(ConfigError):
            ExperimentConfig(experiment="stein-iid", alpha=[1.0]).validate()

    def test_missing_fixture(self):
        config = ExperimentConfig(
            experiment="stein-iid", fixtures={"rho": "missing.json"}, base_dir=FIXTURES
        )
        with pytest.raises(ConfigError, match="not found"):
            config.validate()
        with pytest.raises(ConfigError):
            config.fixture_path("sigma")


class TestFiles:
    def test_load_fixture_config(self):
        config = ExperimentConfig.from_yaml(str(FIXTURES / "stein_iid.json"))
        assert config.experiment == "stein-iid"
        assert config.seed == 7
        assert config.fixture_path("rho") == FIXTURES / "states" / "rho_qubit.json"
        assert config.source.endswith("stein_iid.json")
        config.validate()

    def test_all_fixture_configs_validate(self):
        for path in sorted(FIXTURES.glob("*.json")):
            config = ExperimentConfig.from_yaml(str(path))
            config.validate()

    def test_yaml_roundtrip(self):
        config = ExperimentConfig(
            experiment="stein-composite",
            n_range=[1, 2],
            eps=[0.1, 0.25],
            extra={"gap_threshold": 0.3},
        )
        with tempfile.TemporaryDirectory() as tmpdir:
            path = os.path.join(tmpdir, "config.yaml")
            config.to_yaml(path)
            loaded = ExperimentConfig.from_yaml(path)
        assert loaded.to_dict() == config.to_dict()
        assert loaded.base_dir == Path(tmpdir).resolve()

    def test_missing_file(self):
        with pytest.raises(ConfigError):
            ExperimentConfig.from_yaml("no_such_config.yaml")

    def test_non_mapping_file(self):
        with tempfile.TemporaryDirectory() as tmpdir:
            path = os.path.join(tmpdir, "list.yaml")
            with open(path, "w") as f:
                f.write("- 1\n- 2\n")
            with pytest.raises(ConfigError):
                ExperimentConfig.from_yaml(path)
