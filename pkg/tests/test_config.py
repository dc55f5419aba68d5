"""
Tests for the configuration system.
"""

import logging
from pathlib import Path

import pytest

from periodic_fde.config.settings import RunConfig, SeedConfig, SeedStrategy
from periodic_fde.core.mesh import NodeFamily
from periodic_fde.core.newton import Damping
from periodic_fde.utils.helpers import ColoredFormatter

ENV_VARS = ("PFDE_CONFIG", "PFDE_OUTPUT_DIR", "PFDE_GRID_POINTS", "LOG_LEVEL")


@pytest.fixture(autouse=True)
def clean_env(monkeypatch):
    for name in ENV_VARS:
        monkeypatch.delenv(name, raising=False)


@pytest.fixture
def config_file(tmp_path):
    path = tmp_path / "run.yaml"
    path.write_text(
        "y0: 0.5\n"
        "L_list: '10,20'\n"
        "node_family: chebyshev2\n"
        "seed:\n"
        "  strategy: hopf\n"
        "newton:\n"
        "  tol_residual: 1e-9\n"
        "  damping: none\n",
        encoding="utf-8",
    )
    return path


class TestDefaults:
    def test_default_values(self):
        config = RunConfig()
        assert config.problem == "sd_proto"
        assert config.y0 == 0.75
        assert config.L_list == [10, 20, 40, 80]
        assert config.m_list == [3, 5]
        assert config.grid_points == 10001
        assert config.node_family is NodeFamily.GAUSS_LEGENDRE
        assert config.seed.strategy is SeedStrategy.CONTINUATION
        config.validate()

    def test_output_path(self):
        assert RunConfig(output_dir="out/run1").output_path == Path("out/run1")

    def test_string_lists_are_parsed(self):
        assert RunConfig(L_list="10, 20,40").L_list == [10, 20, 40]
        with pytest.raises(ValueError, match="comma separated"):
            RunConfig(m_list="3,five")


class TestEnvironment:
    def test_from_env(self, monkeypatch):
        monkeypatch.setenv("PFDE_OUTPUT_DIR", "/tmp/pfde")
        monkeypatch.setenv("PFDE_GRID_POINTS", "501")
        monkeypatch.setenv("LOG_LEVEL", "DEBUG")
        config = RunConfig.from_env()
        assert config.output_dir == "/tmp/pfde"
        assert config.grid_points == 501
        assert config.log_level == "DEBUG"

    def test_invalid_grid_points_keeps_default(self, monkeypatch, caplog):
        monkeypatch.setenv("PFDE_GRID_POINTS", "many")
        with caplog.at_level(logging.WARNING):
            config = RunConfig.from_env()
        assert config.grid_points == 10001
        assert "Invalid PFDE_GRID_POINTS" in caplog.text


class TestConfigFile:
    def test_nested_blocks_merge_key_by_key(self, config_file):
        config = RunConfig.from_file(config_file)
        assert config.y0 == 0.5
        assert config.L_list == [10, 20]
        assert config.node_family is NodeFamily.CHEBYSHEV2
        assert config.seed.strategy is SeedStrategy.HOPF
        assert config.seed.steps == 14
        assert config.newton.tol_residual == 1e-9
        assert config.newton.damping is Damping.NONE
        assert config.newton.max_iters == 50

    def test_shipped_example_matches_defaults(self):
        path = Path(__file__).resolve().parents[1] / "config" / "run.yaml"
        assert RunConfig.from_file(path) == RunConfig()

    def test_unknown_key(self, tmp_path):
        path = tmp_path / "bad.yaml"
        path.write_text("y_0: 0.5\n", encoding="utf-8")
        with pytest.raises(ValueError, match="Unknown configuration keys: y_0"):
            RunConfig.from_file(path)

    def test_unknown_nested_key(self, tmp_path):
        path = tmp_path / "bad.yaml"
        path.write_text("seed:\n  stratgy: hopf\n", encoding="utf-8")
        with pytest.raises(ValueError, match="Unknown seed settings"):
            RunConfig.from_file(path)

    def test_file_must_hold_a_mapping(self, tmp_path):
        path = tmp_path / "list.yaml"
        path.write_text("- 10\n- 20\n", encoding="utf-8")
        with pytest.raises(ValueError, match="mapping"):
            RunConfig.from_file(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(OSError):
            RunConfig.from_file(tmp_path / "absent.yaml")

    def test_empty_file_keeps_defaults(self, tmp_path):
        path = tmp_path / "empty.yaml"
        path.write_text("", encoding="utf-8")
        assert RunConfig.from_file(path) == RunConfig.from_env()


class TestLoad:
    def test_precedence(self, config_file, monkeypatch):
        monkeypatch.setenv("PFDE_GRID_POINTS", "301")
        monkeypatch.setenv("PFDE_CONFIG", str(config_file))
        config = RunConfig.load(y0=0.6, L_list=None)
        assert config.grid_points == 301
        assert config.y0 == 0.6
        assert config.L_list == [10, 20]

    def test_explicit_path_wins_over_environment(self, config_file, tmp_path, monkeypatch):
        other = tmp_path / "other.yaml"
        other.write_text("y0: 0.3\n", encoding="utf-8")
        monkeypatch.setenv("PFDE_CONFIG", str(other))
        assert RunConfig.load(config_file).y0 == 0.5

    def test_to_dict_round_trip(self, config_file):
        config = RunConfig.from_file(config_file)
        assert RunConfig().merged(config.to_dict()) == config


class TestValidation:
    @pytest.mark.parametrize(
        "settings",
        [
            {"grid_points": 1},
            {"L_list": []},
            {"m_list": [3, 0]},
            {"reference_factor": 0},
            {"reference_degree_boost": -1},
            {"seed": SeedConfig(steps=0)},
            {"seed": SeedConfig(strategy="file")},
        ],
    )
    def test_invalid(self, settings):
        with pytest.raises(ValueError):
            RunConfig(**settings).validate()

    def test_seed_file_ignored_outside_file_strategy(self, caplog):
        config = RunConfig(seed=SeedConfig(strategy="hopf", file="seed.txt"), y0=0.1)
        with caplog.at_level(logging.WARNING):
            config.validate()
        assert "ignored" in caplog.text

    def test_hopf_far_from_bifurcation_warns(self, caplog):
        with caplog.at_level(logging.WARNING):
            RunConfig(seed={"strategy": "hopf"}, y0=0.75).validate()
        assert "far from the bifurcation" in caplog.text


def test_setup_logging_installs_colored_handler():
    RunConfig(log_level="DEBUG").setup_logging()
    root = logging.getLogger()
    assert root.level == logging.DEBUG
    assert len(root.handlers) == 1
    assert isinstance(root.handlers[0].formatter, ColoredFormatter)
