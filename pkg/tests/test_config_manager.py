"""Tests for layered YAML configuration."""

import pytest
import yaml

from ccpnet import config_manager
from ccpnet.config_manager import CcpnetConfig, ConfigManager, ToleranceConfig, default_tolerances, get_config
from ccpnet.errors import ConfigError


def write_yaml(path, data):
    path.write_text(yaml.safe_dump(data), encoding="utf-8")
    return path


def test_project_defaults_load(isolated_config):
    config = isolated_config.config
    assert config.search.restarts == 8
    assert config.lattice_dim_cap == 4096
    assert config.tolerances == ToleranceConfig()
    assert get_config() is config
    assert default_tolerances() is config.tolerances


def test_user_file_overrides_project(tmp_path):
    user = write_yaml(tmp_path / "user.yaml", {"tolerances": {"tol_screen": 1e-6}, "lattice": {"demo_sites": 8}})
    config = ConfigManager(user_file=user).config
    assert config.tolerances.tol_screen == 1e-6
    assert config.tolerances.tol_comm == 1e-9
    assert config.demo_sites == 8


@pytest.mark.parametrize(
    "data, message",
    [
        ({"ollama": {"model": "x"}}, "Unknown configuration section"),
        ({"search": {"patience": 3}}, "Unknown search setting"),
        ({"lattice": {"size": 3}}, "Unknown setting"),
        ({"tolerances": {"tol_screen": -1}}, "must be positive"),
        ({"tolerances": {"tol_wobble": 1e-3}}, "Unknown tolerance"),
    ],
)
def test_rejects_bad_files(tmp_path, data, message):
    user = write_yaml(tmp_path / "user.yaml", data)
    with pytest.raises(ConfigError, match=message):
        ConfigManager(user_file=user)


def test_unreadable_yaml_is_skipped(tmp_path):
    user = tmp_path / "user.yaml"
    user.write_text("tolerances: [unclosed", encoding="utf-8")
    assert ConfigManager(user_file=user).config.tolerances == ToleranceConfig()


def test_save_and_reload(tmp_path):
    user = tmp_path / "nested" / "config.yaml"
    manager = ConfigManager(user_file=user)
    manager.config.demo_weight = 0.8
    manager.config.threads = 3
    manager.save_user_config()
    reloaded = ConfigManager(user_file=user).config
    assert reloaded.demo_weight == 0.8
    assert reloaded.threads == 3
    assert manager.get_config_location() == user


def test_tolerance_overrides():
    tol = ToleranceConfig().with_overrides({"TOL-SCREEN": "1e-7"})
    assert tol.tol_screen == 1e-7
    with pytest.raises(ConfigError):
        ToleranceConfig().with_overrides({"tol_screen": 0})
    config = CcpnetConfig().with_tolerance_overrides({"tol_geo": 1e-10})
    assert config.tolerances.tol_geo == 1e-10


def test_threads_resolution(monkeypatch):
    assert CcpnetConfig().resolved_threads() == 1
    monkeypatch.setenv(config_manager.THREADS_ENV_VAR, "4")
    assert CcpnetConfig().resolved_threads() == 4
    assert CcpnetConfig(threads=2).resolved_threads() == 2
    monkeypatch.setenv(config_manager.THREADS_ENV_VAR, "many")
    assert CcpnetConfig().resolved_threads() == 1
