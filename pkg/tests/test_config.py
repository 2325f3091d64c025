"""Tests for configuration loading and run settings."""

import os
from pathlib import Path

import pytest
from pydantic import ValidationError

from ckrbf.config import (
    DEFAULT_CONFIG,
    Family,
    Scaling,
    build_run_config,
    find_config,
    load_config,
    load_environment,
)


pytestmark = pytest.mark.unit


class TestLoadConfig:
    """Test YAML discovery, merging and environment overrides."""

    def test_defaults(self, isolated_env):
        """Test that the defaults are returned when no file is found."""
        assert load_config() == DEFAULT_CONFIG

    def test_discovered_from_subdirectory(self, isolated_env, monkeypatch):
        """Test that the nearest parent config is merged over the defaults."""
        (isolated_env / ".ckrbf.yaml").write_text(
            "cv:\n  folds: 5\nkernel:\n  family: [rbf, ckrbf]\n  k: [2, 3]\n"
        )
        sub = isolated_env / "nested" / "deeper"
        sub.mkdir(parents=True)
        monkeypatch.chdir(sub)

        settings = load_config()

        assert find_config() == (isolated_env / ".ckrbf.yaml").resolve()
        assert settings["cv"] == {"folds": 5, "seed": 0}
        assert settings["kernel"]["family"] == ["rbf", "ckrbf"]
        assert settings["kernel"]["gamma"] == DEFAULT_CONFIG["kernel"]["gamma"]

    def test_defaults_are_not_mutated(self, isolated_env):
        """Test that merging never writes into the shared defaults."""
        (isolated_env / ".ckrbf.yaml").write_text("cv:\n  folds: 3\n")

        load_config()

        assert DEFAULT_CONFIG["cv"]["folds"] == 10

    def test_explicit_invalid_yaml(self, isolated_env):
        """Test that an unparsable explicit file is an error."""
        path = isolated_env / "broken.yaml"
        path.write_text("cv: [unclosed\n")

        with pytest.raises(ValueError, match="Could not load config"):
            load_config(path)

    def test_explicit_non_mapping(self, isolated_env):
        """Test that a YAML list is rejected."""
        path = isolated_env / "list.yaml"
        path.write_text("- a\n- b\n")

        with pytest.raises(ValueError, match="mapping"):
            load_config(path)

    def test_discovered_invalid_yaml_is_ignored(self, isolated_env, caplog):
        """Test that a broken discovered file only logs a warning."""
        (isolated_env / ".ckrbf.yaml").write_text("cv: [unclosed\n")

        settings = load_config()

        assert settings == DEFAULT_CONFIG
        assert "Could not load config" in caplog.text

    def test_environment_variables(self, isolated_env, monkeypatch):
        """Test CKRBF_OUTPUT_DIR and CKRBF_JOBS."""
        monkeypatch.setenv("CKRBF_OUTPUT_DIR", "/tmp/elsewhere")
        monkeypatch.setenv("CKRBF_JOBS", "4")

        settings = load_config()

        assert settings["output"]["dir"] == "/tmp/elsewhere"
        assert settings["jobs"] == 4

    def test_yaml_overrides_environment(self, isolated_env, monkeypatch):
        """Test that the config file wins over the environment."""
        monkeypatch.setenv("CKRBF_JOBS", "4")
        (isolated_env / ".ckrbf.yaml").write_text("jobs: 2\n")

        assert load_config()["jobs"] == 2

    def test_invalid_jobs_variable(self, isolated_env, monkeypatch):
        """Test that a non-integer CKRBF_JOBS is rejected."""
        monkeypatch.setenv("CKRBF_JOBS", "many")

        with pytest.raises(ValueError, match="CKRBF_JOBS"):
            load_config()

    def test_load_environment(self, isolated_env):
        """Test that variables from .env end up in the environment."""
        (isolated_env / ".env").write_text("CKRBF_TEST_MARKER=loaded\n")
        try:
            load_environment()
            assert os.environ.get("CKRBF_TEST_MARKER") == "loaded"
        finally:
            os.environ.pop("CKRBF_TEST_MARKER", None)

    def test_load_environment_without_file(self, isolated_env):
        """Test that a missing .env is not an error."""
        load_environment(isolated_env / "missing")


class TestRunConfig:
    """Test combining settings with command-line overrides."""

    def test_defaults(self, isolated_env, blobs_file):
        """Test the settings of a run without flags."""
        config = build_run_config("grid", [blobs_file], load_config(), {})

        assert config.families == [Family.CKRBF]
        assert config.k == [2]
        assert config.folds == 10
        assert config.scaling == Scaling.GLOBAL
        assert config.output_dir == Path("ckrbf-output")
        assert config.grid_spec().shape == (11, 7)

    def test_overrides(self, isolated_env, blobs_file):
        """Test that flags replace settings and None flags are ignored."""
        overrides = {
            "folds": 5,
            "families": ("rbf", "ckrbf"),
            "k": (3, 2, 3),
            "seed": None,
            "c_values": (),
            "gamma_values": (2.0, 0.5),
        }

        config = build_run_config("grid", [blobs_file], load_config(), overrides)

        assert config.folds == 5
        assert config.families == [Family.RBF, Family.CKRBF]
        assert config.k == [2, 3]
        assert config.seed == 0
        assert config.gamma_values == [0.5, 2.0]
        assert len(config.c_values) == 11

    def test_kernel_specs(self, isolated_env, blobs_file):
        """Test one spec per plain family and one per clustered family and k."""
        config = build_run_config(
            "pf", [blobs_file], load_config(), {"families": ("rbf", "ckrbf", "mkrbf"), "k": (2, 3)}
        )

        labels = [spec.label for spec in config.kernel_specs()]

        assert labels == ["rbf", "ckrbf(2)", "ckrbf(3)", "m2rbf", "m3rbf"]

    def test_cluster_count_fallback(self, isolated_env, blobs_file):
        """Test the per-command k used when neither a flag nor the file sets it."""
        families = {"families": ("rbf", "mrbf", "ckrbf", "mkrbf")}

        assert build_run_config("compare", [blobs_file], load_config(), families).k == [2, 3, 4]
        assert build_run_config("pf", [blobs_file], load_config(), families).k == [2]

        (isolated_env / ".ckrbf.yaml").write_text("kernel:\n  k: 5\n")
        configured = build_run_config("compare", [blobs_file], load_config(), families)
        assert configured.k == [5]

    @pytest.mark.parametrize(
        "overrides,message",
        [
            ({"folds": 1}, "folds"),
            ({"jobs": 0}, "jobs"),
            ({"gamma": -1.0}, "gamma"),
            ({"k": (0,)}, "k must be"),
            ({"families": ("mkrbf",), "k": (1,)}, "mkrbf"),
            ({"c_values": (1.0, -2.0)}, "positive"),
        ],
    )
    def test_invalid_values(self, isolated_env, blobs_file, overrides, message):
        """Test that invalid combinations raise a ValidationError."""
        with pytest.raises(ValidationError, match=message):
            build_run_config("grid", [blobs_file], load_config(), overrides)

    def test_missing_dataset(self, isolated_env):
        """Test that dataset paths must exist."""
        with pytest.raises(ValidationError, match="not found"):
            build_run_config("grid", [isolated_env / "absent.libsvm"], load_config(), {})

    def test_strict_scaling_forces_strict_mode(self, isolated_env, blobs_file):
        """Test that per-fold scaling clusters each training fold."""
        config = build_run_config(
            "train", [blobs_file], load_config(), {"scaling": "strict", "mode": "transductive"}
        )

        spec = config.kernel_spec()

        assert spec.scaling == "strict"
        assert spec.mode == "strict"

    def test_global_scaling_leaves_specs_unscaled(self, isolated_env, blobs_file):
        """Test that global scaling happens at load time, not in the kernel spec."""
        config = build_run_config("train", [blobs_file], load_config(), {})

        assert config.kernel_spec().scaling == "none"
        assert config.kernel_spec().mode == "transductive"

    def test_echo(self, isolated_env, blobs_file):
        """Test the manifest copy of the settings."""
        config = build_run_config("grid", [blobs_file], load_config(), {})

        echo = config.echo()

        assert "output_dir" not in echo
        assert echo["datasets"] == [str(blobs_file)]
        assert echo["families"] == ["ckrbf"]
        assert echo["command"] == "grid"
