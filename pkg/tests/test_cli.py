"""
Tests for the socsec command line.
"""
import json

import pytest
import yaml

from core.cli import EXIT_CONFIG, EXIT_NUMERICAL, EXIT_OK, build_parser, load_config, main
from core.exceptions import NonConvergentError
from core.experiments import Mode
from core.report import summary_path
from utils.digest import compute_file_checksum

SMALL_EXPERIMENT = {
    "name": "cli_small",
    "metric": "cop",
    "scenario": {"L1": 2, "L2": 20, "LG": 2, "d": 10, "C2": 0.75, "lambda_e": 0.005},
    "sweep": {"variable": "beta", "values": [-20, -10]},
    "mode": "both",
    "trials": 200,
    "chunk_size": 50,
}


@pytest.fixture
def experiment_file(temp_dir):
    path = temp_dir / "small.yaml"
    path.write_text(yaml.safe_dump(SMALL_EXPERIMENT), encoding="utf-8")
    return path


@pytest.fixture
def no_defaults(temp_dir):
    return str(temp_dir / "no_defaults.yaml")


class TestParser:
    def test_run_flags_override(self):
        args = build_parser().parse_args(
            ["run", "--preset", "fig4", "--trials", "10", "--seed", "4", "--beta-e", "3dB",
             "--mode", "closed", "--nja", "--linear-nu-tz", "--defaults", "/nonexistent.yaml"]
        )
        config = load_config(args)
        assert config.trials == 10
        assert config.seed == 4
        assert config.beta_e_db == pytest.approx(3.0)
        assert config.mode is Mode.CLOSED
        assert config.compat.nja and config.compat.linear_nu_tz
        assert not config.compat.relay_sampling

    def test_preset_and_config_are_exclusive(self):
        with pytest.raises(SystemExit):
            build_parser().parse_args(["run", "--preset", "fig4", "--config", "x.yaml"])

    def test_validate_ignores_run_flags(self, experiment_file):
        args = build_parser().parse_args(["validate", "--config", str(experiment_file)])
        assert load_config(args).trials == 200


class TestMain:
    def test_presets(self, capsys):
        assert main(["presets"]) == EXIT_OK
        lines = capsys.readouterr().out.strip().splitlines()
        assert len(lines) == 9
        assert lines[1].startswith("fig4")

    def test_validate(self, capsys, no_defaults):
        assert main(["validate", "--preset", "fig5", "--defaults", no_defaults]) == EXIT_OK
        data = json.loads(capsys.readouterr().out)
        assert data["name"] == "fig5"
        assert data["metric"] == "sop_single"

    def test_unknown_preset(self, no_defaults):
        assert main(["validate", "--preset", "fig99", "--defaults", no_defaults]) == EXIT_CONFIG

    def test_invalid_experiment_file(self, temp_dir, no_defaults):
        path = temp_dir / "bad.yaml"
        path.write_text(yaml.safe_dump({**SMALL_EXPERIMENT, "scenario": {"L1": 70}}), encoding="utf-8")
        assert main(["run", "--config", str(path), "--defaults", no_defaults]) == EXIT_CONFIG

    def test_invalid_defaults_file(self, temp_dir, experiment_file):
        defaults = temp_dir / "defaults.yaml"
        defaults.write_text("logging:\n  log_level: LOUD\n", encoding="utf-8")
        assert main(["run", "--config", str(experiment_file), "--defaults", str(defaults)]) == EXIT_CONFIG

    def test_run_writes_csv_and_summary(self, temp_dir, experiment_file, no_defaults, capsys):
        output = temp_dir / "out" / "cop.csv"
        code = main(["run", "--config", str(experiment_file), "--output", str(output), "--defaults", no_defaults])
        assert code == EXIT_OK

        lines = output.read_text(encoding="utf-8").splitlines()
        assert lines[0] == "series,sweep_variable,sweep_value,closed_form,monte_carlo,ci_half_width,abs_gap"
        assert len(lines) == 3
        assert lines[1].startswith("base,beta_db,-20,")

        summary = json.loads(summary_path(output).read_text(encoding="utf-8"))
        assert summary["csv_sha256"] == compute_file_checksum(str(output))
        assert summary["experiment"]["trials"] == 200
        assert json.loads(capsys.readouterr().out)["csv_sha256"] == summary["csv_sha256"]

    def test_defaults_layer_under_file(self, temp_dir, experiment_file, capsys):
        defaults = temp_dir / "defaults.yaml"
        defaults.write_text("monte_carlo:\n  trials: 7\n  seed: 42\n", encoding="utf-8")
        assert main(["validate", "--config", str(experiment_file), "--defaults", str(defaults)]) == EXIT_OK
        data = json.loads(capsys.readouterr().out)
        assert data["trials"] == 200
        assert data["seed"] == 42

    def test_numerical_failure(self, monkeypatch, experiment_file, no_defaults):
        def fail(config):
            raise NonConvergentError("outer integral stalled")

        monkeypatch.setattr("core.cli.run_experiment", fail)
        assert main(["run", "--config", str(experiment_file), "--defaults", no_defaults]) == EXIT_NUMERICAL

    def test_log_file(self, temp_dir, no_defaults):
        log_file = temp_dir / "logs" / "socsec.log"
        assert main(["--log-file", str(log_file), "validate", "--preset", "fig4", "--defaults", no_defaults]) == EXIT_OK
        assert log_file.exists()
