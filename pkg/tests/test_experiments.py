"""
Tests for experiment configuration, presets and the runner.
"""
import dataclasses
import json
import math

import pytest

from core.exceptions import ConfigError, ErrorCodes, NonConvergentError
from core.experiments import (
    CompatFlags,
    ExperimentConfig,
    Metric,
    Mode,
    RunDefaults,
    SeriesSpec,
    SweepSpec,
    get_preset,
    preset_names,
    presets,
    run_experiment,
)
from core import outage
from core.params import linear_to_db

SMALL_SCENARIO = {"L1": 2, "L2": 20, "LG": 2, "d": 10, "C2": 0.75, "lambda_e": 0.005}


def small_config(**data):
    base = {
        "name": "small",
        "metric": "cop",
        "scenario": SMALL_SCENARIO,
        "sweep": {"variable": "beta", "values": [-20, -10, 0]},
        "mode": "closed",
        "trials": 300,
        "chunk_size": 100,
    }
    base.update(data)
    return ExperimentConfig.from_dict(base)


# ============================================================================
# Presets
# ============================================================================


class TestPresets:
    def test_nine_presets_in_order(self):
        assert preset_names() == ["fig3", "fig4", "fig5", "fig6a", "fig6b", "fig7", "fig8", "fig9", "fig10"]
        assert [p.name for p in presets()] == preset_names()

    def test_cop_grid(self):
        fig4 = get_preset("fig4")
        assert fig4.metric is Metric.COP
        assert fig4.sweep.variable == "beta_db"
        assert len(fig4.sweep.values) == 21
        assert fig4.sweep.values[0] == -30.0 and fig4.sweep.values[-1] == 0.0

    def test_distance_grid(self):
        fig5 = get_preset("fig5")
        assert fig5.sweep.values == tuple(float(z) for z in range(20, 101, 5))
        assert fig5.beta_e_db == 0.0

    def test_trust_series_with_baselines(self):
        fig6a = get_preset("fig6a")
        assert fig6a.mode is Mode.CLOSED
        assert len(fig6a.series) == 8
        assert sum(s.nja for s in fig6a.series) == 4
        assert {s.eve_distance for s in fig6a.series} == {20.0, 60.0}

    def test_truncation_presets(self):
        assert get_preset("fig7").sweep.values == tuple(float(k) for k in range(1, 21))
        assert get_preset("fig7").mode is Mode.BOTH
        assert get_preset("fig8").k == 11
        assert len(get_preset("fig10").series) == 4

    def test_unknown_preset(self):
        with pytest.raises(ConfigError) as exc_info:
            get_preset("fig11")
        assert exc_info.value.error_code == ErrorCodes.PRESET_NOT_FOUND

    def test_presets_serialize(self):
        for preset in presets():
            json.dumps(preset.to_dict())


# ============================================================================
# Configuration
# ============================================================================


class TestSweepSpec:
    def test_threshold_aliases(self):
        assert SweepSpec("beta", (0.0,)).variable == "beta_db"
        assert SweepSpec("k", (1.0,)).variable == "K"

    def test_step_grid(self):
        spec = SweepSpec.from_dict({"variable": "eve_distance", "start": 20, "stop": 100, "step": 5})
        assert spec.values == tuple(float(z) for z in range(20, 101, 5))

    def test_num_grid(self):
        spec = SweepSpec.from_dict({"variable": "beta_e", "start": -10, "stop": 10, "num": 9})
        assert len(spec.values) == 9
        assert spec.values[4] == pytest.approx(0.0)

    def test_scenario_field(self):
        assert SweepSpec.from_dict({"variable": "L1", "values": [2, 4]}).values == (2.0, 4.0)

    def test_missing_grid(self):
        with pytest.raises(ConfigError):
            SweepSpec.from_dict({"variable": "beta"})

    def test_unknown_variable(self):
        with pytest.raises(ValueError):
            SweepSpec("temperature", (1.0,))


class TestExperimentConfig:
    def test_curve_needs_sweep(self):
        with pytest.raises(ValueError):
            ExperimentConfig(name="x", metric=Metric.COP)

    def test_k_sweep_must_be_integer(self):
        with pytest.raises(ValueError):
            ExperimentConfig(name="x", metric=Metric.SOP_MULTI, sweep=SweepSpec("K", (1.0, 2.5)))

    def test_series_overrides_validated(self):
        with pytest.raises(ValueError):
            ExperimentConfig(
                name="x",
                metric=Metric.COP,
                sweep=SweepSpec("beta_db", (0.0,)),
                series=(SeriesSpec(overrides=(("c_q", 0.9),)),),
            )

    def test_from_dict(self):
        config = small_config(thresholds={"beta_e": "3dB", "eve_distance": 15, "K": 4}, compat={"nja": True})
        assert config.params.l1 == 2.0
        assert config.params.c_q == pytest.approx(0.05)
        assert config.sweep.variable == "beta_db"
        assert config.beta_e_db == pytest.approx(3.0)
        assert config.eve_distance == 15.0
        assert config.k == 4
        assert config.compat.nja is True
        assert config.output.name == "small.csv"

    def test_linear_threshold(self):
        config = small_config(thresholds={"beta": 0.5})
        assert config.beta_db == pytest.approx(linear_to_db(0.5))

    def test_missing_metric(self):
        with pytest.raises(ConfigError) as exc_info:
            ExperimentConfig.from_dict({"sweep": {"variable": "beta", "values": [0]}})
        assert exc_info.value.error_code == ErrorCodes.CONFIG_INVALID

    def test_invalid_scenario(self):
        with pytest.raises(ConfigError) as exc_info:
            small_config(scenario={"L1": 70})
        assert exc_info.value.error_code == ErrorCodes.CONFIG_INVALID

    def test_unknown_compat_flag(self):
        with pytest.raises(ConfigError):
            small_config(compat={"turbo": True})

    def test_unknown_categorize_method(self):
        with pytest.raises(ConfigError):
            small_config(compat={"categorize": "voronoi"})

    def test_plan(self):
        plan = small_config(seed=9).plan(nja=True)
        assert plan.trials == 300
        assert plan.base_seed == 9
        assert plan.nja is True

    def test_to_dict(self):
        data = small_config().to_dict()
        assert data["metric"] == "cop"
        assert data["thresholds"]["K"] == 20
        assert data["sweep"]["values"] == [-20.0, -10.0, 0.0]


class TestFromFile:
    def test_preset_then_defaults_then_file(self, temp_dir):
        path = temp_dir / "exp.yaml"
        path.write_text("preset: fig4\ntrials: 50\n", encoding="utf-8")
        config = ExperimentConfig.from_file(path, RunDefaults(trials=7, seed=3))
        assert config.name == "fig4"
        assert config.trials == 50
        assert config.seed == 3

    def test_json_file(self, temp_dir):
        path = temp_dir / "exp.json"
        path.write_text(json.dumps({"metric": "cop", "sweep": {"variable": "beta", "values": [-5]}}),
                        encoding="utf-8")
        config = ExperimentConfig.from_file(path)
        assert config.name == "custom"
        assert config.sweep.values == (-5.0,)

    def test_missing_file(self, temp_dir):
        with pytest.raises(ConfigError) as exc_info:
            ExperimentConfig.from_file(temp_dir / "absent.yaml")
        assert exc_info.value.error_code == ErrorCodes.CONFIG_FILE_NOT_FOUND

    def test_not_a_mapping(self, temp_dir):
        path = temp_dir / "list.yaml"
        path.write_text("- 1\n- 2\n", encoding="utf-8")
        with pytest.raises(ConfigError):
            ExperimentConfig.from_file(path)

    @pytest.mark.parametrize(
        "name", ["l1_tradeoff.yaml", "lg_tradeoff.yaml", "l1_sop_tradeoff.yaml", "lg_cop_tradeoff.yaml"]
    )
    def test_shipped_experiments_load(self, project_root, name):
        config = ExperimentConfig.from_file(project_root / "config" / "experiments" / name)
        assert config.sweep is not None

    @pytest.mark.parametrize("name", ["l1_sop_tradeoff.yaml", "lg_cop_tradeoff.yaml"])
    def test_shipped_tradeoffs_run_closed(self, project_root, name):
        config = ExperimentConfig.from_file(project_root / "config" / "experiments" / name)
        result = run_experiment(dataclasses.replace(config, mode=Mode.CLOSED))
        assert len(result.rows) == len(config.sweep.values) * len(config.series)
        assert all(0.0 <= row.closed_form <= 1.0 for row in result.rows)


class TestRunDefaults:
    def test_shipped_defaults(self, project_root):
        defaults = RunDefaults.from_yaml(project_root / "config" / "socsec.yaml")
        assert defaults.trials == 100_000
        assert defaults.log_level == "INFO"
        assert not defaults.log_file

    def test_worker_env_override(self, monkeypatch):
        monkeypatch.setenv("SOCSEC_WORKERS", "3")
        assert RunDefaults.from_dict({"monte_carlo": {"workers": 1}}).workers == 3

    def test_invalid_log_level(self):
        with pytest.raises(ConfigError):
            RunDefaults.from_dict({"logging": {"log_level": "LOUD"}})

    def test_apply(self):
        config = RunDefaults(trials=11, seed=4, workers=2, chunk_size=3).apply(get_preset("fig4"))
        assert (config.trials, config.seed, config.workers, config.chunk_size) == (11, 4, 2, 3)

    def test_missing_file(self, temp_dir):
        with pytest.raises(ConfigError):
            RunDefaults.from_yaml(temp_dir / "absent.yaml")


# ============================================================================
# Runner
# ============================================================================


class TestRunExperiment:
    def test_cop_both_modes(self):
        result = run_experiment(small_config(mode="both"))
        assert len(result.rows) == 3
        for row in result.rows:
            assert 0.0 <= row.closed_form <= 1.0
            assert 0.0 <= row.monte_carlo <= 1.0
            assert row.abs_gap == pytest.approx(abs(row.closed_form - row.monte_carlo))
        assert "max_abs_gap" in result.summary
        assert set(result.summary["fitted"]) >= {"Ty", "Iy", "Tz", "Tz_linear_nu", "Iz", "eve"}

    def test_closed_mode_has_no_simulation(self):
        result = run_experiment(small_config())
        assert all(row.monte_carlo is None and row.abs_gap is None for row in result.rows)

    def test_scenario_sweep(self):
        result = run_experiment(small_config(sweep={"variable": "L1", "values": [1, 2, 3]}, thresholds={"beta": "-19dB"}))
        assert [row.sweep_value for row in result.rows] == [1.0, 2.0, 3.0]
        assert {row.sweep_variable for row in result.rows} == {"L1"}

    def test_sop_single_baseline_series(self):
        config = small_config(
            metric="sop_single",
            sweep={"variable": "eve_distance", "values": [5, 15]},
            series=[{"label": "jamming"}, {"label": "NJA", "nja": True}],
        )
        result = run_experiment(config)
        baseline = [row.closed_form for row in result.rows if row.series == "NJA"]
        expected = -math.expm1(-config.params.mean_relay_count)
        assert baseline == [pytest.approx(expected)] * 2
        jammed = [row.closed_form for row in result.rows if row.series == "jamming"]
        assert all(j <= b + 1e-12 for j, b in zip(jammed, baseline))

    def test_sop_multi_without_jammers(self):
        config = small_config(
            metric="sop_multi",
            sweep={"variable": "K", "values": [1, 2, 3]},
            compat={"nja": True},
        )
        with pytest.warns(UserWarning):
            result = run_experiment(config)
        values = [row.closed_form for row in result.rows]
        assert values == sorted(values)
        assert result.summary["warnings"]

    def test_histogram(self):
        config = ExperimentConfig.from_dict(
            {"name": "hist", "metric": "histogram", "scenario": SMALL_SCENARIO, "variable": "Iy",
             "trials": 400, "chunk_size": 200}
        )
        result = run_experiment(config)
        assert result.histogram is not None
        assert result.histogram.gamma_probabilities is not None
        assert 0.0 <= result.summary["l1_distance"] <= 2.0
        assert result.summary["empirical"]["samples"] == 400

    def test_grid_point_named_on_failure(self, monkeypatch):
        def fail(*args, **kwargs):
            raise NonConvergentError("quadrature stalled")

        monkeypatch.setattr("core.experiments.cop_closed", fail)
        with pytest.raises(NonConvergentError) as exc_info:
            run_experiment(small_config())
        assert "beta_db=-20" in str(exc_info.value.message)
        assert exc_info.value.details["grid_point"].startswith("series 'base'")

    @pytest.mark.slow
    def test_grid_point_named_on_pool_failure(self, monkeypatch):
        real = outage.multi_sop_terms

        def stalled(params, betas, k_max, **kwargs):
            kwargs.update(workers=2, radial_nodes=8, angular_nodes=16, inner_rtol=0.0, inner_max_level=1)
            return real(params, betas, k_max, **kwargs)

        monkeypatch.setattr("core.experiments.multi_sop_terms", stalled)
        config = small_config(metric="sop_multi", sweep={"variable": "K", "values": [1, 2]})
        with pytest.raises(NonConvergentError) as exc_info:
            run_experiment(config)
        assert exc_info.value.error_code == ErrorCodes.QUADRATURE_NOT_CONVERGED
        assert exc_info.value.details["grid_point"] == "series 'base', K=1"

    def test_fits_skip_eavesdropper_inside_relay_disk(self):
        result = run_experiment(small_config(thresholds={"eve_distance": 1}))
        assert len(result.rows) == 3
        assert result.summary["fitted"]["Tz"] is None
        assert result.summary["fitted"]["Tz_linear_nu"] is None
        assert result.summary["fitted"]["Ty"] is not None

    def test_compat_flags_reach_closed_forms(self):
        config = small_config(
            metric="sop_single",
            sweep={"variable": "beta_e", "values": [0]},
            thresholds={"eve_distance": 15},
            compat={"linear_nu_tz": True, "exact_jammer_region": True},
        )
        assert config.compat == CompatFlags(linear_nu_tz=True, exact_jammer_region=True)
        result = run_experiment(config)
        assert 0.0 <= result.rows[0].closed_form <= 1.0
