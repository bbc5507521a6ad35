"""
Tests for Run Determinism

Property 1: Byte-identical output
    Running the same configuration twice with the same seed writes the same
    CSV bytes.

Property 2: Worker independence
    The CSV does not change with the worker count or chunk size.
"""
import pytest
from hypothesis import HealthCheck, given, settings, strategies as st

from core.cli import run
from core.experiments import ExperimentConfig
from core.outage import clear_terms_cache

SCENARIO = {"L1": 2, "L2": 20, "LG": 2, "d": 10, "C2": 0.75, "lambda_e": 0.005}

WORKER_CASES = {
    "sop_single": {},
    "sop_multi": {
        "metric": "sop_multi",
        "sweep": {"variable": "K", "values": [1, 3]},
        "thresholds": {"beta_e": "0dB"},
    },
}


def _config(output, **data):
    base = {
        "name": "determinism",
        "metric": "sop_single",
        "scenario": SCENARIO,
        "sweep": {"variable": "beta_e", "values": [-10, 0, 10]},
        "thresholds": {"eve_distance": 15},
        "mode": "both",
        "trials": 150,
        "chunk_size": 40,
        "output": str(output),
    }
    base.update(data)
    return ExperimentConfig.from_dict(base)


class TestRunDeterminism:
    def test_repeat_run_is_byte_identical(self, temp_dir):
        first, second = temp_dir / "a.csv", temp_dir / "b.csv"
        summary_a = run(_config(first, seed=11))
        summary_b = run(_config(second, seed=11))
        assert first.read_bytes() == second.read_bytes()
        assert summary_a["csv_sha256"] == summary_b["csv_sha256"]

    def test_seed_changes_simulation(self, temp_dir):
        first, second = temp_dir / "a.csv", temp_dir / "b.csv"
        run(_config(first, metric="cop", sweep={"variable": "beta", "values": [-30, -20, -10, 0]}, seed=1))
        run(_config(second, metric="cop", sweep={"variable": "beta", "values": [-30, -20, -10, 0]}, seed=2))
        assert first.read_bytes() != second.read_bytes()

    @given(chunk_size=st.integers(min_value=1, max_value=200))
    @settings(max_examples=5, deadline=None, suppress_health_check=[HealthCheck.function_scoped_fixture])
    def test_chunk_size_does_not_change_csv(self, temp_dir, chunk_size):
        reference, candidate = temp_dir / "ref.csv", temp_dir / "cand.csv"
        run(_config(reference, seed=5))
        run(_config(candidate, seed=5, chunk_size=chunk_size))
        assert reference.read_bytes() == candidate.read_bytes()

    @pytest.mark.slow
    @pytest.mark.parametrize("case", sorted(WORKER_CASES))
    def test_worker_count_does_not_change_csv(self, temp_dir, case):
        outputs = []
        for workers in (1, 2, 8):
            clear_terms_cache()
            path = temp_dir / f"{case}-{workers}.csv"
            run(_config(path, seed=3, workers=workers, **WORKER_CASES[case]))
            outputs.append(path.read_bytes())
        assert outputs[0] == outputs[1] == outputs[2]
