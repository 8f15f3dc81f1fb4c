import json
import logging

import numpy as np
import pytest

from db.enums import ExitCode
from ergodic.diagnostics import GapReport
from main import main, run_from_file
from runner.handlers import diagnostics_handler
from runner.utils.pool import split_chunks
from services.weights_cli import select_weights_cmd
from settings import config, get_logger, set_console_level


def write_config(tmp_path, name: str, data: dict):
    path = tmp_path / f"{name}.json"
    path.write_text(json.dumps(data))
    return path


def constant_config(**fields) -> dict:
    data = {
        "kind": "cesaro",
        "system": {"type": "bernoulli", "d": 1, "prob": ["1/2", "1/2"]},
        "observables": [{"type": "constant"}],
        "family": {"columns": [[[0, 1]]]},
        "schedule": {"checkpoints": [10, 100]},
        "samples": 2,
    }
    data.update(fields)
    return data


@pytest.mark.parametrize("ids, parts, expected", [
    (range(5), 2, [[0, 1, 2], [3, 4]]),
    (range(3), 8, [[0], [1], [2]]),
    (range(4), 1, [[0, 1, 2, 3]]),
    ([], 4, []),
])
def test_split_chunks(ids, parts, expected):
    assert split_chunks(ids, parts) == expected


async def test_verify_past_run(out_dir):
    code, summary = await run_from_file("verify_past", out_dir, workers=1)
    assert code is ExitCode.PASSED
    assert summary["status"] == "passed"
    assert summary["result"]["counterexamples"] == 0
    assert (out_dir / "series.csv").read_text() == "stream_id,checkpoint_N,value\n"
    assert json.loads((out_dir / "summary.json").read_text()) == summary


async def test_constant_cesaro_run(out_dir):
    code, summary = await run_from_file("cesaro_constant", out_dir, workers=1)
    assert code is ExitCode.PASSED
    lines = (out_dir / "series.csv").read_text().splitlines()
    assert len(lines) == 1 + 16
    assert all(line.endswith(",1.0") for line in lines[1:])
    assert summary["result"]["final"]["mean"] == 1.0
    assert summary["weights"]["weights"] == [1]


async def test_alternating_weights_run(out_dir):
    code, summary = await run_from_file("weighted_alternating", out_dir, workers=1)
    assert code is ExitCode.PASSED
    assert summary["result"]["metadata"]["weight_sequence"] == {"type": "alternating"}


async def test_invalid_config_is_refused(tmp_path, out_dir):
    path = write_config(tmp_path, "bad", constant_config(samples=0))
    code, summary = await run_from_file(str(path), out_dir)
    assert code is ExitCode.CONFIG_ERROR
    assert summary["status"] == "refused"
    assert any(line.startswith("samples: ") for line in summary["errors"])
    assert (out_dir / "series.csv").read_text() == "stream_id,checkpoint_N,value\n"


async def test_missed_limit_exits_with_two(tmp_path, out_dir):
    path = write_config(tmp_path, "wrong_limit", constant_config(expected_limit="1/3"))
    code, summary = await run_from_file(str(path), out_dir, workers=1)
    assert code is ExitCode.TOLERANCE_FAILED
    assert summary["status"] == "failed"
    assert summary["result"]["expected_limit"]["passed"] is False


async def test_limit_run_with_a_flat_oscillation_fails(tmp_path, out_dir):
    # A_N = 1/N for odd N and 0 otherwise: the tail oscillation stalls at 1/3 and at 1/101
    data = constant_config(
        weight_sequence={"type": "alternating"},
        schedule={"checkpoints": [1, 2, 3, 10, 101, 1000]},
        expected_limit="0",
    )
    data["kind"] = "weighted"
    code, summary = await run_from_file(str(write_config(tmp_path, "flat", data)), out_dir, workers=1)
    assert code is ExitCode.TOLERANCE_FAILED
    result = summary["result"]
    assert result["expected_limit"]["passed"] is True
    assert result["within_bound"] is True
    assert result["convergence"]["median_oscillation_decreasing"] is False


@pytest.mark.parametrize("medians, expected", [
    ([0.04, 0.03, 0.02, 0.01], ExitCode.PASSED),
    ([0.0, 0.0, 0.0, 0.0], ExitCode.PASSED),
    ([0.04, 0.01, 0.01, 0.01], ExitCode.TOLERANCE_FAILED),
])
async def test_reduction_gap_needs_a_decreasing_median(medians, expected, out_dir, monkeypatch):
    def fixed_gap(system, observables, family, schedule, samples, pool):
        gaps = np.tile(medians, (samples, 1))
        return GapReport(schedule=schedule, stream_ids=tuple(range(samples)), gaps=gaps)

    monkeypatch.setattr(diagnostics_handler, "reduction_gap", fixed_gap)
    code, summary = await run_from_file("reduction_gap", out_dir, workers=1)
    assert code is expected
    assert summary["result"]["fraction_below_threshold"] == 1.0
    assert summary["result"]["median_decreasing"] is (expected is ExitCode.PASSED)


async def test_limit_check_on_degenerate_family_is_refused(tmp_path, out_dir):
    data = constant_config(
        system={"type": "bernoulli", "d": 2, "prob": ["1/2", "1/2"]},
        observables=[{"type": "constant"}, {"type": "constant"}],
        family={"columns": [[[0, 1], [0, 2]], [[0, 1], [0, 2]]]},
        schedule={"checkpoints": [1, 2, 3, 4]},
        k_limit_check=True,
    )
    code, summary = await run_from_file(str(write_config(tmp_path, "degenerate", data)), out_dir, workers=1)
    assert code is ExitCode.CONFIG_ERROR
    assert summary["errors"][0].startswith("hypotheses: ")


async def test_seed_override_is_recorded(out_dir):
    _, summary = await run_from_file("cesaro_constant", out_dir, workers=1, seed=99)
    assert summary["master_seed"] == 99
    assert summary["config"]["master_seed"] == 99


async def test_worker_count_does_not_change_the_output(tmp_path):
    data = {
        "kind": "cesaro",
        "system": {"type": "bernoulli", "d": 2, "prob": ["1/2", "1/2"]},
        "observables": [
            {"type": "cylinder", "window": [[0, 0]], "table": [-1, 1]},
            {"type": "indicator", "window": [[0, 0], [0, 1]], "symbols": [1, 0]},
        ],
        "family": {"columns": [[[0, 0, 3], [0, 0, 8]], [[0, 0, 1], [0, 0, -1]]]},
        "schedule": {"geometric": {"start": 10, "stop": 2000}},
        "samples": 5,
        "master_seed": 17,
    }
    path = write_config(tmp_path, "determinism", data)
    for workers in (1, 2, 8):
        await run_from_file(str(path), tmp_path / f"workers_{workers}", workers=workers)
    for name in ("series.csv", "summary.json"):
        expected = (tmp_path / "workers_1" / name).read_bytes()
        assert (tmp_path / "workers_2" / name).read_bytes() == expected
        assert (tmp_path / "workers_8" / name).read_bytes() == expected


def test_main_exit_statuses(tmp_path, capsys):
    assert main(["--config", "verify_past", "--out", str(tmp_path / "ok")]) == 0
    assert main(["--config", "verify_past"]) == 1
    bad = write_config(tmp_path, "bad", {"kind": "nonsense"})
    assert main(["--config", str(bad), "--out", str(tmp_path / "bad")]) == 1
    assert "Error" in capsys.readouterr().out


def test_dump_schema(tmp_path):
    path = tmp_path / "schema.json"
    assert main(["--dump-schema", str(path)]) == 0
    schema = json.loads(path.read_text())
    assert "kind" in schema["properties"]
    assert "master_seed" in schema["properties"]


def test_registry_records_runs(tmp_path, monkeypatch, capsys):
    monkeypatch.setattr(config, "registry_enabled", True)
    assert main(["--config", "verify_past", "--out", str(tmp_path / "run")]) == 0
    capsys.readouterr()
    assert main(["--list-runs"]) == 0
    assert "verify_past" in capsys.readouterr().out
    assert main(["--show-run", "1"]) == 0
    assert '"status": "passed"' in capsys.readouterr().out
    assert main(["--show-run", "42"]) == 0
    assert "Run 42 not found." in capsys.readouterr().out


def test_weight_selection_command():
    code, payload = select_weights_cmd(["--family", "prop_fixture"])
    assert code is ExitCode.PASSED
    assert payload["ok"]
    assert payload["weights"] == [1, 2]
    assert payload["N2"] == 0


def test_weight_selection_refuses_degenerate_families():
    code, payload = select_weights_cmd(["--family", "equal_columns"])
    assert code is ExitCode.CONFIG_ERROR
    assert payload["ok"] is False
    assert payload["nondegeneracy"]["passed"] is False


def test_weight_selection_missing_file(tmp_path):
    code, payload = select_weights_cmd(["--family", str(tmp_path / "absent.json")])
    assert code is ExitCode.CONFIG_ERROR
    assert payload["errors"]


@pytest.mark.slow
@pytest.mark.parametrize("name", ["k_limit", "birkhoff", "reduction_gap", "prime_rotation", "maximal", "entropy"])
async def test_acceptance_runs(name, out_dir):
    bands = json.loads((config.path_to_fixtures / "regression_bands.json").read_text())
    band = next(b for b in bands.values() if b["config"] == name)
    code, summary = await run_from_file(name, out_dir, workers=2)
    assert code is ExitCode.PASSED, summary
    assert summary["master_seed"] == band["master_seed"]
    assert summary["config"]["samples"] == band["samples"]
    result = summary["result"]
    if name == "maximal":
        assert band["low"] <= result["ratio"] <= band["high"]
    elif name == "entropy":
        assert abs(result["estimate"] - band["exact"]) <= band["tolerance"]
    elif name == "reduction_gap":
        assert result["fraction_below_threshold"] >= band["required_fraction"]
    else:
        assert abs(result["final"]["mean"] - band["target"]) <= band.get("tolerance", band["sample_tolerance"])


@pytest.mark.slow
async def test_orthogonality_run(out_dir):
    code, summary = await run_from_file("orthogonality", out_dir, workers=1)
    assert code is ExitCode.PASSED
    pairs = summary["result"]["pairs"]
    met = [pair for pair in pairs if pair["precondition_met"]]
    assert len(met) == len(pairs) - 1
    assert all(pair["value"] == "0" for pair in met)
    (diagonal,) = [pair for pair in pairs if pair["n"] == pair["m"]]
    assert diagonal["value"] == "1/16"
    assert not diagonal["precondition_met"]


def test_quiet_raises_the_console_threshold(tmp_path):
    console = get_logger("main").handlers[0]
    try:
        assert main(["--quiet", "--config", "verify_past", "--out", str(tmp_path / "quiet")]) == 0
        assert console.level == logging.WARNING
    finally:
        set_console_level(config.console_log_level)
    assert console.level == logging.INFO
