import json

import pytest
from pydantic import ValidationError

from db.enums import ExperimentKind
from db.initializer import DatabaseInitializer
from db.repository import RunRepository
from ergodic.errors import ConfigError
from runner.config_loader import load_experiment, load_family, load_regression_bands
from runner.writers import SERIES_HEADER, format_series_csv, format_summary_json, write_series_csv, write_summary_json


def test_series_csv_format():
    text = format_series_csv([(0, 10, 0.5), (0, 100, 1 / 3), (1, 10, -0.0)])
    lines = text.split("\n")
    assert lines[0] == ",".join(SERIES_HEADER) == "stream_id,checkpoint_N,value"
    assert lines[1] == "0,10,0.5"
    assert float(lines[2].split(",")[2]) == 1 / 3
    assert lines[-1] == ""
    assert format_series_csv([]) == "stream_id,checkpoint_N,value\n"


def test_summary_json_is_sorted():
    text = format_summary_json({"status": "passed", "exit_status": 0, "result": {"b": 1, "a": 2}})
    assert text.endswith("}\n")
    assert text.index('"exit_status"') < text.index('"result"') < text.index('"status"')
    assert json.loads(text)["result"] == {"a": 2, "b": 1}


async def test_writers_create_the_directory(out_dir):
    series = await write_series_csv(out_dir, [(3, 1, 1.0)])
    summary = await write_summary_json(out_dir, {"status": "passed"})
    assert series.read_text() == "stream_id,checkpoint_N,value\n3,1,1.0\n"
    assert json.loads(summary.read_text()) == {"status": "passed"}


async def test_load_shipped_config_by_name():
    cfg = await load_experiment("verify_past")
    assert cfg.kind is ExperimentKind.VERIFY_PAST
    assert cfg.verify_past.weights == [1, 2]


async def test_seed_override():
    cfg = await load_experiment("cesaro_constant", seed_override=42)
    assert cfg.master_seed == 42


async def test_invalid_json_is_a_config_error(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{\"kind\": ")
    with pytest.raises(ConfigError):
        await load_experiment(path)


async def test_schema_errors_propagate(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"kind": "cesaro", "samples": 0}))
    with pytest.raises(ValidationError):
        await load_experiment(path)


async def test_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        await load_experiment(tmp_path / "absent.json")


async def test_load_family():
    family = await load_family("prop_fixture")
    assert family.d == 2 and family.m == 2
    assert family.entry(1, 0).to_list() == [0, 0, 8]


async def test_regression_bands_cover_the_acceptance_runs():
    bands = await load_regression_bands()
    assert {"k_limit", "birkhoff", "reduction_gap", "prime_rotation", "maximal_ratio", "entropy"} <= set(bands)
    assert bands["k_limit"]["target"] == 0.125


async def test_repository_round_trip(tmp_path):
    db_path = tmp_path / "runs.db"
    DatabaseInitializer(db_path).create_tables()
    repository = RunRepository(db_path)
    seed = (1 << 64) - 1
    first = await repository.record_run("verify_past", seed, {"kind": "verify_past"}, {"status": "passed"}, 0, "runs/a", 0.5)
    second = await repository.record_run("cesaro", 7, {"kind": "cesaro"}, {"status": "failed"}, 2, "runs/b", 1.25)

    record = await repository.get_run(first)
    assert record.master_seed == seed
    assert record.summary == {"status": "passed"}
    assert record.exit_status == 0

    runs = await repository.list_runs(limit=5)
    assert [r.id for r in runs] == [second, first]
    assert await repository.get_run(second + 100) is None
