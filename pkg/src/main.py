import argparse
import asyncio
import json
import logging
import sys
import time
from pathlib import Path

from pydantic import ValidationError
from tabulate import tabulate

current_dir = Path(__file__).resolve()
src_dir = current_dir.parent
sys.path.insert(0, str(src_dir))

from db.enums import ExitCode
from db.initializer import DatabaseInitializer
from db.repository import RunRepository
from ergodic.errors import ConfigError
from runner.config_loader import load_experiment
from runner.context import RunContext, RunOutcome
from runner.router import route_experiment
from runner.schema import ExperimentConfig, format_validation_error
from runner.utils.pool import StreamPool
from runner.writers import write_schema, write_series_csv, write_summary_json
from settings import config, get_logger, set_console_level

logger = get_logger(__name__)


def parse_args(argv: list[str] | None = None) -> argparse.Namespace:
    """
    Parses CLI arguments using argparse.

    Returns:
        argparse.Namespace: Parsed command-line arguments.
    """
    parser = argparse.ArgumentParser(
        prog="ergodic-lab",
        description=(
            "Run polynomial multiple ergodic average experiments\n\n"
            "Examples:\n"
            "  python src/main.py --config resources/configs/k_limit.json --out runs/k_limit\n"
            "  python src/main.py --config k_limit --out runs/k_limit --workers 8\n"
            "  python src/main.py --config birkhoff --out runs/birkhoff --seed 7\n"
            "  python src/main.py --list-runs\n"
            "  python src/main.py --list-runs 50\n"
            "  python src/main.py --show-run 3\n"
            "  python src/main.py --dump-schema\n"
        ),
        formatter_class=argparse.RawTextHelpFormatter
    )

    parser.add_argument(
        "-c", "--config",
        type=str,
        metavar="PATH",
        help="Experiment config file, or a config name under resources/configs"
    )

    parser.add_argument(
        "-o", "--out",
        type=str,
        metavar="DIR",
        help="Directory for series.csv and summary.json (required with --config)"
    )

    parser.add_argument(
        "-w", "--workers",
        type=int,
        metavar="K",
        help=f"Worker processes (default: {config.default_workers})"
    )

    parser.add_argument(
        "-s", "--seed",
        type=int,
        metavar="OVERRIDE",
        help="Replace the config's master_seed"
    )

    parser.add_argument(
        "-l", "--list-runs",
        nargs="?",
        const=10,
        type=int,
        metavar="N",
        help="List recorded runs (default: 10). Optionally specify a number: --list-runs 20"
    )

    parser.add_argument(
        "--show-run",
        type=int,
        metavar="RUN_ID",
        help="Show the summary of a recorded run"
    )

    parser.add_argument(
        "--dump-schema",
        nargs="?",
        const=str(config.path_to_configs / "experiment.schema.json"),
        metavar="PATH",
        help="Write the JSON schema of experiment configs"
    )

    parser.add_argument(
        "-q", "--quiet",
        action="store_true",
        help="Only print warnings and errors to the console"
    )

    return parser.parse_args(argv)


def build_summary(cfg: ExperimentConfig | None, outcome: RunOutcome) -> dict:
    """
    The content of `summary.json`; a function of the config and the outcome only.

    Args:
        cfg (ExperimentConfig | None): Validated config, None if validation failed.
        outcome (RunOutcome): Handler outcome.

    Returns:
        dict: JSON-serialisable summary without timestamps.
    """
    summary = {
        "status": outcome.status.value,
        "exit_status": outcome.exit_code.value,
        "result": outcome.result,
    }
    if cfg is not None:
        summary["kind"] = cfg.kind.value
        summary["master_seed"] = cfg.master_seed
        summary["config"] = cfg.echo()
    if outcome.weights is not None:
        summary["weights"] = outcome.weights
    if outcome.errors:
        summary["errors"] = outcome.errors
    return summary


async def run(
        cfg: ExperimentConfig,
        out_dir: Path,
        workers: int | None = None,
        repository: RunRepository | None = None
) -> tuple[ExitCode, dict]:
    """
    Runs one experiment and writes `series.csv` and `summary.json`.

    Args:
        cfg (ExperimentConfig): Validated configuration.
        out_dir (Path): Artifact directory.
        workers (int | None): Worker processes, `config.default_workers` if None.
        repository (RunRepository | None): Registry to record the run in.

    Returns:
        tuple[ExitCode, dict]: Exit status and the written summary.
    """
    started = time.perf_counter()
    context = RunContext(out_dir=out_dir, pool=StreamPool(workers))
    outcome = await route_experiment(cfg, context)
    summary = build_summary(cfg, outcome)

    records = outcome.series.records() if outcome.series is not None else []
    await write_series_csv(out_dir, records)
    await write_summary_json(out_dir, summary)

    if repository is not None:
        await repository.record_run(
            kind=cfg.kind.value,
            master_seed=cfg.master_seed,
            config=cfg.echo(),
            summary=summary,
            exit_status=outcome.exit_code.value,
            out_dir=str(out_dir),
            elapsed_seconds=time.perf_counter() - started,
        )
    return outcome.exit_code, summary


async def run_from_file(
        path: str,
        out_dir: Path,
        workers: int | None = None,
        seed: int | None = None,
        repository: RunRepository | None = None
) -> tuple[ExitCode, dict]:
    """
    Loads, validates and runs a config file; validation failures still write a summary.

    Returns:
        tuple[ExitCode, dict]: Exit status and the written summary.
    """
    try:
        cfg = await load_experiment(path, seed_override=seed)
    except ValidationError as e:
        errors = format_validation_error(e)
    except (ConfigError, FileNotFoundError) as e:
        errors = [str(e)]
    else:
        return await run(cfg, out_dir, workers, repository)

    for line in errors:
        logger.error(f"Invalid config {path}: {line}")
    outcome = RunOutcome.refused(*errors)
    summary = build_summary(None, outcome)
    await write_series_csv(out_dir, [])
    await write_summary_json(out_dir, summary)
    return outcome.exit_code, summary


def print_summary(summary: dict) -> None:
    rows = [
        ["Kind", summary.get("kind", "—")],
        ["Status", summary["status"]],
        ["Exit status", summary["exit_status"]],
        ["Seed", summary.get("master_seed", "—")],
    ]
    weights = summary.get("weights")
    if weights:
        rows.append(["Weights", weights.get("weights")])
        if "N2" in weights:
            rows.append(["N_0 / N_1 / N_2", f"{weights['N0']} / {weights['N1']} / {weights['N2']}"])
    result = summary.get("result", {})
    if "target" in result:
        rows.append(["Target", result["target"]])
    if "final" in result:
        rows.append(["Final mean", result["final"]["mean"]])
    for line in summary.get("errors", []):
        rows.append(["Error", line])
    print(tabulate(rows, headers=["Field", "Value"], tablefmt="fancy_grid"))


async def list_runs(repository: RunRepository, limit: int) -> None:
    runs = await repository.list_runs(limit=limit)
    if not runs:
        print("No runs recorded.")
        return
    rows = [(r.id, r.kind, r.master_seed, r.exit_status, f"{r.elapsed_seconds:.2f}", r.out_dir, r.created_at) for r in runs]
    print(tabulate(rows, headers=["ID", "Kind", "Seed", "Exit", "Seconds", "Out dir", "Created"], tablefmt="github"))


async def show_run(repository: RunRepository, run_id: int) -> None:
    record = await repository.get_run(run_id)
    if record is None:
        print(f"Run {run_id} not found.")
        return
    print_summary(record.summary)
    print(json.dumps(record.summary, indent=2, sort_keys=True))


async def amain(args: argparse.Namespace) -> ExitCode:
    repository = None
    if config.registry_enabled or args.list_runs or args.show_run is not None:
        DatabaseInitializer(config.path_to_db).create_tables()
        repository = RunRepository(config.path_to_db)

    if args.dump_schema:
        await write_schema(Path(args.dump_schema), ExperimentConfig.model_json_schema())
        return ExitCode.PASSED
    if args.list_runs:
        await list_runs(repository, args.list_runs)
        return ExitCode.PASSED
    if args.show_run is not None:
        await show_run(repository, args.show_run)
        return ExitCode.PASSED

    if not args.config or not args.out:
        print("Error: --config and --out are required to run an experiment.")
        print("Use -h for help.")
        return ExitCode.CONFIG_ERROR

    code, summary = await run_from_file(
        args.config,
        Path(args.out),
        workers=args.workers,
        seed=args.seed,
        repository=repository if config.registry_enabled else None,
    )
    print_summary(summary)
    return code


def main(argv: list[str] | None = None) -> int:
    """
    Entry point of the experiment runner.

    Exit statuses: 0 when every requested check passed, 2 when a check missed its
    tolerance, 1 when the config was rejected.
    """
    args = parse_args(argv)
    if args.quiet:
        set_console_level(logging.WARNING)
    return asyncio.run(amain(args)).value


if __name__ == "__main__":
    sys.exit(main())
