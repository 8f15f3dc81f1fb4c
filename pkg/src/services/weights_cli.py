import argparse
import asyncio
import json
import sys
from pathlib import Path

from pydantic import ValidationError
from tabulate import tabulate

current_dir = Path(__file__).resolve()
src_dir = current_dir.parents[1]
sys.path.insert(0, str(src_dir))

from db.enums import ExitCode
from ergodic.errors import ConfigError, NondegenerateFamilyRequired, SizeGuardError
from ergodic.lattice import select_weights
from runner.config_loader import load_family
from runner.schema import format_validation_error


def parse_args(argv: list[str] | None = None) -> argparse.Namespace:
    """
    Parses CLI arguments using argparse.

    Returns:
        argparse.Namespace: Parsed command-line arguments.
    """
    parser = argparse.ArgumentParser(
        prog="select-weights",
        description=(
            "Select algebraic-past weights for a polynomial family\n\n"
            "Examples:\n"
            "  python weights_cli.py --family prop_fixture\n"
            "  python weights_cli.py --family resources/families/prop_fixture.json --table\n"
        ),
        formatter_class=argparse.RawTextHelpFormatter
    )

    parser.add_argument(
        "-f", "--family",
        type=str,
        required=True,
        metavar="FILE",
        help="Family file, or a family name under resources/families"
    )

    parser.add_argument(
        "-t", "--table",
        action="store_true",
        help="Also print a readable table to stderr"
    )

    return parser.parse_args(argv)


def select_weights_cmd(argv: list[str] | None = None) -> tuple[ExitCode, dict]:
    """
    Selects weights for a family file and returns the JSON payload printed to stdout.

    The payload is the weight selection (weights, base, N0, N1, N2, permutation,
    rejected) with `"ok": true`, or `"ok": false` with the degeneracy report or
    the validation errors.

    Returns:
        tuple[ExitCode, dict]: Exit status and payload.
    """
    args = parse_args(argv)
    try:
        family = asyncio.run(load_family(args.family))
    except ValidationError as e:
        return ExitCode.CONFIG_ERROR, {"ok": False, "errors": format_validation_error(e)}
    except (ConfigError, FileNotFoundError) as e:
        return ExitCode.CONFIG_ERROR, {"ok": False, "errors": [str(e)]}

    try:
        selection = select_weights(family)
    except NondegenerateFamilyRequired as e:
        return ExitCode.CONFIG_ERROR, {"ok": False, "nondegeneracy": e.report.to_dict()}
    except SizeGuardError as e:
        return ExitCode.CONFIG_ERROR, {"ok": False, "errors": [str(e)]}

    payload = {"ok": True, **selection.to_dict()}
    if args.table:
        rows = [
            ["Weights", payload["weights"]],
            ["Base B", payload["base"]],
            ["N_0", payload["N0"]],
            ["N_1", payload["N1"]],
            ["N_2", payload["N2"]],
            ["Column order", payload["permutation"]],
            ["Rejected bases", ", ".join(f"{r['base']} ({r['reason']})" for r in payload["rejected"]) or "—"],
        ]
        print(tabulate(rows, headers=["Field", "Value"], tablefmt="fancy_grid"), file=sys.stderr)
    return ExitCode.PASSED, payload


def main(argv: list[str] | None = None) -> int:
    code, payload = select_weights_cmd(argv)
    print(json.dumps(payload, sort_keys=True))
    return code.value


if __name__ == "__main__":
    sys.exit(main())
