import csv
import io
import json
from pathlib import Path
from typing import Iterable

import aiofiles

from settings import get_logger

logger = get_logger(__name__)

SERIES_HEADER = ("stream_id", "checkpoint_N", "value")


def format_series_csv(records: Iterable[tuple[int, int, float]]) -> str:
    """
    Renders series records as CSV text with the fixed header.

    Values are written with `repr`, the shortest string that round-trips the
    float, so identical runs give identical bytes.

    Args:
        records (Iterable[tuple[int, int, float]]): (stream_id, checkpoint_N, value) triples.

    Returns:
        str: CSV text with `\\n` line endings.
    """
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(SERIES_HEADER)
    for stream_id, checkpoint, value in records:
        writer.writerow((stream_id, checkpoint, repr(float(value))))
    return buffer.getvalue()


def format_summary_json(summary: dict) -> str:
    return json.dumps(summary, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


async def write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    async with aiofiles.open(path, mode="w", encoding="utf-8", newline="") as file:
        await file.write(text)


async def write_series_csv(out_dir: Path, records: Iterable[tuple[int, int, float]]) -> Path:
    """
    Writes `series.csv` into `out_dir`.

    Args:
        out_dir (Path): Artifact directory (created if missing).
        records (Iterable[tuple[int, int, float]]): Series records; may be empty.

    Returns:
        Path: The written file.
    """
    path = out_dir / "series.csv"
    await write_text(path, format_series_csv(records))
    logger.info(f"Wrote {path}")
    return path


async def write_summary_json(out_dir: Path, summary: dict) -> Path:
    """
    Writes `summary.json` into `out_dir`, keys sorted.

    Args:
        out_dir (Path): Artifact directory (created if missing).
        summary (dict): JSON-serialisable summary.

    Returns:
        Path: The written file.
    """
    path = out_dir / "summary.json"
    await write_text(path, format_summary_json(summary))
    logger.info(f"Wrote {path}")
    return path


async def write_schema(path: Path, schema: dict) -> Path:
    await write_text(path, json.dumps(schema, indent=2) + "\n")
    logger.info(f"Wrote JSON schema to {path}")
    return path
