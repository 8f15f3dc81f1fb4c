from concurrent.futures import ProcessPoolExecutor
from itertools import repeat
from typing import Sequence

from ergodic.averaging import SeriesRow, SeriesTask
from settings import config, get_logger

logger = get_logger(__name__)


def _run_chunk(task: SeriesTask, stream_ids: list[int]) -> list[SeriesRow]:
    return task.run(stream_ids)


def split_chunks(stream_ids: Sequence[int], parts: int) -> list[list[int]]:
    """Contiguous, nonempty chunks whose sizes differ by at most one."""
    ids = list(stream_ids)
    parts = max(1, min(parts, len(ids)))
    size, extra = divmod(len(ids), parts)
    chunks, start = [], 0
    for k in range(parts):
        stop = start + size + (1 if k < extra else 0)
        chunks.append(ids[start:stop])
        start = stop
    return [chunk for chunk in chunks if chunk]


class StreamPool:
    """
    Runs a `SeriesTask` over stream ids with a pool of worker processes.

    Every row depends only on its own stream id, and rows are merged by stream
    id, so the output is the same for any number of workers.

    Attributes:
        workers (int): Number of worker processes; 1 runs in-process.
    """

    def __init__(self, workers: int | None = None):
        self.workers = max(1, workers if workers is not None else config.default_workers)

    def __call__(self, task: SeriesTask, stream_ids: Sequence[int]) -> list[SeriesRow]:
        ids = [int(s) for s in stream_ids]
        chunks = split_chunks(ids, self.workers)
        if len(chunks) <= 1:
            rows = task.run(ids)
        else:
            logger.info(f"Running {len(ids)} streams on {len(chunks)} worker processes")
            with ProcessPoolExecutor(max_workers=len(chunks)) as executor:
                rows = [row for chunk in executor.map(_run_chunk, repeat(task), chunks) for row in chunk]
        return sorted(rows, key=lambda row: row.stream_id)
