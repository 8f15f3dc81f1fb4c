import json
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional

import aiosqlite

from settings import get_logger

logger = get_logger(__name__)


@dataclass(frozen=True)
class RunRecord:
    """
    One stored run.

    Attributes:
        id (int): Registry id.
        kind (str): Experiment kind.
        master_seed (int): Seed the run used.
        config (dict): Validated configuration echo.
        summary (dict): The written summary.
        exit_status (int): 0, 1 or 2.
        out_dir (str): Artifact directory.
        elapsed_seconds (float): Wall time of the run.
        created_at (str): Registry timestamp.
    """

    id: int
    kind: str
    master_seed: int
    config: dict
    summary: dict
    exit_status: int
    out_dir: str
    elapsed_seconds: float
    created_at: str


class RunRepository:
    """
    Repository for the history of experiment runs in SQLite.

    Attributes:
        _db_path (Path): Path to the SQLite database.
    """

    def __init__(self, db_path: Path):
        """
        Initializes the repository with the given database path.

        Args:
            db_path (Path): Path to the SQLite database.
        """
        self._db_path = db_path

    async def record_run(
            self,
            kind: str,
            master_seed: int,
            config: dict,
            summary: dict,
            exit_status: int,
            out_dir: str,
            elapsed_seconds: float
    ) -> int:
        """
        Stores a finished run.

        Args:
            kind (str): Experiment kind.
            master_seed (int): Seed the run used.
            config (dict): Configuration echo.
            summary (dict): Summary written to `summary.json`.
            exit_status (int): Exit status of the run.
            out_dir (str): Artifact directory.
            elapsed_seconds (float): Wall time.

        Returns:
            int: The new run id.

        Raises:
            aiosqlite.Error: If a database error occurs.
        """
        try:
            async with aiosqlite.connect(self._db_path) as db:
                cursor = await db.execute(
                    """
                    INSERT INTO experiment_runs
                        (kind, master_seed, config_json, summary_json, exit_status, out_dir, elapsed_seconds)
                    VALUES (?, ?, ?, ?, ?, ?, ?)
                    """,
                    (
                        kind,
                        str(master_seed),
                        json.dumps(config, sort_keys=True),
                        json.dumps(summary, sort_keys=True),
                        exit_status,
                        out_dir,
                        elapsed_seconds,
                    )
                )
                await db.commit()
                run_id = cursor.lastrowid
            logger.info(f"Recorded run {run_id} ({kind}, exit {exit_status})")
            return run_id
        except aiosqlite.Error as e:
            logger.error(f"Database Error (record_run): {e}")
            raise

    async def get_run(self, run_id: int) -> Optional[RunRecord]:
        """
        Returns one run by id.

        Args:
            run_id (int): Registry id.

        Returns:
            Optional[RunRecord]: The run if found, else None.

        Raises:
            aiosqlite.Error: If a database error occurs.
        """
        try:
            async with aiosqlite.connect(self._db_path) as db:
                cursor = await db.execute(
                    """
                    SELECT id, kind, master_seed, config_json, summary_json,
                           exit_status, out_dir, elapsed_seconds, created_at
                    FROM experiment_runs
                    WHERE id = ?
                    """,
                    (run_id,)
                )
                row = await cursor.fetchone()

            return self._to_record(row) if row else None
        except aiosqlite.Error as e:
            logger.error(f"Database Error (get_run): {e}")
            raise

    async def list_runs(self, limit: int = 20) -> List[RunRecord]:
        """
        Returns the latest runs, newest first.

        Args:
            limit (int): Maximum number of runs.

        Returns:
            List[RunRecord]: Stored runs.

        Raises:
            aiosqlite.Error: If a database error occurs.
        """
        try:
            async with aiosqlite.connect(self._db_path) as db:
                cursor = await db.execute(
                    """
                    SELECT id, kind, master_seed, config_json, summary_json,
                           exit_status, out_dir, elapsed_seconds, created_at
                    FROM experiment_runs
                    ORDER BY id DESC
                    LIMIT ?
                    """,
                    (limit,)
                )
                rows = await cursor.fetchall()

            return [self._to_record(row) for row in rows]
        except aiosqlite.Error as e:
            logger.error(f"Database Error (list_runs): {e}")
            raise

    @staticmethod
    def _to_record(row) -> RunRecord:
        return RunRecord(
            id=row[0],
            kind=row[1],
            master_seed=int(row[2]),
            config=json.loads(row[3]),
            summary=json.loads(row[4]),
            exit_status=row[5],
            out_dir=row[6],
            elapsed_seconds=row[7],
            created_at=row[8],
        )
