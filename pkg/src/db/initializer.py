import sqlite3
from pathlib import Path


class DatabaseInitializer:
    """
    Initializes the SQLite run registry and creates its table.

    Attributes:
        _db_path (Path): Path to the SQLite database file.
    """

    def __init__(self, db_path: Path):
        """
        Initializes the DatabaseInitializer.

        Args:
            db_path (Path): Path to the SQLite database file.
        """
        self._db_path = db_path

    def create_tables(self) -> None:
        """
        Creates the `experiment_runs` table if it doesn't exist.

        Each row stores the validated config, the summary, the exit status and where
        the artifacts were written.

        Raises:
            sqlite3.Error: If an error occurs during table creation.
        """
        self._db_path.parent.mkdir(parents=True, exist_ok=True)
        with sqlite3.connect(self._db_path) as conn:
            cursor = conn.cursor()

            cursor.execute("""
                CREATE TABLE IF NOT EXISTS experiment_runs (
                    id INTEGER PRIMARY KEY,
                    kind TEXT NOT NULL,
                    master_seed TEXT NOT NULL,
                    config_json TEXT NOT NULL,
                    summary_json TEXT NOT NULL,
                    exit_status INTEGER NOT NULL CHECK(exit_status IN (0, 1, 2)),
                    out_dir TEXT NOT NULL,
                    elapsed_seconds REAL NOT NULL,
                    created_at TIMESTAMP DEFAULT CURRENT_TIMESTAMP
                );
            """)

            conn.commit()
