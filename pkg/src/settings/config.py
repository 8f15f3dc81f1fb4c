"""Configuration module for environment variables and paths.

This module defines application-wide settings using Pydantic's BaseSettings,
including resource paths, storage locations, worker defaults and the size caps
enforced by experiment validation. Settings are automatically loaded from an
optional `.env` file at the project root; every field has a default.
"""

from pathlib import Path
from pydantic_settings import BaseSettings, SettingsConfigDict

BASE_DIR = Path(__file__).parent.parent.parent


class AppConfig(BaseSettings):
    """
    Application configuration using environment variables and defaults.

    Attributes:
        path_to_configs (Path): Directory with ready-to-run experiment configs.
        path_to_families (Path): Directory with polynomial family files.
        path_to_fixtures (Path): Directory with regression band fixtures.

        path_to_logs (Path): Directory of the application log.
        log_file_name (str): Name of the log file inside `path_to_logs`.
        console_log_level (str): Console threshold (stderr).
        file_log_level (str): Log file threshold.
        path_to_db (Path): Path to SQLite database for the run registry.
        registry_enabled (bool): Record every run in the registry.

        default_workers (int): Worker processes used when `--workers` is absent.
        block_size (int): Number of orbit indices evaluated per vectorised block.
        sieve_segment_size (int): Segment length of the prime sieve.

        max_degree (int): Largest accepted polynomial degree.
        max_orbit_n (int): Largest accepted orbit index n (or prime a_n).
        max_window (int): Largest cylinder window.
        table_cap (int): Largest materialised cylinder table (a^|W|).
        rational_table_cap (int): Largest table kept in exact rational arithmetic.
        oracle_cap (int): Largest table accepted by the enumeration oracle.
        max_box_points (int): Largest box enumerated by the axiom verifier.
        entropy_max_cells (int): Largest Følner box (r^d) for block entropy.

        model_config (SettingsConfigDict): Pydantic settings for loading `.env` file.
    """

    path_to_configs: Path = BASE_DIR / "resources" / "configs"
    path_to_families: Path = BASE_DIR / "resources" / "families"
    path_to_fixtures: Path = BASE_DIR / "resources" / "fixtures"

    path_to_logs: Path = BASE_DIR / "logs"
    log_file_name: str = "app.log"
    console_log_level: str = "INFO"
    file_log_level: str = "WARNING"
    path_to_db: Path = BASE_DIR / "storage" / "experiment_runs.db"
    registry_enabled: bool = True

    default_workers: int = 1
    block_size: int = 4096
    sieve_segment_size: int = 1 << 16

    max_degree: int = 6
    max_orbit_n: int = 10 ** 7
    max_window: int = 24
    table_cap: int = 1 << 24
    rational_table_cap: int = 1 << 12
    oracle_cap: int = 1 << 16
    max_box_points: int = 10 ** 7
    entropy_max_cells: int = 16

    model_config = SettingsConfigDict(
        env_file=str(BASE_DIR / ".env"),
        env_file_encoding="utf-8",
        env_prefix="ERGODIC_",
        extra="ignore"
    )


config = AppConfig()
