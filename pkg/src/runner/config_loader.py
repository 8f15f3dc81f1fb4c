import json
from pathlib import Path

import aiofiles
from pydantic import ValidationError

from ergodic.errors import ConfigError
from ergodic.polys import PolynomialFamily
from runner.schema import ExperimentConfig, FamilySpec, build_family
from settings import config, get_logger

logger = get_logger(__name__)


async def _read_json(path: Path) -> dict:
    async with aiofiles.open(path, mode="r", encoding="utf-8") as file:
        content = await file.read()
    try:
        return json.loads(content)
    except json.JSONDecodeError as e:
        raise ConfigError("<file>", f"{path} is not valid JSON: {e.msg} at line {e.lineno}") from e


def _resolve(name_or_path: str | Path, directory: Path) -> Path:
    path = Path(name_or_path)
    if path.exists():
        return path
    candidate = directory / (path.name if path.suffix else f"{path.name}.json")
    return candidate if candidate.exists() else path


async def load_experiment(name_or_path: str | Path, seed_override: int | None = None) -> ExperimentConfig:
    """
    Loads and validates an experiment config.

    Args:
        name_or_path (str | Path): A file path, or a config name under `resources/configs`.
        seed_override (int | None): Replaces `master_seed` before validation.

    Returns:
        ExperimentConfig: The validated configuration.

    Raises:
        FileNotFoundError: If the file does not exist.
        ConfigError: If the file is not JSON.
        pydantic.ValidationError: If the content does not match the schema.
    """
    path = _resolve(name_or_path, config.path_to_configs)
    data = await _read_json(path)
    if seed_override is not None:
        data["master_seed"] = seed_override
    try:
        experiment = ExperimentConfig.model_validate(data)
    except ValidationError:
        logger.error(f"Config {path} failed validation")
        raise
    logger.info(f"Loaded {experiment.kind.value} config from {path} (seed {experiment.master_seed})")
    return experiment


async def load_family(name_or_path: str | Path) -> PolynomialFamily:
    """
    Loads a polynomial family file: `{"columns": [...], "generator_assignment": [...]}`.

    Args:
        name_or_path (str | Path): A file path, or a family name under `resources/families`.

    Returns:
        PolynomialFamily: The family.

    Raises:
        ConfigError: For malformed JSON or an invalid family.
        pydantic.ValidationError: If the content does not match the family schema.
    """
    path = _resolve(name_or_path, config.path_to_families)
    data = await _read_json(path)
    return build_family(FamilySpec.model_validate(data))


async def load_regression_bands() -> dict:
    """
    Loads the stochastic pass bands shipped with the repository.

    Returns:
        dict: Band name -> {seed, samples, low, high, ...}.
    """
    return await _read_json(config.path_to_fixtures / "regression_bands.json")
