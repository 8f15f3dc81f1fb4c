from dataclasses import dataclass, field
from pathlib import Path

from db.enums import ExitCode, RunStatus
from ergodic.averaging import AverageSeries
from runner.utils.pool import StreamPool


@dataclass
class RunContext:
    """
    Shared state of one run, handed to every handler.

    Attributes:
        out_dir (Path): Artifact directory.
        pool (StreamPool): Runner used for every stream computation.
    """

    out_dir: Path
    pool: StreamPool


@dataclass
class RunOutcome:
    """
    What a handler produced.

    Attributes:
        status (RunStatus): Pass, tolerance failure or refusal.
        result (dict): Kind-specific statistics for `summary.json`.
        series (AverageSeries | None): Rows for `series.csv`.
        weights (dict | None): Weight selection with N_0, N_1, N_2 when one was made.
        errors (list[str]): "path: message" lines of a refusal.
    """

    status: RunStatus
    result: dict = field(default_factory=dict)
    series: AverageSeries | None = None
    weights: dict | None = None
    errors: list[str] = field(default_factory=list)

    @property
    def exit_code(self) -> ExitCode:
        return self.status.exit_code

    @classmethod
    def refused(cls, *errors: str) -> "RunOutcome":
        return cls(status=RunStatus.REFUSED, errors=list(errors))

    @classmethod
    def judged(cls, passed: bool, **kwargs) -> "RunOutcome":
        return cls(status=RunStatus.PASSED if passed else RunStatus.FAILED, **kwargs)
