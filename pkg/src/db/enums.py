from enum import Enum


class ExperimentKind(Enum):
    """
    Enumeration of experiments the runner can execute.

    Attributes:
        CESARO (str): Polynomial multiple Cesàro averages (optionally with a K-limit check).
        WEIGHTED (str): Averages weighted by a bounded sequence g(n).
        PRIME (str): Averages along the primes.
        REDUCTION_GAP (str): Distance between averages of f and of its Pinsker projection.
        MAXIMAL (str): Empirical maximal-function ratio.
        ORTHOGONALITY (str): Exact martingale-difference correlations.
        VERIFY_PAST (str): Exhaustive algebraic-past axiom check on a box.
        ENTROPY (str): Block entropy of a Bernoulli shift.
    """
    CESARO = "cesaro"
    WEIGHTED = "weighted"
    PRIME = "prime"
    REDUCTION_GAP = "reduction_gap"
    MAXIMAL = "maximal"
    ORTHOGONALITY = "orthogonality"
    VERIFY_PAST = "verify_past"
    ENTROPY = "entropy"


class ExitCode(Enum):
    """
    Process exit statuses of a run.

    Attributes:
        PASSED (int): Every requested check passed.
        CONFIG_ERROR (int): The configuration was rejected.
        TOLERANCE_FAILED (int): A requested check missed its tolerance.
    """
    PASSED = 0
    CONFIG_ERROR = 1
    TOLERANCE_FAILED = 2


class RunStatus(Enum):
    """
    Outcome recorded in `summary.json`.

    Attributes:
        PASSED (str): Every requested check passed.
        FAILED (str): A requested check missed its tolerance.
        REFUSED (str): The configuration or the experiment's hypotheses were rejected.
    """
    PASSED = "passed"
    FAILED = "failed"
    REFUSED = "refused"

    @property
    def exit_code(self) -> ExitCode:
        return {
            RunStatus.PASSED: ExitCode.PASSED,
            RunStatus.FAILED: ExitCode.TOLERANCE_FAILED,
            RunStatus.REFUSED: ExitCode.CONFIG_ERROR,
        }[self]
