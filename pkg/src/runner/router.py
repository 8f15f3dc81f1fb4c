from db.enums import ExperimentKind, RunStatus
from ergodic.errors import ConfigError, ErgodicLabError, HypothesisUnmetError
from runner.context import RunContext, RunOutcome
from runner.handlers.averages_handler import handle_cesaro, handle_prime, handle_weighted
from runner.handlers.checks_handler import handle_orthogonality, handle_verify_past
from runner.handlers.diagnostics_handler import handle_entropy, handle_maximal, handle_reduction_gap
from runner.schema import ExperimentConfig, require_blocks
from settings import get_logger

logger = get_logger(__name__)

HANDLERS = {
    ExperimentKind.CESARO: handle_cesaro,
    ExperimentKind.WEIGHTED: handle_weighted,
    ExperimentKind.PRIME: handle_prime,
    ExperimentKind.REDUCTION_GAP: handle_reduction_gap,
    ExperimentKind.MAXIMAL: handle_maximal,
    ExperimentKind.ORTHOGONALITY: handle_orthogonality,
    ExperimentKind.VERIFY_PAST: handle_verify_past,
    ExperimentKind.ENTROPY: handle_entropy,
}


async def route_experiment(cfg: ExperimentConfig, context: RunContext) -> RunOutcome:
    """
    Routes a validated config to the handler of its kind.

    Domain errors never escape: a semantic config error, an unmet hypothesis or a
    blown size guard becomes a refusal (exit 1), and a missed tolerance is logged
    as a warning (exit 2).

    Args:
        cfg (ExperimentConfig): Validated configuration.
        context (RunContext): Output directory and worker pool.

    Returns:
        RunOutcome: Status, statistics and series of the run.
    """
    try:
        require_blocks(cfg)
        outcome = await HANDLERS[cfg.kind](cfg, context)
    except ConfigError as e:
        logger.error(f"Config error: {e}")
        return RunOutcome.refused(str(e))
    except HypothesisUnmetError as e:
        logger.error(f"Refused {cfg.kind.value}: {e}")
        return RunOutcome.refused(f"hypotheses: {e}")
    except ErgodicLabError as e:
        logger.error(f"{type(e).__name__} in {cfg.kind.value}: {e}")
        return RunOutcome.refused(f"{type(e).__name__}: {e}")

    if outcome.status is RunStatus.FAILED:
        logger.warning(f"{cfg.kind.value} run missed its tolerance (seed {cfg.master_seed})")
    return outcome
