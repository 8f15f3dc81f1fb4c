import time
from functools import wraps

from settings import get_logger

logger = get_logger(__name__)


def timed_step(func):
    """
    Decorator that logs the start, end and wall time of an experiment handler.

    Args:
        func (Callable): The async handler `(cfg, context) -> RunOutcome` to wrap.

    Returns:
        Callable: The wrapped handler; its result and exceptions pass through unchanged.
    """
    @wraps(func)
    async def wrapper(cfg, context, *args, **kwargs):
        logger.info(f"Starting {func.__name__} (kind={cfg.kind.value}, seed={cfg.master_seed}, samples={cfg.samples})")
        started = time.perf_counter()
        try:
            return await func(cfg, context, *args, **kwargs)
        finally:
            logger.info(f"{func.__name__} finished in {time.perf_counter() - started:.2f}s")

    return wrapper
