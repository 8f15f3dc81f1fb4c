import asyncio

from ergodic.averaging import AverageSeries, CheckpointSchedule, SeriesRow, maximal_estimate
from ergodic.diagnostics import block_entropy, reduction_gap
from ergodic.errors import ConfigError
from ergodic.systems import BernoulliShiftSystem, ProductSystem
from runner.context import RunContext, RunOutcome
from runner.schema import (
    ExperimentConfig,
    build_family,
    build_observables,
    build_schedule,
    build_system,
)
from runner.utils.decorators import timed_step
from runner.utils.pool import StreamPool
from settings import config, get_logger

logger = get_logger(__name__)


def run_reduction_gap(cfg: ExperimentConfig, pool: StreamPool) -> RunOutcome:
    """
    Gap between the averages of f and of its Pinsker projection on a product system.

    Passes when the median gap decreases strictly until it reaches 0 and enough
    samples end below the threshold.
    """
    system = build_system(cfg)
    if not isinstance(system, ProductSystem):
        raise ConfigError("system.type", "the reduction gap needs a product system")
    observables = build_observables(cfg, system)
    family = build_family(cfg.family, system.d)
    if len(observables) != family.m:
        raise ConfigError("observables", f"expected {family.m} observables, got {len(observables)}")
    schedule = build_schedule(cfg.schedule)

    gap = reduction_gap(system, observables, family, schedule, cfg.samples, pool)
    tol = cfg.tolerances
    fraction = gap.fraction_below(tol.gap_threshold)
    result = gap.to_dict(tol.gap_threshold)
    result["required_fraction"] = tol.gap_fraction
    passed = fraction >= tol.gap_fraction and gap.median_decreasing()
    return RunOutcome.judged(passed, result=result, series=gap.as_series())


def run_maximal(cfg: ExperimentConfig, pool: StreamPool) -> RunOutcome:
    """
    Empirical maximal-function ratio of one observable along one column.

    Passes when every running maximum respects ‖f‖_∞ and the ratio lies in the
    configured band, if one is set.
    """
    block = cfg.maximal
    system = build_system(cfg)
    observables = build_observables(cfg, system)
    family = build_family(cfg.family, system.d)
    if block.column >= min(family.m, len(observables)):
        raise ConfigError("maximal.column", f"column {block.column} has no observable or family column")
    if block.n_max > config.max_orbit_n:
        raise ConfigError("maximal.n_max", f"{block.n_max} exceeds the cap {config.max_orbit_n}")

    estimate = maximal_estimate(
        system, observables[block.column], family.column(block.column), cfg.samples, block.n_max, block.p, pool
    )
    tol = cfg.tolerances
    in_band = (tol.band_low is None or estimate.ratio >= tol.band_low) and (
        tol.band_high is None or estimate.ratio <= tol.band_high
    )
    result = estimate.to_dict()
    result["band"] = {"low": tol.band_low, "high": tol.band_high, "within": in_band}
    series = AverageSeries(
        schedule=CheckpointSchedule((block.n_max,)),
        rows=[SeriesRow(stream_id=s, values=(v,)) for s, v in enumerate(estimate.per_sample)],
        metadata={"quantity": "running_max"},
    )
    return RunOutcome.judged(estimate.within_sup_bound and in_band, result=result, series=series)


def run_entropy(cfg: ExperimentConfig) -> RunOutcome:
    block = cfg.entropy
    system = build_system(cfg)
    if not isinstance(system, BernoulliShiftSystem):
        raise ConfigError("system.type", "block entropy is computed for Bernoulli shifts")
    estimate = block_entropy(system, block.box_side, cfg.samples, block.estimator)
    result = estimate.to_dict()
    result["tolerance"] = block.tolerance
    return RunOutcome.judged(estimate.deviation <= block.tolerance, result=result)


@timed_step
async def handle_reduction_gap(cfg: ExperimentConfig, context: RunContext) -> RunOutcome:
    return await asyncio.to_thread(run_reduction_gap, cfg, context.pool)


@timed_step
async def handle_maximal(cfg: ExperimentConfig, context: RunContext) -> RunOutcome:
    return await asyncio.to_thread(run_maximal, cfg, context.pool)


@timed_step
async def handle_entropy(cfg: ExperimentConfig, context: RunContext) -> RunOutcome:
    return await asyncio.to_thread(run_entropy, cfg)
