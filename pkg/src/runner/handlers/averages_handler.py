import asyncio
import math

import numpy as np

from ergodic.averaging import AverageSeries, IndexMode, SeriesTask, collect_series
from ergodic.diagnostics import MIN_CHECKPOINTS, KLimitResult, convergence_report, k_limit_check
from ergodic.errors import ConfigError
from ergodic.polys import PolynomialFamily, normalize_family
from runner.context import RunContext, RunOutcome
from runner.schema import (
    ExperimentConfig,
    build_family,
    build_observables,
    build_schedule,
    build_system,
    build_weight_sequence,
    parse_rational,
    resolve_weights,
)
from runner.utils.decorators import timed_step
from runner.utils.pool import StreamPool
from settings import get_logger

logger = get_logger(__name__)


def _weights_report(cfg: ExperimentConfig, fam: PolynomialFamily) -> dict | None:
    """Selected (or given) weights with thresholds; None when a degenerate family makes 'auto' impossible."""
    if cfg.weights == "auto" and not fam.nondegeneracy().passed:
        return None
    weights, selection = resolve_weights(cfg.weights, fam, fam.d)
    if selection is not None:
        logger.info(f"Selected weights {list(weights.weights)} (B={selection.base}, N_2={selection.n2})")
        return selection.to_dict()
    return {"weights": list(weights.weights)}


def _expected_limit_check(series: AverageSeries, cfg: ExperimentConfig) -> KLimitResult:
    target = parse_rational(cfg.expected_limit)
    finals = series.values[:, -1]
    deviations = tuple(float(abs(v - float(target))) for v in finals)
    tol = cfg.tolerances
    return KLimitResult(
        target=target,
        mean_deviation=float(abs(np.mean(finals) - float(target))),
        fraction_within=sum(d <= tol.k_limit_sample for d in deviations) / len(deviations),
        mean_tolerance=tol.k_limit_mean,
        sample_tolerance=tol.k_limit_sample,
        required_fraction=tol.k_limit_fraction,
        deviations=deviations,
    )


def run_averages(cfg: ExperimentConfig, pool: StreamPool, mode: IndexMode) -> RunOutcome:
    """
    Cesàro, weighted or prime averages of every sample, with the requested limit checks.

    A run that checks a limit also needs the median tail oscillation to decrease
    strictly across the checkpoints until it reaches 0.

    The family runs as given: A_N(f, p) equals A_N(f∘T^o, p - o) term by term, so
    constant terms are reported as offsets instead of being absorbed into f.

    Raises:
        ConfigError: For inconsistent shapes or too few checkpoints for a limit check.
        HypothesisUnmetError: If a K-limit check is requested outside its hypotheses.
    """
    system = build_system(cfg)
    observables = build_observables(cfg, system)
    family = build_family(cfg.family, system.d)
    schedule = build_schedule(cfg.schedule)
    if len(observables) != family.m:
        raise ConfigError("observables", f"expected {family.m} observables (one per family column), got {len(observables)}")
    weight_sequence = build_weight_sequence(cfg.weight_sequence) if mode is IndexMode.WEIGHTED else None

    weights = _weights_report(cfg, family)
    _, offsets = normalize_family(family)

    task = SeriesTask(system, observables, family, schedule, mode, weights=weight_sequence)
    series = collect_series(task, range(cfg.samples), pool)
    values = series.values

    bound = float(math.prod(obs.bound for obs in observables)) * (weight_sequence.bound if weight_sequence else 1.0)
    within_bound = bool(np.all(np.abs(values) <= bound * (1 + 1e-12)))
    finals = values[:, -1]
    result = {
        "metadata": series.metadata,
        "nondegeneracy": family.nondegeneracy().to_dict(),
        "offsets": [list(o.coords) for o in offsets],
        "bound": bound,
        "within_bound": within_bound,
        "final": {
            "checkpoint_N": schedule.last,
            "mean": float(np.mean(finals)),
            "min": float(np.min(finals)),
            "max": float(np.max(finals)),
        },
    }
    checks = [within_bound]

    report = None
    if len(schedule) >= MIN_CHECKPOINTS:
        report = convergence_report(series, cfg.tolerances.eps)
        result["convergence"] = report.to_dict()

    if cfg.k_limit_check:
        if report is None:
            raise ConfigError("schedule", f"a limit check needs at least {MIN_CHECKPOINTS} checkpoints")
        tol = cfg.tolerances
        limit = k_limit_check(
            report, observables, system, family,
            mean_tolerance=tol.k_limit_mean,
            sample_tolerance=tol.k_limit_sample,
            required_fraction=tol.k_limit_fraction,
        )
        result["k_limit"] = limit.to_dict()
        result["target"] = limit.to_dict()["target"]
        checks.append(limit.passed)
    elif cfg.expected_limit is not None:
        limit = _expected_limit_check(series, cfg)
        result["expected_limit"] = limit.to_dict()
        result["target"] = limit.to_dict()["target"]
        checks.append(limit.passed)

    if report is not None and "target" in result:
        checks.append(report.median_oscillation_decreasing)
    return RunOutcome.judged(all(checks), result=result, series=series, weights=weights)


@timed_step
async def handle_cesaro(cfg: ExperimentConfig, context: RunContext) -> RunOutcome:
    return await asyncio.to_thread(run_averages, cfg, context.pool, IndexMode.CESARO)


@timed_step
async def handle_weighted(cfg: ExperimentConfig, context: RunContext) -> RunOutcome:
    return await asyncio.to_thread(run_averages, cfg, context.pool, IndexMode.WEIGHTED)


@timed_step
async def handle_prime(cfg: ExperimentConfig, context: RunContext) -> RunOutcome:
    return await asyncio.to_thread(run_averages, cfg, context.pool, IndexMode.PRIME)
