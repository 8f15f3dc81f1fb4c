"""Convergence evidence, limit checks, the Pinsker reduction gap and block entropy.

Verdicts are evidence at finite N: a series is "converging" when its tail
oscillation is within eps and "inconclusive" otherwise. Divergence is never
reported.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from ergodic.averaging import (
    AverageSeries,
    CheckpointSchedule,
    ChunkRunner,
    SeriesRow,
    SeriesTask,
    collect_series,
)
from ergodic.errors import (
    HypothesisUnmetError,
    IncompatibleObservableError,
    InsufficientCheckpointsError,
    SizeGuardError,
)
from ergodic.lattice import GroupElement
from ergodic.polys import PolynomialFamily, check_nondegeneracy
from ergodic.systems import (
    BernoulliShiftSystem,
    ConstantObservable,
    Observable,
    ProductObservable,
    ProductSystem,
    SystemInstance,
    integral,
    pinsker_project,
)
from settings import config, get_logger

logger = get_logger(__name__)

MIN_CHECKPOINTS = 4


class Verdict:
    CONVERGING = "converging"
    INCONCLUSIVE = "inconclusive"


def tail_oscillations(values: Sequence[float]) -> list[float]:
    """osc_k = max - min of the values at checkpoints k, k + 1, ...; nonincreasing in k."""
    oscillations = []
    high, low = -math.inf, math.inf
    for value in reversed(values):
        high, low = max(high, value), min(low, value)
        oscillations.append(high - low)
    return oscillations[::-1]


def decreasing_to_zero(values: Sequence[float]) -> bool:
    """Strictly decreasing until it reaches 0, then constant at 0."""
    return all(a > b or a == b == 0 for a, b in zip(values, values[1:]))


def tail_start(count: int) -> int:
    """First checkpoint of the verdict window: the last ceil(K/2) checkpoints, at least two."""
    return count - max(2, -(-count // 2))


@dataclass(frozen=True)
class SampleConvergence:
    stream_id: int
    estimated_limit: float
    oscillations: tuple[float, ...]
    tail_oscillation: float
    verdict: str

    def to_dict(self) -> dict:
        return {
            "stream_id": self.stream_id,
            "estimated_limit": self.estimated_limit,
            "tail_oscillation": self.tail_oscillation,
            "verdict": self.verdict,
        }


@dataclass(frozen=True)
class ConvergenceReport:
    """
    Per-sample convergence evidence and cross-sample aggregates.

    Attributes:
        eps (float): Oscillation tolerance of the verdict.
        checkpoints (tuple[int, ...]): Schedule of the series.
        samples (tuple[SampleConvergence, ...]): One entry per stream.
        mean (float): Mean of the estimated limits.
        standard_error (float): Standard error of that mean (0 for one sample).
        median_oscillations (tuple[float, ...]): Median osc_k over samples, per k.
    """

    eps: float
    checkpoints: tuple[int, ...]
    samples: tuple[SampleConvergence, ...]
    mean: float
    standard_error: float
    median_oscillations: tuple[float, ...]

    @property
    def converging_fraction(self) -> float:
        if not self.samples:
            return 0.0
        return sum(s.verdict == Verdict.CONVERGING for s in self.samples) / len(self.samples)

    @property
    def median_oscillation_decreasing(self) -> bool:
        return decreasing_to_zero(self.median_oscillations)

    def to_dict(self) -> dict:
        return {
            "eps": self.eps,
            "median_oscillation_decreasing": self.median_oscillation_decreasing,
            "mean": self.mean,
            "standard_error": self.standard_error,
            "converging_fraction": self.converging_fraction,
            "median_oscillations": [
                {"checkpoint_N": n, "value": v} for n, v in zip(self.checkpoints, self.median_oscillations)
            ],
            "samples": [s.to_dict() for s in self.samples],
        }


def convergence_report(series: AverageSeries, eps: float) -> ConvergenceReport:
    """
    Builds the convergence evidence of every sample of `series`.

    Raises:
        InsufficientCheckpointsError: If the schedule has fewer than four checkpoints.
    """
    count = len(series.schedule)
    if count < MIN_CHECKPOINTS:
        raise InsufficientCheckpointsError(
            f"Convergence needs at least {MIN_CHECKPOINTS} checkpoints, got {count}"
        )
    start = tail_start(count)
    samples = []
    for row in series.rows:
        oscillations = tail_oscillations(row.values)
        tail = oscillations[start]
        samples.append(SampleConvergence(
            stream_id=row.stream_id,
            estimated_limit=row.values[-1],
            oscillations=tuple(oscillations),
            tail_oscillation=tail,
            verdict=Verdict.CONVERGING if tail <= eps else Verdict.INCONCLUSIVE,
        ))

    limits = np.array([s.estimated_limit for s in samples], dtype=np.float64)
    mean = float(np.mean(limits)) if limits.size else 0.0
    standard_error = float(np.std(limits, ddof=1) / math.sqrt(limits.size)) if limits.size > 1 else 0.0
    if samples:
        medians = np.median(np.array([s.oscillations for s in samples], dtype=np.float64), axis=0)
    else:
        medians = np.zeros(count)
    return ConvergenceReport(
        eps=eps,
        checkpoints=series.schedule.checkpoints,
        samples=tuple(samples),
        mean=mean,
        standard_error=standard_error,
        median_oscillations=tuple(float(v) for v in medians),
    )


@dataclass(frozen=True)
class KLimitResult:
    """
    Comparison of estimated limits against Π_j ∫f_j dμ.

    Attributes:
        target (Fraction | float): The exact product of integrals.
        mean_deviation (float): |cross-sample mean - target|.
        fraction_within (float): Share of samples within `sample_tolerance` of the target.
        passed (bool): Both tolerances met.
    """

    target: Fraction | float
    mean_deviation: float
    fraction_within: float
    mean_tolerance: float
    sample_tolerance: float
    required_fraction: float
    deviations: tuple[float, ...]

    @property
    def passed(self) -> bool:
        return self.mean_deviation <= self.mean_tolerance and self.fraction_within >= self.required_fraction

    def to_dict(self) -> dict:
        return {
            "target": float(self.target),
            "target_exact": str(self.target) if isinstance(self.target, Fraction) else None,
            "mean_deviation": self.mean_deviation,
            "fraction_within": self.fraction_within,
            "mean_tolerance": self.mean_tolerance,
            "sample_tolerance": self.sample_tolerance,
            "required_fraction": self.required_fraction,
            "passed": self.passed,
        }


def limit_target(obs_list: Sequence[Observable], sys: SystemInstance) -> Fraction | float:
    target = Fraction(1)
    for obs in obs_list:
        target = target * integral(obs, sys)
    return target


def k_limit_check(
        report: ConvergenceReport,
        obs_list: Sequence[Observable],
        sys: SystemInstance,
        fam: PolynomialFamily,
        mean_tolerance: float = 0.01,
        sample_tolerance: float = 0.05,
        required_fraction: float = 0.9
) -> KLimitResult:
    """
    Compares the estimated limits with Π_j ∫f_j dμ, the limit on K-systems.

    Raises:
        HypothesisUnmetError: If the system is not a K-system or the family is degenerate.
    """
    if not getattr(sys, "is_k_system", False):
        raise HypothesisUnmetError(f"{type(sys).__name__} is not a K-system; the product of integrals is not the limit")
    nondegeneracy = check_nondegeneracy(fam)
    if not nondegeneracy.passed:
        raise HypothesisUnmetError(f"Family is degenerate: {'; '.join(nondegeneracy.failures())}")

    target = limit_target(obs_list, sys)
    deviations = tuple(abs(s.estimated_limit - float(target)) for s in report.samples)
    within = sum(d <= sample_tolerance for d in deviations) / len(deviations) if deviations else 0.0
    result = KLimitResult(
        target=target,
        mean_deviation=abs(report.mean - float(target)),
        fraction_within=within,
        mean_tolerance=mean_tolerance,
        sample_tolerance=sample_tolerance,
        required_fraction=required_fraction,
        deviations=deviations,
    )
    logger.debug(f"K-limit target {target}: mean deviation {result.mean_deviation:.3g}, within {within:.2%}")
    return result


@dataclass(frozen=True)
class GapReport:
    """
    |A_N(f) - A_N(E(f|P))| per sample and checkpoint.

    Attributes:
        schedule (CheckpointSchedule): Checkpoints.
        stream_ids (tuple[int, ...]): Streams in row order.
        gaps (np.ndarray): Shape (samples, checkpoints).
    """

    schedule: CheckpointSchedule
    stream_ids: tuple[int, ...]
    gaps: np.ndarray

    @property
    def medians(self) -> np.ndarray:
        if not len(self.stream_ids):
            return np.zeros(len(self.schedule))
        return np.median(self.gaps, axis=0)

    def fraction_below(self, threshold: float) -> float:
        """Share of samples whose gap at the last checkpoint is below `threshold`."""
        if not len(self.stream_ids):
            return 0.0
        return float(np.mean(self.gaps[:, -1] < threshold))

    def median_decreasing(self) -> bool:
        return decreasing_to_zero([float(v) for v in self.medians])

    def as_series(self) -> AverageSeries:
        rows = [
            SeriesRow(stream_id=s, values=tuple(float(v) for v in self.gaps[p]))
            for p, s in enumerate(self.stream_ids)
        ]
        return AverageSeries(schedule=self.schedule, rows=rows, metadata={"quantity": "reduction_gap"})

    def to_dict(self, threshold: float) -> dict:
        return {
            "median_gap": [
                {"checkpoint_N": n, "value": float(v)} for n, v in zip(self.schedule.checkpoints, self.medians)
            ],
            "median_decreasing": self.median_decreasing(),
            "threshold": threshold,
            "fraction_below_threshold": self.fraction_below(threshold),
        }


def _projected(obs: Observable, sys: ProductSystem) -> Observable:
    projection = pinsker_project(obs, sys)
    if isinstance(projection, ConstantObservable):
        return projection
    return ProductObservable(ConstantObservable(1), projection)


def reduction_gap(
        sys: ProductSystem,
        obs_list: Sequence[Observable],
        fam: PolynomialFamily,
        sched: CheckpointSchedule,
        samples: int,
        runner: ChunkRunner | None = None
) -> GapReport:
    """
    Runs the Cesàro engine on f_j and on E(f_j | Pinsker) and reports the difference.

    Raises:
        IncompatibleObservableError: If the system or an observable is not a product.
    """
    if not isinstance(sys, ProductSystem):
        raise IncompatibleObservableError("The reduction gap needs a product system")
    for obs in obs_list:
        if not isinstance(obs, ProductObservable):
            raise IncompatibleObservableError(f"The reduction gap needs product observables, got {type(obs).__name__}")
    stream_ids = list(range(samples))
    original = collect_series(SeriesTask(sys, tuple(obs_list), fam, sched), stream_ids, runner)
    projected_obs = tuple(_projected(obs, sys) for obs in obs_list)
    projected = collect_series(SeriesTask(sys, projected_obs, fam, sched), stream_ids, runner)
    gaps = np.abs(original.values - projected.values)
    return GapReport(schedule=sched, stream_ids=tuple(original.stream_ids), gaps=gaps)


@dataclass(frozen=True)
class EntropyEstimate:
    """
    Block entropy per cell of a Følner box against the exact Bernoulli entropy.

    Attributes:
        estimate (float): Estimated entropy per cell (nats).
        exact (float): -Σ p_i log p_i.
        box_side (int): r.
        cells (int): r^d.
        samples (int): Number of blocks read.
        distinct_blocks (int): Number of distinct blocks seen.
        estimator (str): "plugin" or "miller_madow".
    """

    estimate: float
    exact: float
    box_side: int
    cells: int
    samples: int
    distinct_blocks: int
    estimator: str

    @property
    def deviation(self) -> float:
        return abs(self.estimate - self.exact)

    def to_dict(self) -> dict:
        return {
            "estimate": self.estimate,
            "exact": self.exact,
            "deviation": self.deviation,
            "box_side": self.box_side,
            "cells": self.cells,
            "samples": self.samples,
            "distinct_blocks": self.distinct_blocks,
            "estimator": self.estimator,
        }


ESTIMATORS = ("plugin", "miller_madow")


def block_entropy(
        sys: BernoulliShiftSystem,
        box_side: int,
        samples: int,
        estimator: str = "plugin"
) -> EntropyEstimate:
    """
    Estimates the entropy per cell from the blocks on [0, r)^d of sampled points.

    The plug-in estimate is -Σ p̂ log p̂ over observed blocks divided by r^d; the
    Miller–Madow variant adds (K - 1) / 2n for K distinct blocks in n samples.

    Raises:
        IncompatibleObservableError: For non-Bernoulli systems.
        SizeGuardError: If r^d exceeds `entropy_max_cells`.
        ValueError: For an unknown estimator or a non-positive size.
    """
    if not isinstance(sys, BernoulliShiftSystem):
        raise IncompatibleObservableError("Block entropy is defined here for Bernoulli shifts only")
    if estimator not in ESTIMATORS:
        raise ValueError(f"Unknown estimator {estimator!r}, expected one of {ESTIMATORS}")
    if box_side < 1 or samples < 1:
        raise ValueError("Box side and sample count must be positive")
    cells = box_side ** sys.d
    if cells > config.entropy_max_cells:
        raise SizeGuardError("Følner box", cells, config.entropy_max_cells)

    box = [GroupElement(coords) for coords in np.ndindex(*(box_side,) * sys.d)]
    blocks = sys.sample_blocks(np.arange(samples, dtype=np.uint64), box)
    _, counts = np.unique(blocks, axis=0, return_counts=True)
    frequencies = counts / samples
    entropy = float(-np.sum(frequencies * np.log(frequencies))) + 0.0
    if estimator == "miller_madow":
        entropy += (counts.size - 1) / (2 * samples)

    result = EntropyEstimate(
        estimate=entropy / cells,
        exact=sys.prob.entropy(),
        box_side=box_side,
        cells=cells,
        samples=samples,
        distinct_blocks=int(counts.size),
        estimator=estimator,
    )
    logger.debug(f"Block entropy r={box_side}: {result.estimate:.6f} vs exact {result.exact:.6f}")
    return result
