import math
from fractions import Fraction

import numpy as np
import pytest

from ergodic.averaging import AverageSeries, CheckpointSchedule, SeriesRow
from ergodic.diagnostics import (
    Verdict,
    block_entropy,
    convergence_report,
    decreasing_to_zero,
    k_limit_check,
    limit_target,
    reduction_gap,
    tail_oscillations,
    tail_start,
)
from ergodic.errors import (
    HypothesisUnmetError,
    IncompatibleObservableError,
    InsufficientCheckpointsError,
    SizeGuardError,
)
from ergodic.lattice import GroupElement
from ergodic.polys import PolynomialFamily
from ergodic.systems import (
    BernoulliShiftSystem,
    BoxIndicator,
    Character,
    ConstantObservable,
    CylinderObservable,
    ProbabilityVector,
    ProductObservable,
    ProductSystem,
    TorusRotationSystem,
)

HALF = 1 << 63
GOLDEN = 0x9E3779B97F4A7C15


def series_of(*rows: tuple[float, ...], checkpoints=(10, 100, 1000, 10000)) -> AverageSeries:
    return AverageSeries(CheckpointSchedule(checkpoints), [SeriesRow(s, row) for s, row in enumerate(rows)])


def k_limit_observables():
    return [
        CylinderObservable.indicator([GroupElement.of(0, 0)], [1], 2),
        CylinderObservable.indicator([GroupElement.of(0, 0), GroupElement.of(0, 1)], [1, 1], 2),
    ]


def test_tail_oscillations():
    assert tail_oscillations([1.0, 3.0, 2.0, 2.0]) == [2.0, 1.0, 0.0, 0.0]
    assert tail_oscillations([]) == []


@pytest.mark.parametrize("count, start", [(4, 2), (5, 2), (6, 3), (7, 3), (10, 5)])
def test_verdict_window(count, start):
    assert tail_start(count) == start


def test_convergence_verdicts():
    report = convergence_report(series_of((0.9, 0.51, 0.5, 0.505), (0.0, 1.0, 0.0, 1.0)), eps=0.01)
    settled, wild = report.samples
    assert settled.verdict == Verdict.CONVERGING
    assert settled.tail_oscillation == pytest.approx(0.005)
    assert wild.verdict == Verdict.INCONCLUSIVE
    assert report.converging_fraction == 0.5
    assert report.mean == pytest.approx((0.505 + 1.0) / 2)
    assert report.median_oscillations[-1] == 0.0


@pytest.mark.parametrize("values, expected", [
    ([0.3, 0.2, 0.1, 0.0], True),
    ([0.3, 0.1, 0.0, 0.0], True),
    ([0.0, 0.0, 0.0], True),
    ([0.5], True),
    ([0.3, 0.3, 0.1, 0.0], False),
    ([1.0, 1 / 3, 1 / 3, 0.0], False),
])
def test_decreasing_to_zero(values, expected):
    assert decreasing_to_zero(values) is expected


def test_median_oscillation_plateau():
    report = convergence_report(series_of((1.0, 0.0, 0.5, 0.0), (1.0, 0.0, 0.5, 0.0)), eps=0.01)
    assert report.median_oscillations == (1.0, 0.5, 0.5, 0.0)
    assert not report.median_oscillation_decreasing
    assert report.to_dict()["median_oscillation_decreasing"] is False
    settled = convergence_report(series_of((0.9, 0.51, 0.5, 0.505)), eps=0.01)
    assert settled.median_oscillation_decreasing


def test_convergence_needs_four_checkpoints():
    with pytest.raises(InsufficientCheckpointsError):
        convergence_report(series_of((1.0, 1.0, 1.0), checkpoints=(1, 2, 3)), eps=0.01)


def test_k_limit_target(bernoulli_2d, prop_family):
    observables = k_limit_observables()
    assert limit_target(observables, bernoulli_2d) == Fraction(1, 8)
    report = convergence_report(series_of((0.2, 0.13, 0.126, 0.125), (0.1, 0.12, 0.124, 0.124)), eps=0.01)
    result = k_limit_check(report, observables, bernoulli_2d, prop_family)
    assert result.passed
    assert result.to_dict()["target_exact"] == "1/8"
    assert result.fraction_within == 1.0


def test_k_limit_misses_a_wrong_limit(bernoulli_2d, prop_family):
    report = convergence_report(series_of((0.3, 0.3, 0.3, 0.3)), eps=0.01)
    result = k_limit_check(report, k_limit_observables(), bernoulli_2d, prop_family)
    assert not result.passed
    assert result.mean_deviation == pytest.approx(0.175)


def test_k_limit_refuses_degenerate_family(bernoulli_2d):
    family = PolynomialFamily.from_coefficients([[[0, 1], [0, 2]], [[0, 1], [0, 2]]])
    report = convergence_report(series_of((0.125,) * 4), eps=0.01)
    with pytest.raises(HypothesisUnmetError):
        k_limit_check(report, k_limit_observables(), bernoulli_2d, family)


def test_k_limit_refuses_non_k_systems(golden_rotation, linear_family):
    report = convergence_report(series_of((0.5,) * 4), eps=0.01)
    with pytest.raises(HypothesisUnmetError):
        k_limit_check(report, [BoxIndicator((0,), (HALF,))], golden_rotation, linear_family)


def product_system() -> ProductSystem:
    return ProductSystem(
        BernoulliShiftSystem(1, ProbabilityVector.uniform(2), 5),
        TorusRotationSystem(1, 1, ((GOLDEN,),), 6),
    )


def test_gap_vanishes_for_torus_only_observables(linear_family):
    observables = [ProductObservable(ConstantObservable(1), Character((1,)))]
    gap = reduction_gap(product_system(), observables, linear_family, CheckpointSchedule((10, 100, 1000)), samples=4)
    assert np.all(gap.gaps == 0.0)
    assert gap.fraction_below(0.05) == 1.0
    assert gap.median_decreasing()
    assert gap.as_series().metadata == {"quantity": "reduction_gap"}


def test_gap_shrinks_for_bernoulli_factor(linear_family):
    u = CylinderObservable([GroupElement.of(0)], np.array([-1.0, 1.0]), 2)
    observables = [ProductObservable(u, BoxIndicator((0,), (HALF,)))]
    gap = reduction_gap(product_system(), observables, linear_family, CheckpointSchedule((10, 100000)), samples=16)
    assert gap.gaps.shape == (16, 2)
    assert gap.fraction_below(0.05) == 1.0
    assert gap.to_dict(0.05)["fraction_below_threshold"] == 1.0


def test_gap_needs_a_product_system(bernoulli_1d, linear_family):
    with pytest.raises(IncompatibleObservableError):
        reduction_gap(bernoulli_1d, [ConstantObservable(1)], linear_family, CheckpointSchedule((10,)), samples=1)


def test_entropy_of_degenerate_law_is_zero():
    system = BernoulliShiftSystem(2, ProbabilityVector(("1", "0")), 1)
    estimate = block_entropy(system, box_side=2, samples=100, estimator="miller_madow")
    assert estimate.estimate == 0.0
    assert estimate.deviation == 0.0
    assert estimate.distinct_blocks == 1


def test_entropy_of_fair_coin(bernoulli_1d):
    estimate = block_entropy(bernoulli_1d, box_side=4, samples=5000)
    assert estimate.exact == pytest.approx(math.log(2))
    assert estimate.deviation < 0.02
    assert estimate.cells == 4


def test_entropy_guards(bernoulli_2d, golden_rotation):
    with pytest.raises(SizeGuardError):
        block_entropy(bernoulli_2d, box_side=5, samples=10)
    with pytest.raises(ValueError):
        block_entropy(bernoulli_2d, box_side=2, samples=10, estimator="jackknife")
    with pytest.raises(IncompatibleObservableError):
        block_entropy(golden_rotation, box_side=2, samples=10)
