from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ergodic.conditioning import (
    ExplicitSet,
    HalfSpaceSide,
    PastHalfSpace,
    condition_cylinder,
    condition_oracle,
    generated_half_space,
    l1_distance,
    martingale_tail,
)
from ergodic.errors import SizeGuardError
from ergodic.lattice import GroupElement, PastWeights
from ergodic.systems import CylinderObservable, ProbabilityVector
from settings import config

WINDOW = (GroupElement.of(0, 0), GroupElement.of(0, 1), GroupElement.of(1, -1))
BIASED = ProbabilityVector(("1/3", "2/3"))


def exact_table(values, a: int, rank: int) -> np.ndarray:
    table = np.empty(len(values), dtype=object)
    table[:] = [Fraction(v) for v in values]
    return table.reshape((a,) * rank)


tables = st.lists(st.integers(min_value=-5, max_value=5), min_size=8, max_size=8)
subsets = st.lists(st.booleans(), min_size=3, max_size=3)


@settings(max_examples=40, deadline=None)
@given(tables, subsets)
def test_product_formula_matches_enumeration(values, flags):
    f = CylinderObservable(WINDOW, exact_table(values, 2, 3), 2)
    kept = ExplicitSet.of(v for v, flag in zip(WINDOW, flags) if flag)
    fast = condition_cylinder(f, kept, BIASED)
    slow = condition_oracle(f, kept, BIASED)
    assert fast.exact and slow.exact
    assert fast.equals(slow)


@settings(max_examples=40, deadline=None)
@given(tables, st.integers(min_value=-3, max_value=3), st.integers(min_value=-3, max_value=3))
def test_half_space_conditioning_matches_enumeration(values, a, b):
    f = CylinderObservable(WINDOW, exact_table(values, 2, 3), 2)
    half_space = PastHalfSpace(PastWeights((1, 2)), GroupElement.of(a, b))
    for side in (half_space, half_space.complement()):
        assert condition_cylinder(f, side, BIASED).equals(condition_oracle(f, side, BIASED))


@settings(max_examples=40, deadline=None)
@given(tables)
def test_tower_property(values):
    f = CylinderObservable(WINDOW, exact_table(values, 2, 3), 2)
    larger = ExplicitSet.of(WINDOW[:2])
    smaller = ExplicitSet.of(WINDOW[:1])
    twice = condition_cylinder(condition_cylinder(f, larger, BIASED), smaller, BIASED)
    assert twice.equals(condition_cylinder(f, smaller, BIASED))
    assert condition_cylinder(f, ExplicitSet.of(()), BIASED).value_at(()) == f.integral(BIASED)


def test_conditioning_on_everything_is_identity():
    f = CylinderObservable(WINDOW, exact_table(range(8), 2, 3), 2)
    assert condition_cylinder(f, ExplicitSet.of(WINDOW), BIASED).equals(f)


def test_float_path_for_float_probabilities():
    f = CylinderObservable(WINDOW, exact_table(range(8), 2, 3), 2)
    prob = ProbabilityVector((0.25, 0.75))
    kept = ExplicitSet.of(WINDOW[1:])
    fast = condition_cylinder(f, kept, prob)
    assert not fast.exact
    assert fast.equals(condition_oracle(f, kept, prob), tolerance=1e-12)


def test_half_space_orientation():
    w = PastWeights((1, 2))
    upper = PastHalfSpace(w, GroupElement.of(0, 0))
    assert upper.contains(GroupElement.of(0, 0))
    assert upper.contains(GroupElement.of(0, 1))
    assert not upper.contains(GroupElement.of(1, -1))
    assert upper.complement().side is HalfSpaceSide.LOWER
    assert upper.shifted(GroupElement.of(2, 0)).anchor == GroupElement.of(2, 0)


def test_generated_half_space_starts_at_window_minimum():
    w = PastWeights((1, 2))
    windows = [[GroupElement.of(0, 0)], [GroupElement.of(0, 0), GroupElement.of(1, 0)]]
    half_space = generated_half_space(w, GroupElement.of(5, 5), windows)
    assert half_space.anchor == GroupElement.of(5, 5)
    windows = [[GroupElement.of(0, 1), GroupElement.of(2, 0)]]
    assert generated_half_space(w, GroupElement.of(5, 5), windows).anchor == GroupElement.of(5, 6)


def test_martingale_tail_reaches_the_integral():
    w = PastWeights((1,))
    window = [GroupElement.of(0), GroupElement.of(1), GroupElement.of(2)]
    f = CylinderObservable(window, exact_table([0, 1, 1, 2, 1, 2, 2, 3], 2, 3), 2)
    anchors = [GroupElement.of(k) for k in range(-2, 5)]
    terms = martingale_tail(f, w, anchors, BIASED)
    assert terms[0].equals(f)
    assert [len(t.window) for t in terms] == [3, 3, 3, 2, 1, 0, 0]
    assert terms[-1].value_at(()) == f.integral(BIASED) == Fraction(2)
    assert l1_distance(f, f, BIASED) == 0


def test_martingale_tail_needs_increasing_anchors():
    w = PastWeights((1,))
    f = CylinderObservable.indicator([GroupElement.of(0)], [1], 2)
    with pytest.raises(ValueError):
        martingale_tail(f, w, [GroupElement.of(1), GroupElement.of(1)], ProbabilityVector.uniform(2))


def test_l1_distance_to_the_mean():
    f = CylinderObservable.indicator([GroupElement.of(0)], [1], 2)
    prob = ProbabilityVector.uniform(2)
    mean = condition_cylinder(f, ExplicitSet.of(()), prob)
    assert l1_distance(f, mean, prob) == Fraction(1, 2)


def test_oracle_size_guard(monkeypatch):
    monkeypatch.setattr(config, "oracle_cap", 4)
    f = CylinderObservable(WINDOW, exact_table(range(8), 2, 3), 2)
    with pytest.raises(SizeGuardError):
        condition_oracle(f, ExplicitSet.of(()), BIASED)


W = PastWeights((1, 2))
points = st.tuples(st.integers(min_value=-3, max_value=3), st.integers(min_value=-3, max_value=3))


@st.composite
def cylinders(draw, max_window: int = 8) -> CylinderObservable:
    coords = draw(st.lists(points, min_size=1, max_size=max_window, unique=True))
    size = 2 ** len(coords)
    values = draw(st.lists(st.integers(min_value=-5, max_value=5), min_size=size, max_size=size))
    return CylinderObservable([GroupElement.of(*c) for c in coords], exact_table(values, 2, len(coords)), 2)


def half_spaces():
    return st.builds(lambda c: PastHalfSpace(W, GroupElement.of(*c)), points)


def sup_norm(f: CylinderObservable) -> Fraction:
    return max(abs(v) for v in f.table.flat)


@settings(max_examples=30, deadline=None)
@given(cylinders(), half_spaces())
def test_random_windows_match_enumeration(f, half_space):
    assert condition_cylinder(f, half_space, BIASED).equals(condition_oracle(f, half_space, BIASED))


@settings(max_examples=40, deadline=None)
@given(cylinders(), half_spaces())
def test_conditioning_keeps_the_mean_and_the_sup_bound(f, half_space):
    conditioned = condition_cylinder(f, half_space, BIASED)
    assert conditioned.integral(BIASED) == f.integral(BIASED)
    assert sup_norm(conditioned) <= sup_norm(f)


@settings(max_examples=40, deadline=None)
@given(cylinders(), half_spaces(), points)
def test_translate_then_condition(f, half_space, shift):
    g = GroupElement.of(*shift)
    moved = condition_cylinder(f.translate(g), half_space.shifted(g), BIASED)
    assert moved.equals(condition_cylinder(f, half_space, BIASED).translate(g))


@settings(max_examples=30, deadline=None)
@given(cylinders(), st.lists(st.integers(min_value=-10, max_value=10), min_size=2, max_size=8, unique=True))
def test_martingale_tail_moves_toward_the_mean(f, steps):
    anchors = [GroupElement.of(k, 0) for k in sorted(steps)]
    mean = CylinderObservable.constant(f.integral(BIASED), 2)
    distances = [l1_distance(term, mean, BIASED) for term in martingale_tail(f, W, anchors, BIASED)]
    assert all(a >= b for a, b in zip(distances, distances[1:]))
    assert all(isinstance(d, Fraction) for d in distances)
