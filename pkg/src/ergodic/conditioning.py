"""Exact conditional expectations of cylinder observables on Bernoulli shifts.

Under a product measure, conditioning a cylinder f on the coordinates in S
averages f over the coordinates of its window outside S. The result is again a
cylinder, on the window W ∩ S.

Half-space orientation: `PastHalfSpace(w, anchor, UPPER)` is {h : anchor ≤_Φ h}
and `LOWER` is its complement {h : h <_Φ anchor}. The algebra 𝒜_g of the
translates h·f_l with g ≤_Φ h lives on the coordinates

    { c : g + w_min ≤_Φ c },   w_min = <_Φ-minimum of the union of the windows,

so moving g up in <_Φ shrinks it (see `generated_half_space`).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Iterable, Protocol, Sequence, Union

import numpy as np

from ergodic.errors import DimensionMismatchError, SizeGuardError
from ergodic.lattice import GroupElement, PastWeights, phi_less, phi_less_equal, phi_min
from ergodic.systems import CylinderObservable, ProbabilityVector
from settings import config, get_logger

logger = get_logger(__name__)


class CoordSet(Protocol):
    """A set of lattice coordinates with exact membership."""

    def contains(self, v: GroupElement) -> bool: ...

    def shifted(self, g: GroupElement) -> CoordSet: ...


@dataclass(frozen=True)
class ExplicitSet:
    """A finite list of coordinates."""

    coords: frozenset[GroupElement]

    @classmethod
    def of(cls, coords: Iterable[GroupElement]) -> ExplicitSet:
        return cls(frozenset(coords))

    def contains(self, v: GroupElement) -> bool:
        return v in self.coords

    def shifted(self, g: GroupElement) -> ExplicitSet:
        return ExplicitSet(frozenset(v + g for v in self.coords))


class HalfSpaceSide(Enum):
    """Which side of the anchor a half-space keeps."""
    UPPER = "upper"
    LOWER = "lower"


@dataclass(frozen=True)
class PastHalfSpace:
    """
    {h : anchor ≤_Φ h} (UPPER) or {h : h <_Φ anchor} (LOWER).

    Attributes:
        weights (PastWeights): Weights defining <_Φ.
        anchor (GroupElement): Boundary element, included on the UPPER side.
        side (HalfSpaceSide): Kept side.
    """

    weights: PastWeights
    anchor: GroupElement
    side: HalfSpaceSide = HalfSpaceSide.UPPER

    def __post_init__(self):
        if self.weights.dim != self.anchor.dim:
            raise DimensionMismatchError(self.weights.dim, self.anchor.dim, "half-space anchor")

    def contains(self, v: GroupElement) -> bool:
        upper = phi_less_equal(self.weights, self.anchor, v)
        return upper if self.side is HalfSpaceSide.UPPER else not upper

    def shifted(self, g: GroupElement) -> PastHalfSpace:
        """S + g; by translation invariance of <_Φ only the anchor moves."""
        return PastHalfSpace(self.weights, self.anchor + g, self.side)

    def complement(self) -> PastHalfSpace:
        other = HalfSpaceSide.LOWER if self.side is HalfSpaceSide.UPPER else HalfSpaceSide.UPPER
        return PastHalfSpace(self.weights, self.anchor, other)


CoordinateSet = Union[ExplicitSet, PastHalfSpace]


def generated_half_space(
        w: PastWeights,
        g: GroupElement,
        windows: Iterable[Sequence[GroupElement]]
) -> PastHalfSpace:
    """
    Coordinates carrying 𝒜_g, the σ-algebra of all h·f_l with g ≤_Φ h.

    Args:
        w (PastWeights): Weights defining <_Φ.
        g (GroupElement): Lower end of the translates.
        windows (Iterable[Sequence[GroupElement]]): Windows of the observables f_l.

    Returns:
        PastHalfSpace: {c : g + w_min ≤_Φ c}.
    """
    coordinates = [v for window in windows for v in window]
    if not coordinates:
        return PastHalfSpace(w, g)
    return PastHalfSpace(w, g + phi_min(w, coordinates))


def _restricted_excluded(f: CylinderObservable, S: CoordinateSet) -> list[bool]:
    return [S.contains(v) for v in f.window]


def _exact_enough(f: CylinderObservable, prob: ProbabilityVector) -> bool:
    return f.exact and prob.exact and f.table.size <= config.rational_table_cap


def condition_cylinder(f: CylinderObservable, S: CoordinateSet, prob: ProbabilityVector) -> CylinderObservable:
    """
    E(f | σ(coordinates in S)) under the product measure with symbol law `prob`.

    The table stays rational when `prob` and the table are rational and the table
    has at most `rational_table_cap` entries; otherwise it is float64.

    Raises:
        SizeGuardError: If a^{|W \\ S|} exceeds `table_cap`.
    """
    keep = _restricted_excluded(f, S)
    excluded = len(keep) - sum(keep)
    size = prob.size ** excluded
    if size > config.table_cap:
        raise SizeGuardError("conditioning sum", size, config.table_cap)
    source = f if _exact_enough(f, prob) else f.to_float()
    return source.marginalize(keep, prob)


def condition_oracle(f: CylinderObservable, S: CoordinateSet, prob: ProbabilityVector) -> CylinderObservable:
    """
    The same conditional expectation by full enumeration of alphabet^W.

    Every assignment is grouped by its restriction to W ∩ S and the group value is
    Σ μ(assignment) f / Σ μ(assignment). Groups of measure zero fall back to the
    law of the excluded coordinates alone.

    Raises:
        SizeGuardError: If a^{|W|} exceeds `oracle_cap`.
    """
    a = prob.size
    size = a ** len(f.window)
    if size > config.oracle_cap:
        raise SizeGuardError("oracle enumeration", size, config.oracle_cap)
    keep = _restricted_excluded(f, S)
    kept_window = tuple(v for v, flag in zip(f.window, keep) if flag)
    exact = _exact_enough(f, prob)
    p = list(prob.values) if exact else [float(v) for v in prob.values]
    zero = Fraction(0) if exact else 0.0

    numerators: dict[tuple[int, ...], object] = {}
    denominators: dict[tuple[int, ...], object] = {}
    fallback: dict[tuple[int, ...], object] = {}
    for assignment in itertools.product(range(a), repeat=len(f.window)):
        value = f.table[assignment] if f.window else f.table.item()
        value = value if exact else float(value)
        measure = zero + 1
        excluded_measure = zero + 1
        for symbol, flag in zip(assignment, keep):
            measure *= p[symbol]
            if not flag:
                excluded_measure *= p[symbol]
        key = tuple(symbol for symbol, flag in zip(assignment, keep) if flag)
        numerators[key] = numerators.get(key, zero) + measure * value
        denominators[key] = denominators.get(key, zero) + measure
        fallback[key] = fallback.get(key, zero) + excluded_measure * value

    table = np.empty((a,) * len(kept_window), dtype=object if exact else np.float64)
    for key in numerators:
        denominator = denominators[key]
        value = numerators[key] / denominator if denominator else fallback[key]
        if kept_window:
            table[key] = value
        else:
            table[()] = value
    return CylinderObservable(kept_window, table, a)


def martingale_tail(
        f: CylinderObservable,
        w: PastWeights,
        g_sequence: Sequence[GroupElement],
        prob: ProbabilityVector
) -> list[CylinderObservable]:
    """
    E(f | 𝒜_{g_k}) for anchors moving up in <_Φ, with 𝒜_{g_k} on {h : g_k ≤_Φ h}.

    The half-spaces shrink along the sequence; once one excludes the whole window
    every later term is the constant ∫f dμ.

    Raises:
        ValueError: If the anchors are not strictly <_Φ-increasing.
    """
    for previous, current in zip(g_sequence, g_sequence[1:]):
        if not phi_less(w, previous, current):
            raise ValueError(f"Anchors must be strictly increasing in <_Φ: {previous.coords} then {current.coords}")
    terms = [condition_cylinder(f, PastHalfSpace(w, g), prob) for g in g_sequence]
    logger.debug(f"Martingale tail over {len(terms)} anchors, final window size {len(terms[-1].window) if terms else 0}")
    return terms


def l1_distance(f: CylinderObservable, h: CylinderObservable, prob: ProbabilityVector) -> Fraction | float:
    """‖f − h‖₁ under the product measure; exact when both tables and `prob` are."""
    difference = f - h
    absolute = CylinderObservable(difference.window, np.abs(difference.table), difference.alphabet_size)
    return absolute.integral(prob)
