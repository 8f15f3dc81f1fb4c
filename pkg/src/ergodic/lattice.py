"""Z^d group elements, the weighted algebraic past and its total order.

For positive integer weights A = (A_1, ..., A_d) the past is

    Phi = { n : the first nonzero partial sum t_k(n) = sum_{l=1}^{d-k} A_l n_l,
                scanning k = 0, 1, ..., d-1, is negative }

and g1 <_Phi g2 iff g1 - g2 lies in Phi. The group is abelian, so the left
translate g2^{-1} g1 is the difference g1 - g2.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from enum import Enum
from functools import cmp_to_key
from typing import TYPE_CHECKING, Iterable, Sequence

import numpy as np

from ergodic.arith import check_int128, checked_add, checked_mul
from ergodic.errors import (
    ArithmeticOverflowError,
    DimensionMismatchError,
    NondegenerateFamilyRequired,
    SizeGuardError,
)
from settings import config, get_logger

if TYPE_CHECKING:
    from ergodic.polys import IntPoly, PolynomialFamily

logger = get_logger(__name__)


@dataclass(frozen=True, slots=True)
class GroupElement:
    """
    A point of Z^d, read as T_1^{n_1} ... T_d^{n_d}.

    Attributes:
        coords (tuple[int, ...]): Exponents, each within the signed 128-bit range.
    """

    coords: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "coords", tuple(int(c) for c in self.coords))
        for c in self.coords:
            check_int128(c, "group element coordinate")

    @classmethod
    def of(cls, *coords: int) -> GroupElement:
        return cls(tuple(coords))

    @classmethod
    def zero(cls, d: int) -> GroupElement:
        return cls((0,) * d)

    @classmethod
    def basis(cls, d: int, i: int) -> GroupElement:
        """The basis vector e_i (0-based index)."""
        return cls(tuple(1 if k == i else 0 for k in range(d)))

    @property
    def dim(self) -> int:
        return len(self.coords)

    def is_zero(self) -> bool:
        return not any(self.coords)

    def _check_dim(self, other: GroupElement) -> None:
        if other.dim != self.dim:
            raise DimensionMismatchError(self.dim, other.dim, "group element")

    def __add__(self, other: GroupElement) -> GroupElement:
        self._check_dim(other)
        return GroupElement(tuple(checked_add(a, b, "group sum") for a, b in zip(self.coords, other.coords)))

    def __sub__(self, other: GroupElement) -> GroupElement:
        self._check_dim(other)
        return GroupElement(tuple(checked_add(a, -b, "group difference") for a, b in zip(self.coords, other.coords)))

    def __neg__(self) -> GroupElement:
        return GroupElement(tuple(-c for c in self.coords))

    def __iter__(self):
        return iter(self.coords)

    def __len__(self) -> int:
        return len(self.coords)

    def __getitem__(self, index: int) -> int:
        return self.coords[index]


@dataclass(frozen=True, slots=True)
class PastWeights:
    """
    Positive integer weights (A_1, ..., A_d) defining Phi and <_Phi.

    Attributes:
        weights (tuple[int, ...]): Strictly positive integers.
    """

    weights: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "weights", tuple(int(a) for a in self.weights))
        if not self.weights:
            raise ValueError("PastWeights needs at least one weight")
        if any(a < 1 for a in self.weights):
            raise ValueError(f"Every weight must be >= 1, got {self.weights}")

    @classmethod
    def geometric(cls, base: int, d: int) -> PastWeights:
        """The candidate (1, B, B^2, ..., B^{d-1})."""
        return cls(tuple(base ** i for i in range(d)))

    @property
    def dim(self) -> int:
        return len(self.weights)

    def partial_sums(self, g: GroupElement) -> list[int]:
        """
        Returns [t_0(g), ..., t_{d-1}(g)] with t_k = sum of the first d-k weighted coordinates.

        Raises:
            DimensionMismatchError: If dim(g) != d.
            ArithmeticOverflowError: If a partial sum leaves the 128-bit range.
        """
        if g.dim != self.dim:
            raise DimensionMismatchError(self.dim, g.dim, "group element")
        prefix = []
        running = 0
        for a, c in zip(self.weights, g.coords):
            running = checked_add(running, checked_mul(a, c, "weighted coordinate"), "partial sum")
            prefix.append(running)
        return prefix[::-1]


class OrderOutcome(Enum):
    """Result of comparing two group elements under <_Phi."""
    LESS = "less"
    EQUAL = "equal"
    GREATER = "greater"


def phi_contains(w: PastWeights, g: GroupElement) -> bool:
    """
    Tells whether g lies in the algebraic past Phi defined by w.

    Args:
        w (PastWeights): Weights A_1, ..., A_d.
        g (GroupElement): Element to test.

    Returns:
        bool: True iff the first nonzero partial sum t_k(g) is negative; False for g = 0.

    Raises:
        DimensionMismatchError: If dim(g) != dim(w).
        ArithmeticOverflowError: If a partial sum overflows.
    """
    for t in w.partial_sums(g):
        if t:
            return t < 0
    return False


def phi_compare(w: PastWeights, g1: GroupElement, g2: GroupElement) -> OrderOutcome:
    """
    Compares g1 and g2 under <_Phi: LESS iff g1 - g2 lies in Phi.

    Raises:
        DimensionMismatchError: If the dimensions differ.
        ArithmeticOverflowError: If the difference or a partial sum overflows.
    """
    if g1.dim != g2.dim:
        raise DimensionMismatchError(g1.dim, g2.dim, "compared element")
    if g1 == g2:
        return OrderOutcome.EQUAL
    return OrderOutcome.LESS if phi_contains(w, g1 - g2) else OrderOutcome.GREATER


def phi_less(w: PastWeights, g1: GroupElement, g2: GroupElement) -> bool:
    return phi_compare(w, g1, g2) is OrderOutcome.LESS


def phi_less_equal(w: PastWeights, g1: GroupElement, g2: GroupElement) -> bool:
    return phi_compare(w, g1, g2) is not OrderOutcome.GREATER


def phi_sort_key(w: PastWeights):
    """A `sorted` key ordering elements increasingly under <_Phi."""
    outcome_to_int = {OrderOutcome.LESS: -1, OrderOutcome.EQUAL: 0, OrderOutcome.GREATER: 1}
    return cmp_to_key(lambda a, b: outcome_to_int[phi_compare(w, a, b)])


def phi_min(w: PastWeights, elements: Iterable[GroupElement]) -> GroupElement:
    return min(elements, key=phi_sort_key(w))


def phi_max(w: PastWeights, elements: Iterable[GroupElement]) -> GroupElement:
    return max(elements, key=phi_sort_key(w))


@dataclass(frozen=True)
class Counterexample:
    """First violation found by the axiom verifier."""
    axiom: str
    elements: tuple[tuple[int, ...], ...]


@dataclass
class AxiomReport:
    """
    Outcome of the exhaustive axiom check on a box [-r, r]^d.

    Attributes:
        weights (tuple[int, ...]): Weights checked.
        box_radius (int): Radius r.
        box_points (int): (2r + 1)^d.
        past_size (int): |Phi ∩ box|.
        antisymmetry_violations (int): Nonzero g with both g and -g in Phi.
        totality_violations (int): Nonzero g with neither g nor -g in Phi.
        closure_pairs_checked (int): Pairs g, h in Phi ∩ box with g + h in the box.
        closure_violations (int): Such pairs with g + h outside Phi.
        first_counterexample (Counterexample | None): First violation, if any.
    """

    weights: tuple[int, ...]
    box_radius: int
    box_points: int = 0
    past_size: int = 0
    antisymmetry_violations: int = 0
    totality_violations: int = 0
    closure_pairs_checked: int = 0
    closure_violations: int = 0
    first_counterexample: Counterexample | None = None
    past_members: list[tuple[int, ...]] = field(default_factory=list, repr=False)

    @property
    def passed(self) -> bool:
        return not (self.antisymmetry_violations or self.totality_violations or self.closure_violations)

    def to_dict(self) -> dict:
        return {
            "weights": list(self.weights),
            "box_radius": self.box_radius,
            "box_points": self.box_points,
            "past_size": self.past_size,
            "antisymmetry_violations": self.antisymmetry_violations,
            "totality_violations": self.totality_violations,
            "closure_pairs_checked": self.closure_pairs_checked,
            "closure_violations": self.closure_violations,
            "counterexamples": self.antisymmetry_violations + self.totality_violations + self.closure_violations,
            "first_counterexample": None if self.first_counterexample is None else {
                "axiom": self.first_counterexample.axiom,
                "elements": [list(e) for e in self.first_counterexample.elements],
            },
            "passed": self.passed,
        }


def _contains_array(weights: Sequence[int], points: np.ndarray) -> np.ndarray:
    """Vectorised phi_contains on an (n, d) int64 array; callers guarantee no int64 overflow."""
    prefix = np.cumsum(points * np.asarray(weights, dtype=np.int64), axis=1)
    decided = np.zeros(len(points), dtype=bool)
    result = np.zeros(len(points), dtype=bool)
    for k in range(points.shape[1] - 1, -1, -1):
        t = prefix[:, k]
        fresh = ~decided & (t != 0)
        result[fresh] = t[fresh] < 0
        decided |= fresh
    return result


def verify_past_axioms(
        w: PastWeights,
        box_radius: int,
        max_box_points: int | None = None
) -> AxiomReport:
    """
    Exhaustively checks the three algebraic-past axioms on the box [-r, r]^d.

    Checks (a) no nonzero g has g and -g in Phi, (b) every nonzero g has g or -g
    in Phi, (c) Phi ∩ box is closed under sums that stay in the box.

    Args:
        w (PastWeights): Weights defining Phi.
        box_radius (int): Positive radius r.
        max_box_points (int | None): Cap on (2r + 1)^d, defaults to `config.max_box_points`.

    Returns:
        AxiomReport: Counts and the first counterexample, if any.

    Raises:
        SizeGuardError: If the box is larger than the cap.
        ArithmeticOverflowError: If weighted sums on the box could overflow.
    """
    if box_radius < 1:
        raise ValueError(f"box_radius must be positive, got {box_radius}")
    d = w.dim
    cap = max_box_points if max_box_points is not None else config.max_box_points
    box_points = (2 * box_radius + 1) ** d
    if box_points > cap:
        raise SizeGuardError("axiom box", box_points, cap)
    bound = sum(w.weights) * 2 * box_radius
    if bound >= 1 << 62:
        raise ArithmeticOverflowError("weighted sums on the box exceed int64", weights=w.weights, radius=box_radius)

    report = AxiomReport(weights=w.weights, box_radius=box_radius, box_points=box_points)
    axis = np.arange(-box_radius, box_radius + 1, dtype=np.int64)
    points = np.array(list(itertools.product(axis, repeat=d)), dtype=np.int64).reshape(-1, d)
    inside = _contains_array(w.weights, points)
    inverse_inside = _contains_array(w.weights, -points)
    nonzero = np.any(points != 0, axis=1)

    both = nonzero & inside & inverse_inside
    neither = nonzero & ~inside & ~inverse_inside
    report.antisymmetry_violations = int(both.sum())
    report.totality_violations = int(neither.sum())
    if report.antisymmetry_violations:
        g = points[np.argmax(both)]
        report.first_counterexample = Counterexample("antisymmetry", (tuple(int(c) for c in g),))
    elif report.totality_violations:
        g = points[np.argmax(neither)]
        report.first_counterexample = Counterexample("totality", (tuple(int(c) for c in g),))

    past = points[inside]
    report.past_size = len(past)
    report.past_members = [tuple(int(c) for c in g) for g in past]
    for g in past:
        sums = past + g
        in_box = np.all(np.abs(sums) <= box_radius, axis=1)
        checked = sums[in_box]
        report.closure_pairs_checked += len(checked)
        escaped = ~_contains_array(w.weights, checked)
        count = int(escaped.sum())
        if count:
            report.closure_violations += count
            if report.first_counterexample is None:
                h = checked[np.argmax(escaped)] - g
                report.first_counterexample = Counterexample(
                    "closure", (tuple(int(c) for c in g), tuple(int(c) for c in h))
                )

    logger.debug(f"Axiom check w={w.weights} r={box_radius}: passed={report.passed}")
    return report


@dataclass(frozen=True)
class WeightSelection:
    """
    Weights and thresholds chosen for a polynomial family.

    Attributes:
        weights (PastWeights): Selected A = (1, B, ..., B^{d-1}).
        base (int): The accepted B.
        n0 (int): Threshold of the column-degree condition (0 for polynomials).
        n1 (int): Threshold of the pair-degree condition (0 for polynomials).
        n2 (int): Least N_2 with columns strictly <_Phi-decreasing for all n > N_2,
            in permuted order.
        permutation (tuple[int, ...]): Original column indices listed from the
            <_Phi-largest column to the smallest.
        rejected (tuple[tuple[int, str], ...]): Rejected bases with the reason.
    """

    weights: PastWeights
    base: int
    n0: int
    n1: int
    n2: int
    permutation: tuple[int, ...]
    rejected: tuple[tuple[int, str], ...] = ()

    def to_dict(self) -> dict:
        return {
            "weights": list(self.weights.weights),
            "base": self.base,
            "N0": self.n0,
            "N1": self.n1,
            "N2": self.n2,
            "permutation": list(self.permutation),
            "rejected": [{"base": b, "reason": reason} for b, reason in self.rejected],
        }


def _weighted(polys: Sequence[IntPoly], weights: Sequence[int]) -> IntPoly:
    total = polys[0].scale(weights[0])
    for poly, a in zip(polys[1:], weights[1:]):
        total = total + poly.scale(a)
    return total


def _eventual_sign(poly: IntPoly) -> int:
    return 0 if poly.is_zero() else (1 if poly.leading_coefficient() > 0 else -1)


def select_weights(fam: PolynomialFamily) -> WeightSelection:
    """
    Chooses integer weights making every weighted column and pair difference nonconstant.

    Candidates A = (1, B, ..., B^{d-1}) are tried for B = 1, 2, 3, ...; every
    constraint is a nonzero polynomial in B, so it rejects at most d - 1 values
    and the search ends by B = 1 + (d - 1) * (number of constraints). Columns are
    then permuted so that they are strictly <_Phi-decreasing for large n, and N_2
    is found by exact comparison up to the Cauchy root bound of the weighted
    pairwise differences.

    Args:
        fam (PolynomialFamily): Family, normalised or not (constant terms are ignored
            by the degree conditions but kept for N_2).

    Returns:
        WeightSelection: Weights, thresholds and column permutation.

    Raises:
        NondegenerateFamilyRequired: If a column or a pair difference is constant.
    """
    report = fam.nondegeneracy()
    if not report.passed:
        raise NondegenerateFamilyRequired(report)

    d, m = fam.d, fam.m
    columns = [fam.column(j) for j in range(m)]
    differences = {
        (k, l): [a - b for a, b in zip(columns[k], columns[l])]
        for k in range(m) for l in range(k + 1, m)
    }
    max_base = 1 + max(d - 1, 0) * (m + len(differences)) + 1

    rejected: list[tuple[int, str]] = []
    for base in range(1, max_base + 1):
        weights = PastWeights.geometric(base, d)
        reason = None
        for j, column in enumerate(columns):
            if _weighted(column, weights.weights).is_constant():
                reason = f"weighted column {j} is constant"
                break
        if reason is None:
            for (k, l), diff in differences.items():
                if _weighted(diff, weights.weights).is_constant():
                    reason = f"weighted difference of columns {k},{l} is constant"
                    break
        if reason is None:
            break
        rejected.append((base, reason))
    else:
        # unreachable for nondegenerate families, see the counting argument above
        raise NondegenerateFamilyRequired(report)

    weighted_columns = [_weighted(column, weights.weights) for column in columns]

    def eventual_compare(k: int, l: int) -> int:
        return _eventual_sign(weighted_columns[k] - weighted_columns[l])

    permutation = tuple(sorted(range(m), key=cmp_to_key(lambda k, l: -eventual_compare(k, l))))

    root_bound = 0
    for (k, l) in differences:
        root_bound = max(root_bound, (weighted_columns[k] - weighted_columns[l]).cauchy_bound())
    if root_bound > config.max_orbit_n:
        raise SizeGuardError("N_2 scan", root_bound, config.max_orbit_n)

    n2 = 0
    for n in range(root_bound + 1):
        exponents = [fam.orbit_exponent(j, n) for j in permutation]
        if any(not phi_less(weights, exponents[i + 1], exponents[i]) for i in range(m - 1)):
            n2 = n

    logger.debug(f"Selected weights {weights.weights} (B={base}), N_2={n2}, permutation={permutation}")
    return WeightSelection(
        weights=weights,
        base=base,
        n0=0,
        n1=0,
        n2=n2,
        permutation=permutation,
        rejected=tuple(rejected),
    )
