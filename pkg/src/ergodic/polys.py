"""Exact integer polynomials and the d x m polynomial family.

Polynomials serialise as integer coefficient arrays, lowest power first.
Column j of a family is the vector polynomial (p_{1,j}, ..., p_{d,j}) whose
value at n is the orbit exponent of observable j.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

from ergodic.arith import check_int128
from ergodic.errors import DimensionMismatchError
from ergodic.lattice import GroupElement


@dataclass(frozen=True, slots=True)
class IntPoly:
    """
    Polynomial with integer coefficients, index = power of n, trailing zeros trimmed.

    Attributes:
        coefficients (tuple[int, ...]): c_0, c_1, ..., c_deg; empty for the zero polynomial.
    """

    coefficients: tuple[int, ...] = ()

    def __post_init__(self):
        coefficients = [int(c) for c in self.coefficients]
        while coefficients and coefficients[-1] == 0:
            coefficients.pop()
        object.__setattr__(self, "coefficients", tuple(coefficients))

    @classmethod
    def from_list(cls, coefficients: Iterable[int]) -> IntPoly:
        return cls(tuple(coefficients))

    @classmethod
    def monomial(cls, coefficient: int, power: int) -> IntPoly:
        return cls((0,) * power + (coefficient,))

    def to_list(self) -> list[int]:
        return list(self.coefficients)

    @property
    def degree(self) -> int:
        """Highest power with a nonzero coefficient; constants (the zero polynomial included) have degree 0."""
        return max(len(self.coefficients) - 1, 0)

    def is_zero(self) -> bool:
        return not self.coefficients

    def is_constant(self) -> bool:
        return len(self.coefficients) <= 1

    def constant_term(self) -> int:
        return self.coefficients[0] if self.coefficients else 0

    def leading_coefficient(self) -> int:
        return self.coefficients[-1] if self.coefficients else 0

    def without_constant(self) -> IntPoly:
        return IntPoly((0,) + self.coefficients[1:]) if self.coefficients else self

    def scale(self, factor: int) -> IntPoly:
        return IntPoly(tuple(factor * c for c in self.coefficients))

    def __add__(self, other: IntPoly) -> IntPoly:
        size = max(len(self.coefficients), len(other.coefficients))
        a = self.coefficients + (0,) * (size - len(self.coefficients))
        b = other.coefficients + (0,) * (size - len(other.coefficients))
        return IntPoly(tuple(x + y for x, y in zip(a, b)))

    def __neg__(self) -> IntPoly:
        return self.scale(-1)

    def __sub__(self, other: IntPoly) -> IntPoly:
        return self + (-other)

    def __call__(self, n: int) -> int:
        return self.eval(n)

    def eval(self, n: int) -> int:
        """
        Exact Horner evaluation with 128-bit overflow checks.

        Raises:
            ArithmeticOverflowError: If an intermediate or the result leaves the signed 128-bit range.
        """
        acc = 0
        for c in reversed(self.coefficients):
            acc = check_int128(acc * n + c, "polynomial value", poly=self.coefficients, n=n)
        return acc

    def eval_many(self, ns: Sequence[int]) -> list[int]:
        """Evaluates at every n; the result is checked once per value."""
        coefficients = self.coefficients[::-1]
        values = []
        for n in ns:
            acc = 0
            for c in coefficients:
                acc = acc * n + c
            values.append(check_int128(acc, "polynomial value", poly=self.coefficients, n=n))
        return values

    def cauchy_bound(self) -> int:
        """An integer R with every real root of the polynomial in (-R, R); 0 for constants."""
        if self.is_constant():
            return 0
        lead = abs(self.leading_coefficient())
        largest = max(abs(c) for c in self.coefficients[:-1])
        return 1 + -(-largest // lead)


@dataclass(frozen=True)
class PolynomialFamily:
    """
    The d x m matrix of integer polynomials p_{i,j}(n).

    Attributes:
        d (int): Ambient dimension.
        columns (tuple[tuple[IntPoly, ...], ...]): columns[j][i] = p_{i,j}.
        generator_assignment (tuple[int, ...] | None): 0-based generator g(j) per column
            for the single-generator form; column j then carries its polynomial in
            row g(j) only.
    """

    d: int
    columns: tuple[tuple[IntPoly, ...], ...]
    generator_assignment: tuple[int, ...] | None = field(default=None)

    def __post_init__(self):
        if self.d < 1:
            raise ValueError(f"d must be positive, got {self.d}")
        if not self.columns:
            raise ValueError("A family needs at least one column")
        for j, column in enumerate(self.columns):
            if len(column) != self.d:
                raise DimensionMismatchError(self.d, len(column), f"column {j}")
        if self.generator_assignment is not None:
            if len(self.generator_assignment) != self.m:
                raise DimensionMismatchError(self.m, len(self.generator_assignment), "generator assignment")
            for j, (column, g) in enumerate(zip(self.columns, self.generator_assignment)):
                if not 0 <= g < self.d:
                    raise ValueError(f"Generator {g} of column {j} is outside 0..{self.d - 1}")
                if any(not poly.is_zero() for i, poly in enumerate(column) if i != g):
                    raise ValueError(f"Column {j} has entries outside its generator row {g}")

    @classmethod
    def from_coefficients(
            cls,
            columns: Sequence[Sequence[Sequence[int]]],
            generator_assignment: Sequence[int] | None = None
    ) -> PolynomialFamily:
        """Builds a family from columns given as d coefficient arrays each."""
        built = tuple(tuple(IntPoly.from_list(entry) for entry in column) for column in columns)
        d = len(built[0]) if built else 0
        assignment = tuple(generator_assignment) if generator_assignment is not None else None
        return cls(d=d, columns=built, generator_assignment=assignment)

    @classmethod
    def single_generator(
            cls,
            d: int,
            polys: Sequence[IntPoly],
            assignment: Sequence[int]
    ) -> PolynomialFamily:
        """The form f_j(T_{g(j)}^{p_j(n)} x): column j is p_j placed in row g(j)."""
        columns = tuple(
            tuple(poly if i == g else IntPoly() for i in range(d))
            for poly, g in zip(polys, assignment)
        )
        return cls(d=d, columns=columns, generator_assignment=tuple(assignment))

    @property
    def m(self) -> int:
        return len(self.columns)

    def entry(self, i: int, j: int) -> IntPoly:
        return self.columns[j][i]

    def column(self, j: int) -> tuple[IntPoly, ...]:
        return self.columns[j]

    @property
    def max_degree(self) -> int:
        return max(poly.degree for column in self.columns for poly in column)

    def is_single_generator(self) -> bool:
        """True when every column moves along one generator (explicitly assigned or not)."""
        if self.generator_assignment is not None:
            return True
        return all(sum(not poly.is_zero() for poly in column) <= 1 for column in self.columns)

    def orbit_exponent(self, j: int, n: int) -> GroupElement:
        return orbit_exponent(self, j, n)

    def nondegeneracy(self) -> NondegeneracyReport:
        return check_nondegeneracy(self)

    def permuted(self, permutation: Sequence[int]) -> PolynomialFamily:
        """The family with columns reordered as `permutation` lists them."""
        assignment = None
        if self.generator_assignment is not None:
            assignment = tuple(self.generator_assignment[j] for j in permutation)
        return PolynomialFamily(
            d=self.d,
            columns=tuple(self.columns[j] for j in permutation),
            generator_assignment=assignment,
        )

    def to_json(self) -> dict:
        payload = {"columns": [[poly.to_list() for poly in column] for column in self.columns]}
        if self.generator_assignment is not None:
            payload["generator_assignment"] = list(self.generator_assignment)
        return payload


def orbit_exponent(fam: PolynomialFamily, j: int, n: int) -> GroupElement:
    """
    The exponent vector (p_{1,j}(n), ..., p_{d,j}(n)) of column j at n.

    Raises:
        IndexError: If j is not a column index.
        ArithmeticOverflowError: If a coordinate overflows.
    """
    if not 0 <= j < fam.m:
        raise IndexError(f"Column {j} outside 0..{fam.m - 1}")
    return GroupElement(tuple(poly.eval(n) for poly in fam.columns[j]))


def normalize_family(fam: PolynomialFamily) -> tuple[PolynomialFamily, tuple[GroupElement, ...]]:
    """
    Removes each column's constant term.

    Returns:
        tuple[PolynomialFamily, tuple[GroupElement, ...]]: The normalised family and the
        removed offsets o_j = (p_{1,j}(0), ..., p_{d,j}(0)); callers replace f_j by its
        translate f_j∘T^{o_j}.
    """
    columns = tuple(tuple(poly.without_constant() for poly in column) for column in fam.columns)
    offsets = tuple(GroupElement(tuple(poly.constant_term() for poly in column)) for column in fam.columns)
    normalized = PolynomialFamily(d=fam.d, columns=columns, generator_assignment=fam.generator_assignment)
    return normalized, offsets


@dataclass(frozen=True)
class NondegeneracyReport:
    """
    Which columns and pair differences are nonconstant.

    Attributes:
        columns_ok (tuple[bool, ...]): Per column, True if the vector polynomial is nonconstant.
        pairs_ok (dict[tuple[int, int], bool]): Per checked pair k < l, True if the
            difference is nonconstant.
        single_generator (bool): Whether only pairs sharing a generator were checked.
    """

    columns_ok: tuple[bool, ...]
    pairs_ok: dict[tuple[int, int], bool]
    single_generator: bool = False

    @property
    def passed(self) -> bool:
        return all(self.columns_ok) and all(self.pairs_ok.values())

    def failures(self) -> list[str]:
        messages = [f"column {j} is constant" for j, ok in enumerate(self.columns_ok) if not ok]
        messages += [f"columns {k},{l} differ by a constant" for (k, l), ok in self.pairs_ok.items() if not ok]
        return messages

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "columns_ok": list(self.columns_ok),
            "pairs_ok": [{"pair": [k, l], "ok": ok} for (k, l), ok in self.pairs_ok.items()],
            "single_generator": self.single_generator,
            "failures": self.failures(),
        }


def check_nondegeneracy(fam: PolynomialFamily) -> NondegeneracyReport:
    """
    Checks that every column and every (relevant) pair difference is nonconstant.

    In the single-generator form only pairs with g(k) = g(l) are checked.
    """
    columns_ok = tuple(any(not poly.is_constant() for poly in column) for column in fam.columns)
    pairs_ok: dict[tuple[int, int], bool] = {}
    assignment = fam.generator_assignment
    for k in range(fam.m):
        for l in range(k + 1, fam.m):
            if assignment is not None and assignment[k] != assignment[l]:
                continue
            difference = [a - b for a, b in zip(fam.columns[k], fam.columns[l])]
            pairs_ok[(k, l)] = any(not poly.is_constant() for poly in difference)
    return NondegeneracyReport(
        columns_ok=columns_ok,
        pairs_ok=pairs_ok,
        single_generator=assignment is not None,
    )
