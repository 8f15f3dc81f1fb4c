import pytest
from hypothesis import given, strategies as st

from ergodic.errors import ArithmeticOverflowError, DimensionMismatchError
from ergodic.lattice import GroupElement
from ergodic.polys import IntPoly, PolynomialFamily, check_nondegeneracy, normalize_family, orbit_exponent

coefficients = st.lists(st.integers(min_value=-50, max_value=50), min_size=1, max_size=5)


def test_trailing_zeros_are_trimmed():
    p = IntPoly.from_list([1, 2, 0, 0])
    assert p.to_list() == [1, 2]
    assert p.degree == 1
    assert IntPoly.from_list([0, 0]).is_zero()
    assert IntPoly().degree == 0


def test_evaluation():
    p = IntPoly.from_list([3, 0, -2, 1])
    assert p(0) == 3
    assert p(2) == 3 - 8 + 8
    assert p.eval_many([-1, 0, 1, 2]) == [p(-1), p(0), p(1), p(2)]
    assert IntPoly.monomial(5, 3)(2) == 40


@given(coefficients, st.integers(min_value=-10 ** 6, max_value=10 ** 6))
def test_horner_matches_the_power_sum(a, n):
    p = IntPoly.from_list(a)
    naive = sum(c * n ** k for k, c in enumerate(a))
    assert p.eval(n) == naive
    assert p.eval_many([n, -n]) == [naive, p(-n)]


@given(coefficients, coefficients, st.integers(min_value=-10 ** 6, max_value=10 ** 6))
def test_arithmetic_matches_evaluation(a, b, n):
    p, q = IntPoly.from_list(a), IntPoly.from_list(b)
    assert (p + q)(n) == p(n) + q(n)
    assert (p - q)(n) == p(n) - q(n)
    assert p.scale(3)(n) == 3 * p(n)


@given(coefficients, st.integers(min_value=0, max_value=10 ** 4))
def test_no_integer_root_beyond_cauchy_bound(a, shift):
    p = IntPoly.from_list(a)
    if p.is_constant():
        return
    r = p.cauchy_bound()
    assert p(r + shift) != 0
    assert p(-r - shift) != 0


def test_overflow_raises():
    with pytest.raises(ArithmeticOverflowError):
        IntPoly.monomial(1, 2).eval(1 << 64)
    with pytest.raises(ArithmeticOverflowError):
        IntPoly.monomial(1, 1).eval_many([1, 1 << 127])
    assert IntPoly.monomial(1, 1).eval((1 << 127) - 1) == (1 << 127) - 1


def test_orbit_exponent(prop_family):
    assert orbit_exponent(prop_family, 0, 3) == GroupElement.of(27, 72)
    assert prop_family.orbit_exponent(1, -2) == GroupElement.of(4, -4)
    with pytest.raises(IndexError):
        orbit_exponent(prop_family, 2, 1)


def test_ragged_family_is_rejected():
    with pytest.raises(DimensionMismatchError):
        PolynomialFamily.from_coefficients([[[0, 1], [0, 2]], [[0, 1]]])


def test_nondegenerate_family_passes(prop_family):
    report = check_nondegeneracy(prop_family)
    assert report.passed
    assert report.failures() == []


def test_equal_columns_are_degenerate():
    family = PolynomialFamily.from_coefficients([[[0, 1], [0, 2]], [[5, 1], [0, 2]]])
    report = family.nondegeneracy()
    assert not report.passed
    assert report.columns_ok == (True, True)
    assert report.failures() == ["columns 0,1 differ by a constant"]


def test_constant_column_is_degenerate():
    report = PolynomialFamily.from_coefficients([[[4], [0, 1]], [[7], [-2]]]).nondegeneracy()
    assert report.columns_ok == (True, False)
    assert "column 1 is constant" in report.to_dict()["failures"]


def test_single_generator_checks_only_shared_generators():
    n = IntPoly.monomial(1, 1)
    distinct = PolynomialFamily.single_generator(2, [n, n], [0, 1])
    assert distinct.is_single_generator()
    assert distinct.nondegeneracy().passed
    assert distinct.nondegeneracy().pairs_ok == {}

    shared = PolynomialFamily.single_generator(2, [n, n + IntPoly((1,))], [0, 0])
    assert not shared.nondegeneracy().passed


def test_generator_assignment_must_match_rows():
    with pytest.raises(ValueError):
        PolynomialFamily.from_coefficients([[[0, 1], [0, 1]]], generator_assignment=[0])


def test_normalize_returns_offsets():
    family = PolynomialFamily.from_coefficients([[[3, 1], [0, 2]], [[-1, 0, 1], [2, 1]]])
    normalized, offsets = normalize_family(family)
    assert offsets == (GroupElement.of(3, 0), GroupElement.of(-1, 2))
    assert all(poly.constant_term() == 0 for column in normalized.columns for poly in column)
    for j in range(family.m):
        for n in range(-3, 4):
            assert normalized.orbit_exponent(j, n) + offsets[j] == family.orbit_exponent(j, n)


def test_permuted_and_json():
    family = PolynomialFamily.single_generator(2, [IntPoly((0, 1)), IntPoly((0, 0, 1))], [1, 0])
    swapped = family.permuted((1, 0))
    assert swapped.column(0) == family.column(1)
    assert swapped.generator_assignment == (0, 1)
    assert family.to_json() == {
        "columns": [[[], [0, 1]], [[0, 0, 1], []]],
        "generator_assignment": [1, 0],
    }
