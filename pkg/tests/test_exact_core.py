from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from src.exact_core import (
    A,
    LaurentPoly,
    SpacingScalar,
    StirlingTable,
    SecondKindRecurrence,
    factorial_to_monomial,
    falling_factorial,
    monomial_to_factorial,
    stirling1,
    stirling2,
)
from src.exceptions import DomainError, NotInvertibleError

X = LaurentPoly.coordinate()

fractions = st.fractions(min_value=-5, max_value=5, max_denominator=6)


@st.composite
def scalars(draw):
    terms = draw(
        st.dictionaries(
            st.tuples(st.integers(0, 1), st.tuples(st.integers(-3, 3))),
            fractions,
            max_size=3,
        )
    )
    return SpacingScalar(terms)


@st.composite
def polys(draw, max_degree=3):
    coefficients = draw(st.lists(scalars(), min_size=0, max_size=max_degree + 1))
    return LaurentPoly.from_coefficients(coefficients)


def test_stirling_second_kind_values():
    assert stirling2(4, 2) == 7
    assert stirling2(5, 5) == 1
    assert stirling2(3, 0) == 0
    assert stirling2(0, 0) == 1


def test_stirling_first_kind_is_signed():
    assert stirling1(2, 1) == -1
    assert stirling1(3, 2) == -3
    assert stirling1(3, 1) == 2


def test_stirling_table_rejects_rows_beyond_cap():
    table = StirlingTable(SecondKindRecurrence(), cap=64)
    assert table.value(64, 1) == 1
    with pytest.raises(DomainError):
        table.value(65, 1)
    with pytest.raises(DomainError):
        table.value(3, 4)


def test_imaginary_unit_squares_to_minus_one():
    i = SpacingScalar.imag()
    assert i * i == -1
    assert i.conjugate() == -i


def test_only_monomial_scalars_invert():
    assert (A ** 2).inverse() == A ** -2
    assert (A * 3).inverse() * A == Fraction(1, 3)
    with pytest.raises(NotInvertibleError):
        (A + 1).inverse()


def test_scalar_rendering():
    assert str(A ** 2 * -1 + Fraction(1, 2)) == "-a^2 + 1/2"
    assert str(SpacingScalar.symbol(1, 2)) == "a2^2"


def test_falling_factorial_expansion():
    assert falling_factorial(0) == 1
    assert falling_factorial(3) == X ** 3 - X ** 2 * (A * 3) + X * (A ** 2 * 2)
    assert falling_factorial(2, spacing=1) == X ** 2 - X


def test_monomial_to_factorial_of_square():
    assert monomial_to_factorial(X ** 2) == [0, A, 1]


def test_factorial_to_monomial_mixes_orders():
    p = factorial_to_monomial([0, 1, 0, 1])
    assert p == X ** 3 - X ** 2 * (A * 3) + X * (A ** 2 * 2 + 1)


def test_factorial_conversion_needs_axis_for_multivariate_input():
    xy = LaurentPoly.coordinate(0, 2) * LaurentPoly.coordinate(1, 2)
    with pytest.raises(DomainError):
        monomial_to_factorial(xy)
    assert monomial_to_factorial(LaurentPoly.coordinate(1, 2) ** 2, axis=1) == [0, A, 1]


def test_shift_and_derivative():
    p = X ** 3
    assert p.derivative() == X ** 2 * 3
    assert (X ** 2).shift(0, A) == X ** 2 + X * (A * 2) + A ** 2


def test_polynomial_rendering():
    assert str(X ** 3 - X * A ** 2) == "x^3 - a^2*x"
    assert str(LaurentPoly.zero()) == "0"


def test_evaluate_with_rational_spacing():
    p = falling_factorial(2)
    assert p.evaluate([3], [1]) == 6
    assert p.evaluate([Fraction(1, 2)], [Fraction(1, 2)]) == 0


@settings(max_examples=40, deadline=None)
@given(scalars(), scalars(), scalars())
def test_scalar_multiplication_distributes(x, y, z):
    assert x * (y + z) == x * y + x * z
    assert (x * y) * z == x * (y * z)


@settings(max_examples=40, deadline=None)
@given(scalars())
def test_scalar_json_and_conjugation(x):
    assert SpacingScalar.from_json(x.to_json()) == x
    assert (x * x.conjugate()).imag_part().is_zero()


@settings(max_examples=30, deadline=None)
@given(polys())
def test_factorial_basis_conversion_inverts(p):
    coefficients = monomial_to_factorial(p)
    assert factorial_to_monomial(coefficients) == p


@settings(max_examples=30, deadline=None)
@given(polys(), polys())
def test_polynomial_product_rule(p, q):
    assert (p * q).derivative() == p.derivative() * q + p * q.derivative()
