from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from src.exact_core import A, LaurentPoly
from src.exceptions import DomainError, NotInvertibleError, TruncationError
from src.operator_algebra import (
    DeltaOperatorFactory,
    MultiSeries,
    NormalOrderedOp,
    ShiftInvariantOp,
    commutator,
    derivative_op,
    finite_field_rep,
    identity_op,
    invert_series,
    make_delta,
    pincherle,
    rodrigues_xhat,
    shift_op,
    symmetric_xhat,
)

X = LaurentPoly.coordinate()


def test_delta_series_coefficients():
    assert make_delta("forward").coefficients(3) == [0, 1, A / 2, A ** 2 / 6]
    assert make_delta("central").coefficients(3) == [0, 1, 0, A ** 2 / 6]
    assert make_delta("backward").coefficients(2) == [0, 1, -A / 2]
    assert make_delta("laguerre").coefficients(3) == [0, -1, -1, -1]


def test_factory_kinds_and_unknown_kind():
    assert DeltaOperatorFactory.kinds() == ["derivative", "forward", "backward", "central", "laguerre"]
    with pytest.raises(DomainError):
        make_delta("symmetric")


def test_spacing_must_be_positive_monomial():
    with pytest.raises(DomainError):
        make_delta("forward", A + 1)
    with pytest.raises(DomainError):
        make_delta("central", -A)
    assert make_delta("forward", Fraction(1, 2)).apply(X ** 2) == X * 2 + Fraction(1, 2)


def test_shift_operator_moves_argument():
    assert shift_op(A).apply(X ** 2) == X ** 2 + X * (A * 2) + A ** 2
    assert shift_op(0).equals(identity_op(), 5)


def test_pincherle_derivatives():
    assert pincherle(make_delta("forward")).equals(shift_op(A), 8)
    cosh = (shift_op(A) + shift_op(-A)).scale(Fraction(1, 2))
    assert pincherle(make_delta("central")).equals(cosh, 8)
    assert pincherle(make_delta("laguerre")).coefficients(4) == [-1, -2, -3, -4, -5]
    assert pincherle(derivative_op()).equals(identity_op(), 4)


def test_series_inverse():
    assert invert_series(pincherle(make_delta("forward"))).equals(shift_op(-A), 8)
    with pytest.raises(NotInvertibleError):
        invert_series(make_delta("forward"))


def test_delta_action_on_polynomials():
    assert make_delta("forward").apply(X ** 2) == X * 2 + A
    assert make_delta("central").apply(X ** 3) == X ** 2 * 3 + A ** 2
    assert make_delta("forward").apply(LaurentPoly.one()) == 0


def test_series_rendering():
    assert make_delta("forward").render_series(2) == "D + (1/2*a)*D^2 + O(D^3)"
    assert derivative_op().render_series(3) == "D"


def test_continuum_commutator_is_identity():
    result = commutator(NormalOrderedOp.derivative(), NormalOrderedOp.coordinate())
    assert result.equals(NormalOrderedOp.identity())


@pytest.mark.parametrize("kind", ["forward", "backward", "central", "laguerre"])
def test_rodrigues_position_is_canonical(kind):
    q = make_delta(kind)
    xhat = rodrigues_xhat(q, order=8)
    assert commutator(q, xhat, order=8).equals(NormalOrderedOp.identity())


def test_symmetric_position_for_central_difference():
    q = make_delta("central")
    xhat = symmetric_xhat(q, order=8)
    assert commutator(q, xhat, order=8).equals(NormalOrderedOp.identity())
    assert (xhat * xhat).apply(LaurentPoly.one()) == X ** 2 - A ** 2 / 2


def test_forward_rodrigues_position_is_x_times_back_shift():
    xhat = rodrigues_xhat(make_delta("forward"), order=8)
    expected = NormalOrderedOp.coordinate() * NormalOrderedOp.from_shift_invariant(shift_op(-A), order=8)
    assert xhat.equals(expected)


def test_truncated_operator_refuses_high_degree():
    xhat = rodrigues_xhat(make_delta("forward"), order=4)
    with pytest.raises(TruncationError):
        xhat.apply(X ** 6)


@pytest.mark.parametrize("p", [2, 3, 5, 7])
def test_finite_field_commutation(p):
    rep = finite_field_rep(p)
    assert rep.ccr_holds()
    assert np.array_equal(rep.raw_commutator(), rep.Q)


def test_finite_field_needs_prime():
    with pytest.raises(DomainError):
        finite_field_rep(4)


coefficient_lists = st.lists(st.integers(-4, 4), min_size=1, max_size=5)


@settings(max_examples=30, deadline=None)
@given(coefficient_lists)
def test_forward_difference_matches_stencil(coefficients):
    p = LaurentPoly.from_coefficients(coefficients)
    expected = (p.shift(0, A) - p) * A.inverse()
    assert make_delta("forward").apply(p) == expected


@settings(max_examples=30, deadline=None)
@given(coefficient_lists)
def test_central_difference_matches_stencil(coefficients):
    p = LaurentPoly.from_coefficients(coefficients)
    expected = (p.shift(0, A) - p.shift(0, -A)) * (A.inverse() / 2)
    assert make_delta("central").apply(p) == expected


KINDS = DeltaOperatorFactory.kinds()
kinds = st.sampled_from(KINDS)


def finite_series(coefficients):
    return ShiftInvariantOp(lambda m, _: coefficients[m], "f", len(coefficients) - 1)


def normal_ordered(entries):
    op = NormalOrderedOp.zero()
    for power, d_power, coef in entries:
        op = op + NormalOrderedOp({(power,): MultiSeries({(d_power,): coef}, 1)}, 1)
    return op


small_operators = st.lists(
    st.tuples(st.integers(0, 3), st.integers(0, 4), st.integers(-2, 2)), min_size=1, max_size=3
).map(normal_ordered)


@pytest.mark.parametrize("kind", KINDS)
@pytest.mark.parametrize("recipe", [rodrigues_xhat, symmetric_xhat])
def test_position_recipes_are_canonical_for_every_kind(kind, recipe):
    q = make_delta(kind)
    bracket = commutator(q, recipe(q, order=14), order=14)
    identity = NormalOrderedOp.identity()
    assert bracket.equals(identity)
    assert bracket.agrees_on(identity, [X ** d for d in range(11)])


def test_central_second_pincherle_derivative():
    q = make_delta("central")
    assert pincherle(pincherle(q)).equals(q.scale(A ** 2), 12)
    assert not pincherle(pincherle(make_delta("forward"))).equals(make_delta("forward").scale(A ** 2), 12)


@settings(max_examples=25, deadline=None)
@given(kinds, coefficient_lists, coefficient_lists)
def test_pincherle_is_a_derivation(kind, left, right):
    first = make_delta(kind) * finite_series(left)
    second = finite_series(right) * shift_op(A)
    product_rule = pincherle(first) * second + first * pincherle(second)
    assert pincherle(first * second).equals(product_rule, 10)


@settings(max_examples=30, deadline=None)
@given(kinds, coefficient_lists, st.sampled_from([A, -A, A * 3, Fraction(1, 2), Fraction(-2)]))
def test_delta_operators_commute_with_shifts(kind, coefficients, amount):
    q = make_delta(kind)
    p = LaurentPoly.from_coefficients(coefficients)
    assert q.apply(p.shift(0, amount)) == q.apply(p).shift(0, amount)


@settings(max_examples=25, deadline=None)
@given(small_operators, small_operators, small_operators)
def test_commutator_is_antisymmetric_and_satisfies_jacobi(a, b, c):
    assert (commutator(a, b) + commutator(b, a)).is_zero()
    jacobi = commutator(a, commutator(b, c)) + commutator(b, commutator(c, a)) + commutator(c, commutator(a, b))
    assert jacobi.is_zero()
