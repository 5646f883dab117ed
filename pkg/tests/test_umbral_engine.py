from fractions import Fraction
from functools import lru_cache
from math import comb

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from src.exact_core import A, LaurentPoly, falling_factorial
from src.exceptions import DomainError
from src.operator_algebra import (
    DeltaOperatorFactory,
    MultiSeries,
    NormalOrderedOp,
    commutator,
    invert_series,
    make_delta,
    pincherle,
    rodrigues_xhat,
    symmetric_xhat,
)
from src.umbral_engine import (
    basic_sequence,
    discrete_hermite,
    eval_newton,
    exp_coefficients,
    expand_in_sequence,
    gaussian_coefficients,
    hermite_cross_check,
    ho_forward_solution,
    map_equation,
    newton_map,
    oscillator_continuum,
    oscillator_operator_string,
    sheffer_expand,
    sheffer_sequence,
    star_product,
    umbral_transform,
)

X = LaurentPoly.coordinate()


@pytest.mark.parametrize("kind", ["derivative", "forward", "backward", "central", "laguerre"])
def test_basic_sequences_satisfy_their_invariants(kind):
    seq = basic_sequence(make_delta(kind), 5)
    assert all(seq.check_invariants().values())
    assert seq.label == f"basic[{kind}]"


def test_basic_sequence_shapes():
    assert basic_sequence(make_delta("derivative"), 4)[4] == X ** 4
    forward = basic_sequence(make_delta("forward"), 4)
    assert all(forward[k] == falling_factorial(k) for k in range(5))
    assert basic_sequence(make_delta("central"), 3)[3] == X ** 3 - X * A ** 2
    assert basic_sequence(make_delta("laguerre"), 2)[1] == -X


def test_sequence_index_out_of_range():
    seq = basic_sequence(make_delta("forward"), 2)
    with pytest.raises(DomainError):
        seq[3]


def test_sheffer_sequences():
    forward = sheffer_sequence(make_delta("forward"), 3)
    assert forward[1] == X - A / 2
    assert forward[2] == (X - A / 2) * (X - A * Fraction(3, 2))
    central = sheffer_sequence(make_delta("central"), 3)
    assert central[2] == X ** 2 - A ** 2 / 2
    assert all(central.check_invariants().values())


def test_sheffer_expansion_in_basic_sequence():
    q = make_delta("central")
    coefficients = sheffer_expand(sheffer_sequence(q, 4), basic_sequence(q, 4), 2)
    assert coefficients == [1, 0, -A ** 2 / 2]


def test_umbral_transform():
    forward = basic_sequence(make_delta("forward"), 4)
    assert umbral_transform(X ** 2, forward) == X ** 2 - X * A
    assert umbral_transform(LaurentPoly.one(), forward) == 1
    central = sheffer_sequence(make_delta("central"), 4)
    assert umbral_transform(X ** 2, central) == X ** 2 - A ** 2 / 2


def test_expansion_recovers_coefficients():
    seq = basic_sequence(make_delta("forward"), 4)
    assert expand_in_sequence(X ** 2, seq) == [0, A, 1]


def test_star_product_of_coordinates():
    seq = basic_sequence(make_delta("forward"), 4)
    assert star_product(X, X, seq) == X ** 2 - X * A
    with pytest.raises(DomainError):
        star_product(X ** 3, X ** 2, seq)


small_polys = st.lists(st.integers(-3, 3), min_size=1, max_size=3).map(LaurentPoly.from_coefficients)


@settings(max_examples=25, deadline=None)
@given(small_polys, small_polys, small_polys)
def test_star_product_is_commutative_and_associative(f, g, h):
    seq = basic_sequence(make_delta("forward"), 6)
    assert star_product(f, g, seq) == star_product(g, f, seq)
    assert star_product(star_product(f, g, seq), h, seq) == star_product(f, star_product(g, h, seq), seq)


def test_map_equation_sends_derivative_to_delta():
    q = make_delta("forward")
    xhat = rodrigues_xhat(q, order=10)
    image = map_equation(NormalOrderedOp.derivative(), [(q, xhat)])
    assert image.equals(NormalOrderedOp.from_shift_invariant(q, order=10))


def test_map_equation_of_oscillator_acts_as_difference_equation():
    q = make_delta("forward")
    image = map_equation(oscillator_continuum(), [(q, rodrigues_xhat(q, order=10))])
    p = X ** 3
    expected = (-q.apply(q.apply(p)) + X * (X - A) * p.shift(0, -2 * A)) * Fraction(1, 2)
    assert image.apply(p) == expected


def test_map_equation_preserves_dilation_commutator():
    q = make_delta("central")
    xhat = rodrigues_xhat(q, order=10)
    dilation = map_equation(NormalOrderedOp.coordinate() * NormalOrderedOp.derivative(), [(q, xhat)])
    delta = NormalOrderedOp.from_shift_invariant(q, order=10)
    assert (delta * dilation - dilation * delta).equals(delta, 8)


def test_oscillator_operator_string_matches_symmetric_form():
    report = oscillator_operator_string(A, order=10)
    assert report.equal


def test_gregory_newton_coefficients_of_square():
    series = newton_map([0, 0, 1], spacing=A)
    assert series.basis == "gregory_newton"
    assert series.coefficients == (0, A, 1)


def test_newton_map_needs_enough_input():
    with pytest.raises(DomainError):
        newton_map([1, 1], k_max=3)
    with pytest.raises(DomainError):
        newton_map([1, 1], basis="lagrange")


def test_newton_series_terminates_on_the_lattice():
    series = newton_map(exp_coefficients(Fraction(1, 2), 10), spacing=Fraction(1), basis="umbral")
    evaluation = eval_newton(series, Fraction(3))
    assert evaluation.verdict == "terminating"
    assert evaluation.value == Fraction(27, 8)


def test_newton_series_diverges_off_the_lattice():
    series = newton_map(exp_coefficients(Fraction(2), 50), spacing=Fraction(1), basis="umbral")
    evaluation = eval_newton(series, Fraction(1, 2))
    assert evaluation.verdict == "diverging"


def test_gaussian_coefficients():
    assert gaussian_coefficients(4) == [1, 0, Fraction(-1, 2), 0, Fraction(1, 8)]


def test_forward_oscillator_ground_state():
    report = ho_forward_solution(20)
    assert report.values[0] == 1
    assert all(r == 0 for r in report.residuals.values())
    assert report.divergence_index is not None
    assert all(r == 0 for r in report.extension_residuals)
    assert report.free_parameters == ("psi(-a)", "psi(-2a)")


def test_discrete_hermite_polynomials():
    seq = basic_sequence(make_delta("forward"), 4)
    assert discrete_hermite(1, seq) == X * 2
    assert discrete_hermite(2, seq) == X * (X - A) * 4 - 2


@pytest.mark.parametrize("n", [2, 3, 4])
def test_hermite_generating_function_cross_check(n):
    seq = basic_sequence(make_delta("forward"), 4)
    report = hermite_cross_check(n, seq)
    assert report.matches
    assert report.missing_term == seq[n] * 2 ** n


KINDS = DeltaOperatorFactory.kinds()
kinds = st.sampled_from(KINDS)


@lru_cache(maxsize=None)
def basic(kind):
    return basic_sequence(make_delta(kind), 12)


def product_of_factors(offsets):
    result = LaurentPoly.one()
    for offset in offsets:
        result = result * (X + A * offset)
    return result


@pytest.mark.parametrize("kind", KINDS)
def test_basic_sequences_are_of_binomial_type(kind):
    seq = basic(kind)
    total = LaurentPoly.coordinate(0, 2) + LaurentPoly.coordinate(1, 2)
    for k in range(9):
        expected = LaurentPoly.zero(2)
        for l in range(k + 1):
            expected = expected + seq[l].embed(2, [0]) * seq[k - l].embed(2, [1]) * comb(k, l)
        assert seq[k].compose([total]) == expected


degree_six_polys = st.lists(st.integers(-3, 3), min_size=1, max_size=7).map(LaurentPoly.from_coefficients)


@settings(max_examples=20, deadline=None)
@given(kinds, degree_six_polys, degree_six_polys)
def test_delta_is_a_derivation_of_the_star_product(kind, f, g):
    seq = basic(kind)
    q = seq.delta
    product_rule = star_product(q.apply(f), g, seq) + star_product(f, q.apply(g), seq)
    assert q.apply(star_product(f, g, seq)) == product_rule


def test_central_basic_sequence_closed_forms():
    seq = basic("central")
    qp_inverse = invert_series(pincherle(seq.delta))
    for k in range(9):
        closed = LaurentPoly.one() if k == 0 else X * product_of_factors(k - 2 * n for n in range(1, k))
        assert seq[k] == closed
        image = product_of_factors(k + 1 - 2 * n for n in range(1, k + 1))
        assert qp_inverse.apply(seq[k]) == image
        assert X * image == seq[k + 1]


def finite_operator(entries):
    op = NormalOrderedOp.zero()
    for power, d_power, coef in entries:
        op = op + NormalOrderedOp({(power,): MultiSeries({(d_power,): coef}, 1)}, 1)
    return op


continuum_operators = st.lists(
    st.tuples(st.integers(0, 3), st.integers(0, 3), st.integers(-2, 2)), min_size=1, max_size=2
).map(finite_operator)


@settings(max_examples=15, deadline=None)
@given(kinds, st.sampled_from([rodrigues_xhat, symmetric_xhat]), continuum_operators, continuum_operators)
def test_map_equation_is_a_homomorphism(kind, recipe, left, right):
    q = make_delta(kind)
    images = [(q, recipe(q, order=12))]
    image_of_bracket = map_equation(commutator(left, right), images)
    bracket_of_images = commutator(map_equation(left, images), map_equation(right, images))
    assert image_of_bracket.equals(bracket_of_images)


@pytest.mark.parametrize("n", range(21))
def test_newton_exponential_on_lattice_points(n):
    a, k = Fraction(1, 3), Fraction(3, 2)
    series = newton_map(exp_coefficients(k, 24), spacing=a, basis="umbral")
    evaluation = eval_newton(series, n * a)
    assert evaluation.verdict == "terminating"
    assert evaluation.value == (1 + k * a) ** n
