import logging
from fractions import Fraction
from typing import List

import pandas as pd
import sympy

from zenml import step

from src.exact_core import LaurentPoly, SpacingScalar, monomial_basis, monomial_to_factorial
from src.exceptions import DomainError
from src.operator_algebra import (
    finite_field_rep,
    make_delta,
    rodrigues_xhat,
    symmetric_xhat,
)
from src.umbral_engine import (
    PolySequence,
    basic_sequence,
    hermite_cross_check,
    map_equation,
    oscillator_continuum,
    oscillator_operator_string,
    sheffer_expand,
    sheffer_sequence,
    star_product,
)
from steps.artifact_writer import StepResult, reports_domain_errors

_A_SYMBOL = sympy.Symbol("a", positive=True)
_X_SYMBOL = sympy.Symbol("x")


def parse_spacing(text: str) -> SpacingScalar:
    """
    Reads a spacing given as 'a', a positive rational such as '1/2', or 'c*a^k'.

    Parameters:
    text (str): The spacing as typed on the command line.

    Returns:
    SpacingScalar: Symbolic or numeric spacing.
    """
    try:
        expr = sympy.nsimplify(sympy.sympify(text, locals={"a": _A_SYMBOL}), rational=True)
    except (sympy.SympifyError, TypeError) as e:
        raise DomainError(f"Cannot read spacing '{text}': {e}")
    coefficient, power = expr.as_coeff_exponent(_A_SYMBOL)
    if not (coefficient.is_Rational and power.is_Integer) or sympy.simplify(expr - coefficient * _A_SYMBOL ** power) != 0:
        raise DomainError(f"Spacing must be c*a^k with rational c, got '{text}'.")
    if coefficient <= 0 or power < 0:
        raise DomainError(f"Spacing must be positive, got '{text}'.")
    value = Fraction(int(coefficient.p), int(coefficient.q))
    if power == 0:
        return SpacingScalar.const(value)
    return SpacingScalar.symbol(0, int(power), value)


def parse_rational(text: str, name: str) -> Fraction:
    try:
        return Fraction(str(text))
    except (ValueError, ZeroDivisionError) as e:
        raise DomainError(f"{name} must be rational, got '{text}': {e}")


def parse_polynomial(text: str) -> LaurentPoly:
    """Reads a univariate polynomial in x with rational coefficients, e.g. 'x^2 - 3/2*x + 1'."""
    try:
        expr = sympy.sympify(text.replace("^", "**"), locals={"x": _X_SYMBOL})
        poly = sympy.Poly(expr, _X_SYMBOL)
    except (sympy.SympifyError, sympy.PolynomialError, TypeError) as e:
        raise DomainError(f"Cannot read polynomial '{text}': {e}")
    coefficients = []
    for c in reversed(poly.all_coeffs()):
        c = sympy.nsimplify(c, rational=True)
        if not c.is_Rational:
            raise DomainError(f"Polynomial coefficients must be rational, got {c}.")
        coefficients.append(Fraction(int(c.p), int(c.q)))
    return LaurentPoly.from_coefficients(coefficients)


def render_factorial(coefficients: List[SpacingScalar]) -> str:
    pieces = []
    for k, coef in enumerate(coefficients):
        if coef.is_zero():
            continue
        pieces.append(f"({coef})*x^({k})" if k else f"({coef})")
    return " + ".join(pieces) if pieces else "0"


def _sequence_table(seq: PolySequence, spacing: SpacingScalar) -> pd.DataFrame:
    rows = []
    for k, q in enumerate(seq.polynomials()):
        rows.append({"k": k, "monomial": str(q), "factorial": render_factorial(monomial_to_factorial(q, spacing=spacing))})
    return pd.DataFrame(rows)


def _sequence_step(flavor: str, delta: str, spacing: str, kmax: int) -> StepResult:
    h = parse_spacing(spacing)
    q_op = make_delta(delta, h)
    seq = basic_sequence(q_op, kmax) if flavor == "basic" else sheffer_sequence(q_op, kmax)
    checks = seq.check_invariants()
    payload = {
        "sequence": seq.label,
        "polynomials": [str(q) for q in seq.polynomials()],
        "exact": [q.to_json() for q in seq.polynomials()],
        "checks": checks,
    }
    if flavor == "sheffer":
        basic = basic_sequence(q_op, kmax)
        payload["expansion"] = {n: [str(c) for c in sheffer_expand(seq, basic, n)] for n in range(kmax + 1)}
    logging.info(f"{seq.label}: invariants {checks}")
    return StepResult({"sequence": _sequence_table(seq, h)}, payload, {"invariants_hold": all(checks.values())})


@step(enable_cache=False)
@reports_domain_errors
def basic_seq_step(delta: str = "central", spacing: str = "a", kmax: int = 5) -> StepResult:
    """Basic sequence q_0..q_kmax of a delta operator, in monomial and factorial form."""
    return _sequence_step("basic", delta, spacing, kmax)


@step(enable_cache=False)
@reports_domain_errors
def sheffer_seq_step(delta: str = "central", spacing: str = "a", kmax: int = 5) -> StepResult:
    """Sheffer sequence from the symmetric position operator, with its expansion in the basic sequence."""
    return _sequence_step("sheffer", delta, spacing, kmax)


@step(enable_cache=False)
@reports_domain_errors
def star_step(f: str, g: str, delta: str = "forward", spacing: str = "a") -> StepResult:
    """Star product of two polynomials together with the umbral algebra checks on them."""
    h = parse_spacing(spacing)
    left, right = parse_polynomial(f), parse_polynomial(g)
    seq = basic_sequence(make_delta(delta, h), left.degree + right.degree + 1)
    product = star_product(left, right, seq)
    q_op = seq.delta
    leibniz = q_op.apply(product) == star_product(q_op.apply(left), right, seq) + star_product(left, q_op.apply(right), seq)
    commutative = product == star_product(right, left, seq)
    unit = star_product(left, LaurentPoly.one(), seq) == left
    payload = {"f": str(left), "g": str(right), "product": str(product), "exact": product.to_json()}
    residuals = {"leibniz": leibniz, "commutative": commutative, "unit": unit}
    return StepResult({}, payload, residuals)


@step(enable_cache=False)
@reports_domain_errors
def map_equation_step(delta: str = "forward", recipe: str = "rodrigues", spacing: str = "a", order: int = 12) -> StepResult:
    """Umbral image of the oscillator Hamiltonian -1/2 d^2/dy^2 + 1/2 y^2."""
    h = parse_spacing(spacing)
    q_op = make_delta(delta, h)
    if recipe == "rodrigues":
        xhat = rodrigues_xhat(q_op, order=order)
    elif recipe == "symmetric":
        xhat = symmetric_xhat(q_op, order=order)
    else:
        raise DomainError(f"Unknown position recipe: {recipe}")
    image = map_equation(oscillator_continuum(), [(q_op, xhat)])
    payload = {"continuum": str(oscillator_continuum()), "lattice": str(image), "exact": image.to_json()}
    residuals = {}
    if delta == "central" and recipe == "symmetric":
        report = oscillator_operator_string(h, order)
        payload["operator_string"] = str(report.string_operator)
        residuals["operator_string_equal"] = report.equal
    # H~ applied to test monomials, as exact polynomials
    rows = [{"input": str(p), "image": str(image.apply(p))} for p in monomial_basis(1, min(4, image.order or 4))]
    return StepResult({"images": pd.DataFrame(rows)}, payload, residuals)


@step(enable_cache=False)
@reports_domain_errors
def hermite_step(n: int = 4, delta: str = "forward", spacing: str = "a") -> StepResult:
    """Discrete Hermite polynomials from the umbral transform and the generating-function extraction."""
    h = parse_spacing(spacing)
    seq = basic_sequence(make_delta(delta, h), n)
    rows, matches = [], []
    for m in range(n + 1):
        report = hermite_cross_check(m, seq)
        matches.append(report.matches)
        rows.append(
            {
                "n": m,
                "discrete_hermite": str(report.transform),
                "extraction": str(report.extraction),
                "missing_from_k1_sum": str(report.missing_term),
            }
        )
    return StepResult({"hermite": pd.DataFrame(rows)}, {"sequence": seq.label}, {"all_match": all(matches)})


@step(enable_cache=False)
@reports_domain_errors
def ff_rep_step(p: int = 3) -> StepResult:
    """Matrices of x, Q and x_hat over Z_p with the commutator check."""
    rep = finite_field_rep(p)
    payload = {
        "p": p,
        "x": rep.x,
        "Q": rep.Q,
        "Q_prime": rep.Q_prime,
        "Q_prime_inverse": rep.Q_prime_inverse,
        "xhat": rep.xhat,
        "commutator_Q_xhat": rep.commutator(rep.Q, rep.xhat),
        "commutator_Q_x": rep.raw_commutator(),
    }
    rows = [{"row": r, "col": c, "xhat": int(rep.xhat[r, c])} for r in range(p) for c in range(p)]
    return StepResult({"xhat": pd.DataFrame(rows)}, payload, {"ccr_holds": rep.ccr_holds()})

