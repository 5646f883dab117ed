import logging
import threading
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb, factorial
from typing import Dict, List, Optional, Sequence, Tuple, Union

from src.config import load_config
from src.exact_core import A, LaurentPoly, ScalarLike, SpacingScalar, monomial_to_factorial, stirling2
from src.exceptions import DomainError, UmbralError
from src.operator_algebra import (
    NormalOrderedOp,
    ShiftInvariantOp,
    invert_series,
    make_delta,
    pincherle,
    rodrigues_xhat,
    symmetric_xhat,
)

# Setup logging configuration
logging.basicConfig(level=logging.INFO, format="%(asctime)s - %(levelname)s - %(message)s")

Number = Union[Fraction, float, SpacingScalar]


class PolySequence:
    """
    The family q_k = xhat^k 1, grown on demand up to ``k_max``.

    Parameters:
    delta (ShiftInvariantOp): The delta operator Q with Q q_k = k q_(k-1).
    xhat (NormalOrderedOp): The position operator generating the family.
    flavor (str): 'basic' or 'sheffer'.
    k_max (int): Largest index served.
    """

    def __init__(self, delta: ShiftInvariantOp, xhat: NormalOrderedOp, flavor: str, k_max: int):
        self.delta = delta
        self.xhat = xhat
        self.flavor = flavor
        self.k_max = k_max
        self._cache: List[LaurentPoly] = [LaurentPoly.one(xhat.dim)]
        self._lock = threading.Lock()

    @property
    def label(self) -> str:
        return f"{self.flavor}[{self.delta.label}]"

    def __getitem__(self, k: int) -> LaurentPoly:
        if k < 0 or k > self.k_max:
            logging.error(f"Sequence index {k} outside 0..{self.k_max}.")
            raise DomainError(f"Sequence {self.label} holds indices 0..{self.k_max}, got {k}.")
        if k >= len(self._cache):
            with self._lock:
                while len(self._cache) <= k:
                    self._cache.append(self.xhat.apply(self._cache[-1]))
        return self._cache[k]

    def __len__(self) -> int:
        return self.k_max + 1

    def polynomials(self, upto: Optional[int] = None) -> List[LaurentPoly]:
        return [self[k] for k in range((self.k_max if upto is None else upto) + 1)]

    def check_invariants(self, upto: Optional[int] = None) -> Dict[str, bool]:
        """Exact checks of q_0 = 1, Q q_k = k q_(k-1) and, for basic flavor, q_k(0) = 0."""
        upto = self.k_max if upto is None else upto
        polys = self.polynomials(upto)
        report = {
            "unit": polys[0] == LaurentPoly.one(),
            "lowering": all(self.delta.apply(polys[k]) == polys[k - 1] * k for k in range(1, upto + 1)),
            "degrees": all(polys[k].degree == k for k in range(upto + 1)),
        }
        if self.flavor == "basic":
            report["vanishing_at_origin"] = all(polys[k].constant_term().is_zero() for k in range(1, upto + 1))
        return report


# Abstract Base Class for position operator recipes
class PositionRecipe(ABC):
    flavor: str

    @abstractmethod
    def build(self, delta: ShiftInvariantOp, order: int) -> NormalOrderedOp:
        """
        Builds the position operator paired with a delta operator.

        Parameters:
        delta (ShiftInvariantOp): The delta operator.
        order (int): Exact D-order the operator must carry.

        Returns:
        NormalOrderedOp: The position operator.
        """
        pass


# Concrete Strategy for x Q'^-1 (basic sequences)
class RodriguesRecipe(PositionRecipe):
    flavor = "basic"

    def build(self, delta: ShiftInvariantOp, order: int) -> NormalOrderedOp:
        return rodrigues_xhat(delta, order=order)


# Concrete Strategy for (x Q'^-1 + Q'^-1 x)/2 (Sheffer sequences)
class SymmetricRecipe(PositionRecipe):
    flavor = "sheffer"

    def build(self, delta: ShiftInvariantOp, order: int) -> NormalOrderedOp:
        return symmetric_xhat(delta, order=order)


# Context Class for building polynomial sequences
class SequenceBuilder:
    def __init__(self, recipe: PositionRecipe):
        """
        Initializes the builder with a position operator recipe.

        Parameters:
        recipe (PositionRecipe): Recipe used to build xhat.
        """
        self._recipe = recipe

    def set_strategy(self, recipe: PositionRecipe):
        logging.info("Switching position operator recipe.")
        self._recipe = recipe

    def build(self, delta: ShiftInvariantOp, k_max: int) -> PolySequence:
        if not delta.is_delta():
            logging.error(f"{delta.label} is not a delta operator.")
            raise DomainError(f"{delta.label} is not a delta operator.")
        if k_max < 0:
            raise DomainError(f"k_max must be non-negative, got {k_max}.")
        logging.info(f"Building {self._recipe.flavor} sequence for {delta.label} up to k = {k_max}.")
        xhat = self._recipe.build(delta, k_max + 2)
        return PolySequence(delta, xhat, self._recipe.flavor, k_max)


def basic_sequence(delta: ShiftInvariantOp, k_max: int) -> PolySequence:
    return SequenceBuilder(RodriguesRecipe()).build(delta, k_max)


def sheffer_sequence(delta: ShiftInvariantOp, k_max: int) -> PolySequence:
    return SequenceBuilder(SymmetricRecipe()).build(delta, k_max)


def sheffer_expand(s: PolySequence, q: PolySequence, n: int) -> List[SpacingScalar]:
    """
    Coefficients C(n, k) s_k(0) with s_n = sum_k C(n, k) s_k(0) q_(n-k), verified exactly.

    Parameters:
    s (PolySequence): The Sheffer sequence.
    q (PolySequence): The basic sequence of the same delta operator.
    n (int): Index to expand.

    Returns:
    List[SpacingScalar]: Entry k multiplies q_(n-k).
    """
    if not s.delta.equals(q.delta, n + 2):
        logging.error(f"Sequences built on different delta operators: {s.delta.label} vs {q.delta.label}.")
        raise DomainError("Sheffer expansion needs both sequences on the same delta operator.")
    coefficients = [s[k].constant_term() * comb(n, k) for k in range(n + 1)]
    rebuilt = LaurentPoly.zero()
    for k, coef in enumerate(coefficients):
        rebuilt = rebuilt + q[n - k] * coef
    if rebuilt != s[n]:
        logging.error(f"Sheffer expansion of s_{n} failed.")
        raise UmbralError(f"Expansion of s_{n} in the basic sequence does not reproduce s_{n}.")
    return coefficients


def _as_sequences(seqs: Union[PolySequence, Sequence[PolySequence]], dim: int) -> List[PolySequence]:
    if isinstance(seqs, PolySequence):
        seqs = [seqs] * dim
    if len(seqs) != dim:
        raise DomainError(f"Need {dim} sequences, got {len(seqs)}.")
    return list(seqs)


def umbral_transform(f: LaurentPoly, seqs: Union[PolySequence, Sequence[PolySequence]]) -> LaurentPoly:
    """f(xhat) 1: every x_i^k becomes the k-th polynomial of the i-th sequence."""
    sequences = _as_sequences(seqs, f.dim)
    result = LaurentPoly.zero(f.dim)
    for exponent, coef in f.items():
        term = LaurentPoly.constant(coef, f.dim)
        for axis, power in enumerate(exponent):
            if power:
                term = term * sequences[axis][power].embed(f.dim, [axis])
        result = result + term
    return result


def expand_in_sequence(p: LaurentPoly, seq: PolySequence) -> List[SpacingScalar]:
    """Coefficients c_k with p = sum_k c_k q_k, by back substitution from the top degree."""
    remaining = p
    degree = p.degree_in(0)
    if degree > seq.k_max:
        raise DomainError(f"Degree {degree} exceeds the sequence length {seq.k_max}.")
    coefficients = [SpacingScalar.zero() for _ in range(degree + 1)]
    for d in range(degree, -1, -1):
        lead = remaining.coefficient((d,))
        if lead.is_zero():
            continue
        coef = lead / seq[d].coefficient((d,))
        coefficients[d] = coef
        remaining = remaining - seq[d] * coef
    if not remaining.is_zero():
        raise UmbralError(f"Polynomial {p} is not in the span of {seq.label}.")
    return coefficients


def star_product(f: LaurentPoly, h: LaurentPoly, seq: PolySequence) -> LaurentPoly:
    """The product with q_k * q_l = q_(k+l)."""
    left = expand_in_sequence(f, seq)
    right = expand_in_sequence(h, seq)
    if len(left) + len(right) - 2 > seq.k_max:
        raise DomainError(f"Star product needs q_{len(left) + len(right) - 2}; sequence stops at {seq.k_max}.")
    result = LaurentPoly.zero()
    for k, c in enumerate(left):
        if c.is_zero():
            continue
        for l, d in enumerate(right):
            if not d.is_zero():
                result = result + seq[k + l] * (c * d)
    return result


def map_equation(
    continuum: NormalOrderedOp,
    images: Sequence[Tuple[ShiftInvariantOp, NormalOrderedOp]],
) -> NormalOrderedOp:
    """
    Substitutes y_i -> xhat_i and d/dy_i -> Q_i in a normal-ordered continuum operator.

    Parameters:
    continuum (NormalOrderedOp): Finite operator in (y, d/dy).
    images (Sequence[Tuple[ShiftInvariantOp, NormalOrderedOp]]): (Q_i, xhat_i) per dimension.

    Returns:
    NormalOrderedOp: The lattice image, renormal-ordered.
    """
    dim = continuum.dim
    if not continuum.is_finite():
        logging.error("Continuum operator passed to map_equation carries a truncated series.")
        raise DomainError("map_equation needs a continuum operator with finite D-polynomials.")
    if len(images) != dim:
        raise DomainError(f"Need {dim} (Q, xhat) pairs, got {len(images)}.")
    xhats = [xhat for _, xhat in images]
    order = min((xh.order for xh in xhats if xh.order is not None), default=None)
    deltas = [NormalOrderedOp.from_shift_invariant(q, axis, dim, order) for axis, (q, _) in enumerate(images)]
    xhat_powers: List[Dict[int, NormalOrderedOp]] = [{0: NormalOrderedOp.identity(dim)} for _ in range(dim)]
    delta_powers: List[Dict[int, NormalOrderedOp]] = [{0: NormalOrderedOp.identity(dim)} for _ in range(dim)]

    def power(cache: Dict[int, NormalOrderedOp], base: NormalOrderedOp, k: int) -> NormalOrderedOp:
        if k not in cache:
            cache[k] = power(cache, base, k - 1) * base
        return cache[k]

    result = NormalOrderedOp.zero(dim)
    for m, series in continuum.items():
        left = NormalOrderedOp.identity(dim)
        for axis, k in enumerate(m):
            if k:
                left = left * power(xhat_powers[axis], xhats[axis], k)
        right = NormalOrderedOp.zero(dim)
        for exponent, coef in series.items():
            factor = NormalOrderedOp.scalar(coef, dim)
            for axis, k in enumerate(exponent):
                if k:
                    factor = factor * power(delta_powers[axis], deltas[axis], k)
            right = right + factor
        result = result + left * right
    logging.info(f"Mapped a {dim}-dimensional continuum operator to the lattice.")
    return result


def oscillator_continuum() -> NormalOrderedOp:
    """-1/2 d^2/dy^2 + 1/2 y^2."""
    y = NormalOrderedOp.coordinate()
    d = NormalOrderedOp.derivative()
    return (d * d).scale(Fraction(-1, 2)) + (y * y).scale(Fraction(1, 2))


@dataclass(frozen=True)
class OscillatorStringReport:
    string_operator: NormalOrderedOp
    symmetric_operator: NormalOrderedOp
    equal: bool


def oscillator_operator_string(spacing: ScalarLike = A, order: Optional[int] = None) -> OscillatorStringReport:
    """
    Compares 1/2[-Q^2 + P^2 (x^2 - a^2/2) + 2a^2 P^3 Q x + 5/4 a^4 P^4 Q^2], P = Q'^-1,
    with 1/2(-Q^2 + xhat^2) for the central delta and the symmetric xhat.
    """
    cfg = load_config().operators
    order = order if order is not None else cfg.default_order
    spacing = SpacingScalar.coerce(spacing)
    delta = make_delta("central", spacing)
    q = NormalOrderedOp.from_shift_invariant(delta, order=order)
    p = NormalOrderedOp.from_shift_invariant(invert_series(pincherle(delta)), order=order)
    x = NormalOrderedOp.coordinate()
    a2 = spacing ** 2
    string_op = (
        -(q * q)
        + p * p * (x * x - NormalOrderedOp.scalar(a2 * Fraction(1, 2)))
        + (p * p * p * q * x).scale(a2 * 2)
        + (p * p * p * p * q * q).scale(a2 * a2 * Fraction(5, 4))
    ).scale(Fraction(1, 2))
    xhat = symmetric_xhat(delta, order=order)
    symmetric_op = (-(q * q) + xhat * xhat).scale(Fraction(1, 2))
    equal = string_op.equals(symmetric_op)
    logging.info(f"Oscillator operator string equals the symmetric form: {equal}")
    return OscillatorStringReport(string_op, symmetric_op, equal)


# Newton series
# -------------
@dataclass(frozen=True)
class NewtonSeries:
    coefficients: Tuple[Number, ...]
    spacing: Number
    source: str
    basis: str


@dataclass(frozen=True)
class NewtonEvaluation:
    value: Union[Fraction, float]
    verdict: str
    ratio_estimate: Optional[float]
    partial_sums: Tuple[Union[Fraction, float], ...]
    magnitudes: Tuple[float, ...]


def exp_coefficients(k, order: int) -> List:
    """Taylor coefficients k^n/n! of exp(k y)."""
    return [k ** n / factorial(n) if isinstance(k, float) else Fraction(k) ** n / factorial(n) for n in range(order + 1)]


def gaussian_coefficients(order: int) -> List[Fraction]:
    """Taylor coefficients of exp(-y^2/2)."""
    return [
        Fraction((-1) ** (n // 2), 2 ** (n // 2) * factorial(n // 2)) if n % 2 == 0 else Fraction(0)
        for n in range(order + 1)
    ]


def newton_map(
    f_coeffs: Sequence[Number],
    spacing: Number = A,
    k_max: Optional[int] = None,
    basis: str = "gregory_newton",
    guard: int = 0,
    source: str = "power series",
) -> NewtonSeries:
    """
    Factorial-basis coefficients F_k of a power series sum_n f_n y^n.

    Parameters:
    f_coeffs (Sequence[Number]): Taylor coefficients f_0, f_1, ...
    spacing (Number): Lattice spacing, symbolic or numeric.
    k_max (Optional[int]): Highest F_k wanted; defaults to len(f_coeffs) - 1 - guard.
    basis (str): 'gregory_newton' re-expands with F_k = sum_m f_(k+m) S(k+m, k) a^m;
        'umbral' maps y^k -> x^(k), so F_k = f_k.
    guard (int): Extra input orders required beyond k_max.

    Returns:
    NewtonSeries: The coefficients F_0 .. F_k_max.
    """
    if k_max is None:
        k_max = len(f_coeffs) - 1 - guard
    if k_max < 0 or len(f_coeffs) < k_max + 1 + guard:
        logging.error(f"Newton map needs {k_max + 1 + guard} input coefficients, got {len(f_coeffs)}.")
        raise DomainError(f"Insufficient input order: need {k_max + 1 + guard} coefficients, got {len(f_coeffs)}.")
    if basis == "umbral":
        coefficients = tuple(f_coeffs[: k_max + 1])
    elif basis == "gregory_newton":
        coefficients = []
        for k in range(k_max + 1):
            total = 0
            for n in range(k, len(f_coeffs)):
                if f_coeffs[n] == 0:
                    continue
                total = total + f_coeffs[n] * stirling2(n, k) * spacing ** (n - k)
            coefficients.append(total)
        coefficients = tuple(coefficients)
    else:
        logging.error(f"Unknown Newton basis: {basis}")
        raise DomainError(f"Unknown Newton basis: {basis}")
    return NewtonSeries(coefficients, spacing, source, basis)


def _numeric_spacing(spacing: Number) -> Union[Fraction, float]:
    if isinstance(spacing, SpacingScalar):
        if not spacing.is_constant():
            raise DomainError("Evaluating a Newton series needs a numeric spacing.")
        return spacing.constant_value()
    return spacing


def _lattice_index(x_value, spacing) -> Optional[int]:
    ratio = x_value / spacing
    if isinstance(ratio, Fraction):
        return int(ratio) if ratio.denominator == 1 and ratio >= 0 else None
    return int(round(ratio)) if float(ratio).is_integer() and ratio >= 0 else None


def eval_newton(
    series: NewtonSeries,
    x_value,
    k_cut: Optional[int] = None,
    threshold: Optional[float] = None,
    probe_terms: Optional[int] = None,
) -> NewtonEvaluation:
    """
    Partial sum of sum_k F_k x^(k) with a convergence verdict.

    The verdict is 'terminating' when x is a non-negative multiple of the spacing,
    'diverging' when some |T_k / T_0| within the probe window exceeds the threshold,
    and 'converging' otherwise (with the last term ratio as estimate).
    """
    cfg = load_config().spectral
    threshold = threshold if threshold is not None else cfg.divergence_threshold
    probe_terms = probe_terms if probe_terms is not None else cfg.divergence_terms
    spacing = _numeric_spacing(series.spacing)
    coefficients = [_numeric_spacing(c) if isinstance(c, SpacingScalar) else c for c in series.coefficients]
    available = len(coefficients) - 1
    k_cut = available if k_cut is None else min(k_cut, available)
    horizon = min(available, max(k_cut, probe_terms))

    terms, factorial_value = [], 1
    for k in range(horizon + 1):
        terms.append(coefficients[k] * factorial_value)
        factorial_value = factorial_value * (x_value - k * spacing)
    partial_sums, total = [], 0
    for term in terms[: k_cut + 1]:
        total = total + term
        partial_sums.append(total)

    magnitudes = tuple(float(abs(t)) for t in terms)
    reference = magnitudes[0] if magnitudes[0] else 1.0
    ratio_estimate = None
    nonzero = [k for k, m in enumerate(magnitudes) if m]
    if len(nonzero) >= 2:
        ratio_estimate = magnitudes[nonzero[-1]] / magnitudes[nonzero[-2]]

    if _lattice_index(x_value, spacing) is not None:
        verdict = "terminating"
    elif max(magnitudes[: probe_terms + 1]) / reference > threshold:
        verdict = "diverging"
    else:
        verdict = "converging"
    logging.info(f"Newton series at x = {x_value}: {verdict}.")
    return NewtonEvaluation(total, verdict, ratio_estimate, tuple(partial_sums), magnitudes)


# Forward-difference harmonic oscillator
# --------------------------------------
@dataclass(frozen=True)
class HOForwardReport:
    spacing: Fraction
    values: Dict[int, Fraction]
    residuals: Dict[int, Fraction]
    divergence: List[Dict[str, float]]
    divergence_index: Optional[int]
    free_parameters: Tuple[str, str]
    extensions: List[Dict[int, Fraction]] = field(default_factory=list)
    extension_residuals: List[Fraction] = field(default_factory=list)


def _ho_series_value(n: int, spacing: Fraction) -> Fraction:
    # sum_l (-1)^l / (2^l l!) x^(2l) at x = n a; terminates for n >= 0
    total = Fraction(0)
    for l in range(n // 2 + 1):
        falling = Fraction(1)
        for j in range(2 * l):
            falling *= (n - j) * spacing
        total += Fraction((-1) ** l, 2 ** l * factorial(l)) * falling
    return total


def _ho_equation_residual(psi: Dict[int, Fraction], n: int, spacing: Fraction) -> Fraction:
    x = n * spacing
    weight = x * (x - spacing)
    lhs = weight * psi[n - 2] if weight else Fraction(0)
    rhs = (psi[n] - 2 * psi[n + 1] + psi[n + 2]) / spacing ** 2 + psi[n]
    return lhs - rhs


def ho_forward_solution(
    n_max: int = 30,
    spacing: Fraction = Fraction(1),
    probe_x: Optional[Fraction] = None,
    probe_terms: Optional[int] = None,
    threshold: Optional[float] = None,
    extension_seeds: Sequence[Tuple[Fraction, Fraction]] = ((Fraction(0), Fraction(0)), (Fraction(1), Fraction(-1))),
    n_negative: int = 10,
) -> HOForwardReport:
    """
    Lattice values of the umbral ground state of the forward-difference oscillator.

    Parameters:
    n_max (int): Largest lattice index checked against the recast difference equation.
    spacing (Fraction): The spacing a.
    probe_x (Optional[Fraction]): Off-lattice point for the divergence demonstration (default a/2).
    extension_seeds (Sequence[Tuple[Fraction, Fraction]]): (psi(-a), psi(-2a)) choices to extend with.
    n_negative (int): Extensions are built down to -n_negative * a.

    Returns:
    HOForwardReport: Values, exact residuals, divergence table and extensions.
    """
    cfg = load_config().spectral
    spacing = Fraction(spacing)
    if spacing <= 0:
        raise DomainError(f"Spacing must be positive, got {spacing}.")
    threshold = threshold if threshold is not None else cfg.divergence_threshold
    probe_terms = probe_terms if probe_terms is not None else cfg.divergence_terms
    probe_x = Fraction(probe_x) if probe_x is not None else spacing / 2

    values = {n: _ho_series_value(n, spacing) for n in range(n_max + 3)}
    residuals = {}
    for n in range(n_max + 1):
        psi = dict(values)
        psi.setdefault(n - 2, Fraction(0))
        residuals[n] = _ho_equation_residual(psi, n, spacing)

    divergence, accumulated, divergence_index = [], 1.0, None
    for l in range(probe_terms + 1):
        quotient = -(probe_x - 2 * l * spacing) * (probe_x - 2 * l * spacing - spacing) / (2 * (l + 1))
        accumulated *= abs(float(quotient))
        divergence.append({"l": l, "quotient": float(quotient), "accumulated": accumulated})
        if divergence_index is None and accumulated > threshold:
            divergence_index = l + 1

    extensions, extension_residuals = [], []
    for psi_minus_one, psi_minus_two in extension_seeds:
        psi = dict(values)
        psi[-1], psi[-2] = Fraction(psi_minus_one), Fraction(psi_minus_two)
        for n in range(-1, -n_negative + 1, -1):
            x = n * spacing
            rhs = (psi[n] - 2 * psi[n + 1] + psi[n + 2]) / spacing ** 2 + psi[n]
            psi[n - 2] = rhs / (x * (x - spacing))
        extensions.append(dict(sorted(psi.items())))
        worst = max(abs(_ho_equation_residual(psi, n, spacing)) for n in range(-n_negative + 2, n_max + 1))
        extension_residuals.append(worst)

    logging.info(f"Forward oscillator ground state checked on 0..{n_max} with spacing {spacing}.")
    return HOForwardReport(
        spacing=spacing,
        values=values,
        residuals=residuals,
        divergence=divergence,
        divergence_index=divergence_index,
        free_parameters=("psi(-a)", "psi(-2a)"),
        extensions=extensions,
        extension_residuals=extension_residuals,
    )


# Discrete Hermite polynomials
# ----------------------------
def hermite_polynomial(n: int) -> LaurentPoly:
    """Physicists' H_n(y), generating function exp(2ys - s^2)."""
    coefficients = [Fraction(0)] * (n + 1)
    for k in range(n // 2 + 1):
        coefficients[n - 2 * k] = Fraction((-1) ** k * factorial(n) * 2 ** (n - 2 * k), factorial(k) * factorial(n - 2 * k))
    return LaurentPoly.from_coefficients(coefficients)


def discrete_hermite(n: int, seq: PolySequence) -> LaurentPoly:
    if n > seq.k_max:
        raise DomainError(f"Hermite index {n} exceeds the sequence length {seq.k_max}.")
    return umbral_transform(hermite_polynomial(n), seq)


def hermite_generating_extraction(n: int, seq: PolySequence, first_inner_index: int = 0) -> LaurentPoly:
    """n! times the s^(n) coefficient of sum_l sum_k 2^(l-k)(-1)^k/(k!(l-k)!) s^(l+k) q_(l-k)."""
    result = LaurentPoly.zero()
    for k in range(first_inner_index, n // 2 + 1):
        l = n - k
        weight = Fraction(2 ** (l - k) * (-1) ** k, factorial(k) * factorial(l - k)) * factorial(n)
        result = result + seq[l - k] * weight
    return result


@dataclass(frozen=True)
class HermiteCrossCheck:
    n: int
    transform: LaurentPoly
    extraction: LaurentPoly
    extraction_as_printed: LaurentPoly
    missing_term: LaurentPoly

    @property
    def matches(self) -> bool:
        return self.transform == self.extraction


def hermite_cross_check(n: int, seq: PolySequence) -> HermiteCrossCheck:
    """
    Compares the umbral transform of H_n with the generating-function extraction.

    The inner sum starting at k = 1 drops the k = 0 term, which is 2^n q_n.
    """
    transform = discrete_hermite(n, seq)
    extraction = hermite_generating_extraction(n, seq, 0)
    as_printed = hermite_generating_extraction(n, seq, 1)
    report = HermiteCrossCheck(n, transform, extraction, as_printed, transform - as_printed)
    if not report.matches:
        logging.warning(f"Hermite cross-check failed for n = {n}.")
    return report


def factorial_form(p: LaurentPoly, spacing: ScalarLike = A) -> List[SpacingScalar]:
    """Convenience re-export used by the CLI to print both bases."""
    return monomial_to_factorial(p, spacing=spacing)
