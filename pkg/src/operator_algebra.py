"""Umbral operator engine.

Shift-invariant operators are formal series sum_m c_m D^m whose coefficients
are produced on demand; ``NormalOrderedOp`` puts coordinate monomials to the
left of (possibly multivariate) D-series and reorders with the Pincherle rule
f(D) x = x f(D) + f'(D).
"""

import logging
import threading
from abc import ABC, abstractmethod
from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from math import comb, factorial
from typing import Callable, Dict, Iterator, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
import sympy

from src.config import load_config
from src.exact_core import A, Exponent, LaurentPoly, ScalarLike, SpacingScalar
from src.exceptions import DomainError, NotInvertibleError, TruncationError

# Setup logging configuration
logging.basicConfig(level=logging.INFO, format="%(asctime)s - %(levelname)s - %(message)s")

CoefficientRule = Callable[[int, List[SpacingScalar]], SpacingScalar]
Stencil = Dict[SpacingScalar, SpacingScalar]


def _is_scalar(value) -> bool:
    return isinstance(value, (SpacingScalar, int, Fraction)) and not isinstance(value, bool)


def _merge_stencils(left: Optional[Stencil], right: Optional[Stencil], sign: int = 1) -> Optional[Stencil]:
    if left is None or right is None:
        return None
    merged = dict(left)
    for shift, weight in right.items():
        merged[shift] = merged.get(shift, SpacingScalar.zero()) + weight * sign
    return {s: w for s, w in merged.items() if not w.is_zero()}


def _compose_stencils(left: Optional[Stencil], right: Optional[Stencil]) -> Optional[Stencil]:
    if left is None or right is None:
        return None
    composed: Stencil = {}
    for s1, w1 in left.items():
        for s2, w2 in right.items():
            shift = s1 + s2
            composed[shift] = composed.get(shift, SpacingScalar.zero()) + w1 * w2
    return {s: w for s, w in composed.items() if not w.is_zero()}


class ShiftInvariantOp:
    """
    Formal series sum_m c_m D^m with lazily generated, memoized coefficients.

    ``degree`` is set when the series is a finite polynomial in D. ``stencil``
    records the operator as a finite combination of shifts {shift: weight}
    whenever that form is known.
    """

    def __init__(
        self,
        rule: CoefficientRule,
        label: str,
        degree: Optional[int] = None,
        stencil: Optional[Stencil] = None,
    ):
        self._rule = rule
        self.label = label
        self.degree = degree
        self.stencil = stencil
        self._cache: List[SpacingScalar] = []
        self._lock = threading.Lock()

    def coefficient(self, m: int) -> SpacingScalar:
        if m < 0:
            raise DomainError(f"Series index must be non-negative, got {m}.")
        if self.degree is not None and m > self.degree:
            return SpacingScalar.zero()
        if m >= len(self._cache):
            with self._lock:
                while len(self._cache) <= m:
                    self._cache.append(SpacingScalar.coerce(self._rule(len(self._cache), self._cache)))
        return self._cache[m]

    def coefficients(self, order: int) -> List[SpacingScalar]:
        """c_0 .. c_order."""
        return [self.coefficient(m) for m in range(order + 1)]

    def is_delta(self) -> bool:
        return self.coefficient(0).is_zero() and not self.coefficient(1).is_zero()

    def equals(self, other: "ShiftInvariantOp", order: int) -> bool:
        return all(self.coefficient(m) == other.coefficient(m) for m in range(order + 1))

    # Algebra
    # -------
    def __add__(self, other: "ShiftInvariantOp") -> "ShiftInvariantOp":
        if not isinstance(other, ShiftInvariantOp):
            return NotImplemented
        degree = None if self.degree is None or other.degree is None else max(self.degree, other.degree)
        return ShiftInvariantOp(
            lambda m, _: self.coefficient(m) + other.coefficient(m),
            f"({self.label} + {other.label})",
            degree,
            _merge_stencils(self.stencil, other.stencil),
        )

    def __neg__(self) -> "ShiftInvariantOp":
        return self.scale(-1)

    def __sub__(self, other: "ShiftInvariantOp") -> "ShiftInvariantOp":
        if not isinstance(other, ShiftInvariantOp):
            return NotImplemented
        return self + (-other)

    def scale(self, factor: ScalarLike) -> "ShiftInvariantOp":
        factor = SpacingScalar.coerce(factor)
        stencil = None
        if self.stencil is not None:
            stencil = {s: w * factor for s, w in self.stencil.items() if not (w * factor).is_zero()}
        return ShiftInvariantOp(
            lambda m, _: self.coefficient(m) * factor, f"({factor})*{self.label}", self.degree, stencil
        )

    def __mul__(self, other):
        if _is_scalar(other):
            return self.scale(other)
        if not isinstance(other, ShiftInvariantOp):
            return NotImplemented

        def rule(m: int, _) -> SpacingScalar:
            total = SpacingScalar.zero()
            for i in range(m + 1):
                left = self.coefficient(i)
                if left:
                    total = total + left * other.coefficient(m - i)
            return total

        degree = None if self.degree is None or other.degree is None else self.degree + other.degree
        return ShiftInvariantOp(
            rule, f"{self.label}*{other.label}", degree, _compose_stencils(self.stencil, other.stencil)
        )

    def __rmul__(self, other):
        if _is_scalar(other):
            return self.scale(other)
        return NotImplemented

    def __pow__(self, exponent: int) -> "ShiftInvariantOp":
        if not isinstance(exponent, int) or exponent < 0:
            raise TypeError("Operators only take non-negative integer powers.")
        result = identity_op()
        for _ in range(exponent):
            result = result * self
        result.label = f"{self.label}^{exponent}"
        return result

    # Action on polynomials
    # ---------------------
    def apply(self, p: LaurentPoly, axis: int = 0) -> LaurentPoly:
        """Exact action on a polynomial; uses the coefficients up to deg_axis(p)."""
        result = LaurentPoly.zero(p.dim)
        for m in range(p.degree_in(axis) + 1):
            coef = self.coefficient(m)
            if coef:
                result = result + p.derivative(axis, m) * coef
        return result

    # Rendering
    # ---------
    def render_series(self, order: int) -> str:
        pieces = []
        for m, coef in enumerate(self.coefficients(order)):
            if coef.is_zero():
                continue
            power = "" if m == 0 else ("D" if m == 1 else f"D^{m}")
            if not power:
                pieces.append(str(coef))
            elif coef == 1:
                pieces.append(power)
            else:
                pieces.append(f"({coef})*{power}")
        body = " + ".join(pieces) if pieces else "0"
        if self.degree is None or self.degree > order:
            body += f" + O(D^{order + 1})"
        return body

    def render_stencil(self) -> Optional[str]:
        if self.stencil is None:
            return None
        if not self.stencil:
            return "0"
        return " + ".join(f"({w})*S[{s}]" for s, w in sorted(self.stencil.items(), key=lambda kv: str(kv[0])))

    def to_json(self, order: int) -> dict:
        return {
            "label": self.label,
            "order": order,
            "coefficients": [coef.to_json() for coef in self.coefficients(order)],
            "stencil": self.render_stencil(),
        }

    def __repr__(self):
        return f"ShiftInvariantOp({self.label})"


def identity_op() -> ShiftInvariantOp:
    return ShiftInvariantOp(lambda m, _: SpacingScalar.one() if m == 0 else SpacingScalar.zero(), "I", 0, {SpacingScalar.zero(): SpacingScalar.one()})


def derivative_op() -> ShiftInvariantOp:
    return ShiftInvariantOp(lambda m, _: SpacingScalar.one() if m == 1 else SpacingScalar.zero(), "D", 1)


def shift_op(c: ScalarLike) -> ShiftInvariantOp:
    """e^{cD}: (S_c f)(x) = f(x + c)."""
    c = SpacingScalar.coerce(c)
    if c.is_zero():
        return identity_op()
    return ShiftInvariantOp(lambda m, _: c ** m * Fraction(1, factorial(m)), f"S[{c}]", None, {c: SpacingScalar.one()})


def pincherle(op: ShiftInvariantOp) -> ShiftInvariantOp:
    """O' = [O, x], the term-wise D-derivative of the series."""
    stencil = None
    if op.stencil is not None:
        stencil = {s: w * s for s, w in op.stencil.items() if not s.is_zero()}
    degree = None if op.degree is None else max(op.degree - 1, 0)
    return ShiftInvariantOp(lambda m, _: op.coefficient(m + 1) * (m + 1), f"{op.label}'", degree, stencil)


def invert_series(op: ShiftInvariantOp) -> ShiftInvariantOp:
    """
    Reciprocal formal series of an operator with invertible constant term.

    Parameters:
    op (ShiftInvariantOp): The series to invert.

    Returns:
    ShiftInvariantOp: b with b * op = identity to every order.
    """
    c0 = op.coefficient(0)
    if c0.is_zero():
        logging.error(f"Cannot invert {op.label}: zero constant term.")
        raise NotInvertibleError(f"Series {op.label} has zero constant term and no inverse.")
    inverse_c0 = c0.inverse()

    def rule(m: int, previous: List[SpacingScalar]) -> SpacingScalar:
        if m == 0:
            return inverse_c0
        total = SpacingScalar.zero()
        for i in range(1, m + 1):
            ci = op.coefficient(i)
            if ci:
                total = total + ci * previous[m - i]
        return -(inverse_c0 * total)

    stencil = None
    if op.stencil is not None and len(op.stencil) == 1:
        (shift, weight), = op.stencil.items()
        stencil = {-shift: weight.inverse()}
    degree = 0 if op.degree == 0 else None
    return ShiftInvariantOp(rule, f"({op.label})^-1", degree, stencil)


def _validate_spacing(spacing: ScalarLike) -> SpacingScalar:
    spacing = SpacingScalar.coerce(spacing)
    if not spacing.is_monomial() or not spacing.is_real():
        logging.error(f"Spacing {spacing} is not a monomial c*a.")
        raise DomainError(f"Spacing must be a monomial c*a with c > 0, got {spacing}.")
    (_, _), coef = next(spacing.items())
    if coef <= 0:
        logging.error(f"Spacing {spacing} has a non-positive coefficient.")
        raise DomainError(f"Spacing must have a positive coefficient, got {spacing}.")
    return spacing


# Abstract Base Class for delta operator strategies
class DeltaStrategy(ABC):
    kind: str

    @abstractmethod
    def build(self, spacing: SpacingScalar) -> ShiftInvariantOp:
        """
        Builds the delta operator as a D-series.

        Parameters:
        spacing (SpacingScalar): The lattice step h.

        Returns:
        ShiftInvariantOp: The delta operator.
        """
        pass


# Concrete Strategy for the continuum derivative D
class DerivativeDelta(DeltaStrategy):
    kind = "derivative"

    def build(self, spacing: SpacingScalar) -> ShiftInvariantOp:
        op = derivative_op()
        op.label = self.kind
        return op


# Concrete Strategy for (e^{hD} - 1)/h
class ForwardDelta(DeltaStrategy):
    kind = "forward"

    def build(self, spacing: SpacingScalar) -> ShiftInvariantOp:
        inv = spacing.inverse()
        return ShiftInvariantOp(
            lambda m, _: SpacingScalar.zero() if m == 0 else spacing ** (m - 1) * Fraction(1, factorial(m)),
            self.kind,
            None,
            {spacing: inv, SpacingScalar.zero(): -inv},
        )


# Concrete Strategy for (1 - e^{-hD})/h
class BackwardDelta(DeltaStrategy):
    kind = "backward"

    def build(self, spacing: SpacingScalar) -> ShiftInvariantOp:
        inv = spacing.inverse()
        return ShiftInvariantOp(
            lambda m, _: SpacingScalar.zero()
            if m == 0
            else spacing ** (m - 1) * Fraction((-1) ** (m + 1), factorial(m)),
            self.kind,
            None,
            {SpacingScalar.zero(): inv, -spacing: -inv},
        )


# Concrete Strategy for sinh(hD)/h = (S_h - S_-h)/(2h)
class CentralDelta(DeltaStrategy):
    kind = "central"

    def build(self, spacing: SpacingScalar) -> ShiftInvariantOp:
        half_inv = spacing.inverse() * Fraction(1, 2)
        return ShiftInvariantOp(
            lambda m, _: spacing ** (m - 1) * Fraction(1, factorial(m)) if m % 2 else SpacingScalar.zero(),
            self.kind,
            None,
            {spacing: half_inv, -spacing: -half_inv},
        )


# Concrete Strategy for D/(D - 1) = -(D + D^2 + ...)
class LaguerreDelta(DeltaStrategy):
    kind = "laguerre"

    def build(self, spacing: SpacingScalar) -> ShiftInvariantOp:
        return ShiftInvariantOp(lambda m, _: SpacingScalar.zero() if m == 0 else SpacingScalar.const(-1), self.kind)


# Factory to create delta strategies
class DeltaOperatorFactory:
    _strategies = {
        strategy.kind: strategy
        for strategy in (DerivativeDelta, ForwardDelta, BackwardDelta, CentralDelta, LaguerreDelta)
    }

    @staticmethod
    def get_delta_strategy(kind: str) -> DeltaStrategy:
        """Returns the delta strategy registered under ``kind``."""
        if kind not in DeltaOperatorFactory._strategies:
            logging.error(f"Unknown delta operator kind: {kind}")
            raise DomainError(f"Unknown delta operator kind: {kind}")
        return DeltaOperatorFactory._strategies[kind]()

    @staticmethod
    def kinds() -> List[str]:
        return list(DeltaOperatorFactory._strategies)


def make_delta(kind: str, spacing: ScalarLike = A) -> ShiftInvariantOp:
    """Delta operator of the given kind; spacing is ignored for derivative and laguerre."""
    strategy = DeltaOperatorFactory.get_delta_strategy(kind)
    if kind in ("derivative", "laguerre"):
        return strategy.build(SpacingScalar.coerce(spacing))
    return strategy.build(_validate_spacing(spacing))


def _min_order(*orders: Optional[int]) -> Optional[int]:
    finite = [o for o in orders if o is not None]
    return min(finite) if finite else None


class MultiSeries:
    """
    Truncated multivariate D-series sum_e c_e D1^e1 ... Dn^en.

    ``order`` is the total D-degree up to which the coefficients are exact; None
    means the series is a finite polynomial in the D's and exact everywhere.
    """

    __slots__ = ("dim", "order", "_coeffs")

    def __init__(self, coeffs: Mapping[Exponent, ScalarLike], dim: int, order: Optional[int] = None):
        self.dim = dim
        self.order = order
        normalized: Dict[Exponent, SpacingScalar] = {}
        for exponent, coef in coeffs.items():
            exponent = tuple(exponent)
            if len(exponent) != dim:
                raise DomainError(f"D-exponent {exponent} does not fit dimension {dim}.")
            if order is not None and sum(exponent) > order:
                continue
            coef = SpacingScalar.coerce(coef)
            total = normalized.get(exponent, SpacingScalar.zero()) + coef
            if total.is_zero():
                normalized.pop(exponent, None)
            else:
                normalized[exponent] = total
        self._coeffs = dict(sorted(normalized.items()))

    @classmethod
    def identity(cls, dim: int) -> "MultiSeries":
        return cls({(0,) * dim: 1}, dim)

    @classmethod
    def from_shift_invariant(
        cls, op: ShiftInvariantOp, axis: int = 0, dim: int = 1, order: Optional[int] = None
    ) -> "MultiSeries":
        if op.degree is not None:
            top, order = op.degree, None
        else:
            if order is None:
                order = load_config().operators.default_order
            top = order
        coeffs = {}
        for m in range(top + 1):
            exponent = [0] * dim
            exponent[axis] = m
            coeffs[tuple(exponent)] = op.coefficient(m)
        return cls(coeffs, dim, order)

    def items(self) -> Iterator[Tuple[Exponent, SpacingScalar]]:
        return iter(self._coeffs.items())

    def coefficient(self, exponent: Sequence[int]) -> SpacingScalar:
        return self._coeffs.get(tuple(exponent), SpacingScalar.zero())

    def is_zero(self, up_to: Optional[int] = None) -> bool:
        if up_to is None:
            return not self._coeffs
        return all(sum(e) > up_to for e in self._coeffs)

    def __add__(self, other: "MultiSeries") -> "MultiSeries":
        merged: Dict[Exponent, SpacingScalar] = dict(self._coeffs)
        for exponent, coef in other._coeffs.items():
            merged[exponent] = merged.get(exponent, SpacingScalar.zero()) + coef
        return MultiSeries(merged, self.dim, _min_order(self.order, other.order))

    def __neg__(self) -> "MultiSeries":
        return self.scale(-1)

    def __sub__(self, other: "MultiSeries") -> "MultiSeries":
        return self + (-other)

    def scale(self, factor: ScalarLike) -> "MultiSeries":
        factor = SpacingScalar.coerce(factor)
        return MultiSeries({e: c * factor for e, c in self._coeffs.items()}, self.dim, self.order)

    def __mul__(self, other):
        if _is_scalar(other):
            return self.scale(other)
        if not isinstance(other, MultiSeries):
            return NotImplemented
        order = _min_order(self.order, other.order)
        product_coeffs: Dict[Exponent, SpacingScalar] = {}
        for e1, c1 in self._coeffs.items():
            for e2, c2 in other._coeffs.items():
                exponent = tuple(x + y for x, y in zip(e1, e2))
                if order is not None and sum(exponent) > order:
                    continue
                product_coeffs[exponent] = product_coeffs.get(exponent, SpacingScalar.zero()) + c1 * c2
        return MultiSeries(product_coeffs, self.dim, order)

    def derivative(self, axis: int, times: int = 1) -> "MultiSeries":
        """d/dD_axis applied ``times`` times; the exact order drops by ``times``."""
        result = {}
        for exponent, coef in self._coeffs.items():
            power = exponent[axis]
            if power < times:
                continue
            factor = 1
            for step in range(times):
                factor *= power - step
            lowered = list(exponent)
            lowered[axis] -= times
            result[tuple(lowered)] = coef * factor
        order = None if self.order is None else self.order - times
        return MultiSeries(result, self.dim, order)

    def apply(self, p: LaurentPoly) -> LaurentPoly:
        if self.order is not None and p.degree > self.order:
            logging.error(f"Series exact to order {self.order} applied to degree {p.degree}.")
            raise TruncationError(f"Series is exact to order {self.order}, polynomial has degree {p.degree}.")
        result = LaurentPoly.zero(p.dim)
        for exponent, coef in self._coeffs.items():
            if sum(exponent) > p.degree:
                continue
            derived = p.partial(exponent)
            if not derived.is_zero():
                result = result + derived * coef
        return result

    def conjugate(self) -> "MultiSeries":
        return MultiSeries({e: c.conjugate() for e, c in self._coeffs.items()}, self.dim, self.order)

    def render(self) -> str:
        if not self._coeffs:
            return "0"
        pieces = []
        for exponent, coef in self._coeffs.items():
            factors = []
            for axis, power in enumerate(exponent):
                name = "D" if self.dim == 1 else f"D{axis + 1}"
                if power == 1:
                    factors.append(name)
                elif power:
                    factors.append(f"{name}^{power}")
            if not factors:
                pieces.append(f"({coef})")
            elif coef == 1:
                pieces.append("*".join(factors))
            else:
                pieces.append(f"({coef})*" + "*".join(factors))
        text = " + ".join(pieces)
        if self.order is not None:
            text += f" + O(D^{self.order + 1})"
        return text


class NormalOrderedOp:
    """
    Operator sum_m x^m f_m(D) with every coordinate factor left of its D-series.

    ``order`` is the total D-degree up to which the operator is exact; products
    lower it by the coordinate degree moved across a series.
    """

    __slots__ = ("dim", "_terms", "_order")

    def __init__(self, terms: Mapping[Exponent, MultiSeries], dim: int, order: Optional[int] = None):
        self.dim = dim
        orders = [order]
        normalized: Dict[Exponent, MultiSeries] = {}
        for exponent, series in terms.items():
            exponent = tuple(exponent)
            if len(exponent) != dim or series.dim != dim:
                raise DomainError(f"Term {exponent} does not fit dimension {dim}.")
            orders.append(series.order)
            if exponent in normalized:
                series = normalized[exponent] + series
            if series.is_zero():
                normalized.pop(exponent, None)
            else:
                normalized[exponent] = series
        self._order = _min_order(*orders)
        self._terms = dict(sorted(normalized.items()))

    # Constructors
    # ------------
    @classmethod
    def identity(cls, dim: int = 1) -> "NormalOrderedOp":
        return cls({(0,) * dim: MultiSeries.identity(dim)}, dim)

    @classmethod
    def scalar(cls, value: ScalarLike, dim: int = 1) -> "NormalOrderedOp":
        return cls({(0,) * dim: MultiSeries.identity(dim).scale(value)}, dim)

    @classmethod
    def zero(cls, dim: int = 1) -> "NormalOrderedOp":
        return cls({}, dim)

    @classmethod
    def coordinate(cls, axis: int = 0, dim: int = 1) -> "NormalOrderedOp":
        exponent = [0] * dim
        exponent[axis] = 1
        return cls({tuple(exponent): MultiSeries.identity(dim)}, dim)

    @classmethod
    def from_series(cls, series: MultiSeries) -> "NormalOrderedOp":
        return cls({(0,) * series.dim: series}, series.dim, series.order)

    @classmethod
    def from_shift_invariant(
        cls, op: ShiftInvariantOp, axis: int = 0, dim: int = 1, order: Optional[int] = None
    ) -> "NormalOrderedOp":
        return cls.from_series(MultiSeries.from_shift_invariant(op, axis, dim, order))

    @classmethod
    def derivative(cls, axis: int = 0, dim: int = 1) -> "NormalOrderedOp":
        exponent = [0] * dim
        exponent[axis] = 1
        return cls.from_series(MultiSeries({tuple(exponent): 1}, dim))

    # Inspection
    # ----------
    @property
    def order(self) -> Optional[int]:
        return self._order

    def items(self) -> Iterator[Tuple[Exponent, MultiSeries]]:
        return iter(self._terms.items())

    def series(self, exponent: Sequence[int]) -> MultiSeries:
        return self._terms.get(tuple(exponent), MultiSeries({}, self.dim))

    @property
    def coordinate_degree(self) -> int:
        return max((sum(m) for m in self._terms), default=0)

    def is_finite(self) -> bool:
        return self._order is None

    # Algebra
    # -------
    def _coerce(self, other) -> Optional["NormalOrderedOp"]:
        if isinstance(other, NormalOrderedOp):
            if other.dim != self.dim:
                raise DomainError(f"Dimension mismatch: {self.dim} vs {other.dim}.")
            return other
        if _is_scalar(other):
            return NormalOrderedOp.scalar(other, self.dim)
        return None

    def __add__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        merged: Dict[Exponent, MultiSeries] = dict(self._terms)
        for exponent, series in other._terms.items():
            merged[exponent] = merged[exponent] + series if exponent in merged else series
        return NormalOrderedOp(merged, self.dim, _min_order(self._order, other._order))

    __radd__ = __add__

    def __neg__(self):
        return self.scale(-1)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, factor: ScalarLike) -> "NormalOrderedOp":
        return NormalOrderedOp({m: s.scale(factor) for m, s in self._terms.items()}, self.dim, self._order)

    def __mul__(self, other):
        if _is_scalar(other):
            return self.scale(other)
        if not isinstance(other, NormalOrderedOp):
            return NotImplemented
        if other.dim != self.dim:
            raise DomainError(f"Dimension mismatch: {self.dim} vs {other.dim}.")
        # f(D) x^m = sum_j prod_i C(m_i, j_i) x^(m-j) d^j f(D)
        result: Dict[Exponent, MultiSeries] = {}
        orders = [self._order, other._order]
        for m, f in self._terms.items():
            derived: Dict[Exponent, MultiSeries] = {}
            for m2, g in other._terms.items():
                for j in product(*(range(e + 1) for e in m2)):
                    if j not in derived:
                        series = f
                        for axis, times in enumerate(j):
                            if times:
                                series = series.derivative(axis, times)
                        derived[j] = series
                    df = derived[j]
                    orders.append(df.order)
                    if df.is_zero():
                        continue
                    weight = 1
                    for e, t in zip(m2, j):
                        weight *= comb(e, t)
                    exponent = tuple(a + b - c for a, b, c in zip(m, m2, j))
                    term = (df * g).scale(weight)
                    result[exponent] = result[exponent] + term if exponent in result else term
        return NormalOrderedOp(result, self.dim, _min_order(*orders))

    def __rmul__(self, other):
        if _is_scalar(other):
            return self.scale(other)
        return NotImplemented

    def __pow__(self, exponent: int) -> "NormalOrderedOp":
        if not isinstance(exponent, int) or exponent < 0:
            raise TypeError("Operators only take non-negative integer powers.")
        result = NormalOrderedOp.identity(self.dim)
        for _ in range(exponent):
            result = result * self
        return result

    def conjugate(self) -> "NormalOrderedOp":
        return NormalOrderedOp({m: s.conjugate() for m, s in self._terms.items()}, self.dim, self._order)

    # Comparison
    # ----------
    def is_zero(self, up_to: Optional[int] = None) -> bool:
        limit = self._order if up_to is None else up_to
        if self._order is not None and limit is not None and limit > self._order:
            raise TruncationError(f"Operator is exact to order {self._order}, cannot compare to order {limit}.")
        return all(series.is_zero(limit) for series in self._terms.values())

    def equals(self, other: "NormalOrderedOp", up_to: Optional[int] = None) -> bool:
        """Structural equality of normal forms, up to the common exact order."""
        return (self - other).is_zero(up_to)

    def agrees_on(self, other: "NormalOrderedOp", polys: Sequence[LaurentPoly]) -> bool:
        return all(self.apply(p) == other.apply(p) for p in polys)

    # Action on polynomials
    # ---------------------
    def apply(self, p: LaurentPoly) -> LaurentPoly:
        if p.dim != self.dim:
            raise DomainError(f"Operator has dimension {self.dim}, polynomial {p.dim}.")
        if self._order is not None and p.degree > self._order:
            logging.error(f"Operator exact to order {self._order} applied to degree {p.degree}.")
            raise TruncationError(f"Operator is exact to order {self._order}, polynomial has degree {p.degree}.")
        result = LaurentPoly.zero(self.dim)
        for m, series in self._terms.items():
            image = series.apply(p)
            if not image.is_zero():
                result = result + LaurentPoly.monomial(m) * image
        return result

    # Serialization
    # -------------
    def to_json(self) -> dict:
        return {
            "dim": self.dim,
            "order": self._order,
            "terms": [
                {"x": list(m), "series": [{"d": list(e), "coef": c.to_json()} for e, c in series.items()]}
                for m, series in self._terms.items()
            ],
        }

    def __str__(self):
        if not self._terms:
            return "0"
        pieces = []
        for m, series in self._terms.items():
            coordinate = "*".join(
                (("x" if self.dim == 1 else f"x{i + 1}") + (f"^{e}" if e > 1 else ""))
                for i, e in enumerate(m)
                if e
            )
            body = f"[{series.render()}]"
            pieces.append(f"{coordinate}*{body}" if coordinate else body)
        return " + ".join(pieces)

    def __repr__(self):
        return f"NormalOrderedOp({self})"


OperatorLike = Union[NormalOrderedOp, ShiftInvariantOp]


def as_normal_ordered(op: OperatorLike, dim: int = 1, axis: int = 0, order: Optional[int] = None) -> NormalOrderedOp:
    if isinstance(op, NormalOrderedOp):
        return op
    if isinstance(op, ShiftInvariantOp):
        return NormalOrderedOp.from_shift_invariant(op, axis, dim, order)
    raise TypeError(f"Expected an operator, got {type(op).__name__}.")


def apply(op: OperatorLike, p: LaurentPoly, axis: int = 0) -> LaurentPoly:
    """Exact application of either operator form to a polynomial."""
    if isinstance(op, ShiftInvariantOp):
        return op.apply(p, axis)
    if isinstance(op, NormalOrderedOp):
        return op.apply(p)
    raise TypeError(f"Expected an operator, got {type(op).__name__}.")


def commutator(left: OperatorLike, right: OperatorLike, order: Optional[int] = None) -> NormalOrderedOp:
    """AB - BA in normal form."""
    dim = left.dim if isinstance(left, NormalOrderedOp) else (right.dim if isinstance(right, NormalOrderedOp) else 1)
    a = as_normal_ordered(left, dim, order=order)
    b = as_normal_ordered(right, dim, order=order)
    if a.dim != b.dim:
        raise DomainError(f"Commutator of operators with dimensions {a.dim} and {b.dim}.")
    return a * b - b * a


def _require_delta(q: ShiftInvariantOp):
    if not q.is_delta():
        logging.error(f"{q.label} is not a delta operator.")
        raise DomainError(f"{q.label} is not a delta operator: needs c0 = 0 and c1 != 0.")


def _working_order(order: Optional[int]) -> int:
    return order if order is not None else load_config().operators.default_order


def rodrigues_xhat(q: ShiftInvariantOp, axis: int = 0, dim: int = 1, order: Optional[int] = None) -> NormalOrderedOp:
    """x Q'^-1, the position operator of the basic sequence of ``q``."""
    _require_delta(q)
    inverse = NormalOrderedOp.from_shift_invariant(invert_series(pincherle(q)), axis, dim, _working_order(order))
    return NormalOrderedOp.coordinate(axis, dim) * inverse


def symmetric_xhat(q: ShiftInvariantOp, axis: int = 0, dim: int = 1, order: Optional[int] = None) -> NormalOrderedOp:
    """(x Q'^-1 + Q'^-1 x)/2 in normal form."""
    _require_delta(q)
    inverse = NormalOrderedOp.from_shift_invariant(invert_series(pincherle(q)), axis, dim, _working_order(order))
    x = NormalOrderedOp.coordinate(axis, dim)
    return (x * inverse + inverse * x).scale(Fraction(1, 2))


@dataclass(frozen=True)
class ModularMatrixRep:
    """Finite-field representation of the commutation relation over Z_p."""

    p: int
    x: np.ndarray
    Q: np.ndarray
    Q_prime: np.ndarray
    Q_prime_inverse: np.ndarray
    xhat: np.ndarray

    def commutator(self, left: np.ndarray, right: np.ndarray) -> np.ndarray:
        return (left @ right - right @ left) % self.p

    def ccr_holds(self) -> bool:
        return bool(np.array_equal(self.commutator(self.Q, self.xhat), np.eye(self.p, dtype=np.int64)))

    def raw_commutator(self) -> np.ndarray:
        """[Q, x] mod p, which equals Q for the cyclic step matrix."""
        return self.commutator(self.Q, self.x)


def finite_field_rep(p: int) -> ModularMatrixRep:
    """
    Builds x, Q and x_hat = x [Q, x]^-1 over the prime field Z_p.

    Parameters:
    p (int): A prime.

    Returns:
    ModularMatrixRep: Matrices with [Q, x_hat] = I mod p.
    """
    if not isinstance(p, int) or not sympy.isprime(p):
        logging.error(f"{p} is not prime.")
        raise DomainError(f"Finite-field representation needs a prime, got {p}.")
    x = np.diag(np.arange(p, dtype=np.int64))
    Q = np.roll(np.eye(p, dtype=np.int64), 1, axis=1)
    q_prime = (Q @ x - x @ Q) % p
    inverse = np.array(sympy.Matrix(q_prime.tolist()).inv_mod(p).tolist(), dtype=np.int64)
    xhat = (x @ inverse) % p
    rep = ModularMatrixRep(p=p, x=x, Q=Q, Q_prime=q_prime, Q_prime_inverse=inverse, xhat=xhat)
    if not rep.ccr_holds():
        logging.error(f"[Q, x_hat] != I over Z_{p}.")
        raise DomainError(f"Commutation relation failed over Z_{p}.")
    logging.info(f"Built finite-field representation over Z_{p}.")
    return rep
