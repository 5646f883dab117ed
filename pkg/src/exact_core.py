"""Exact arithmetic for the lab.

Three value types live here:

* ``SpacingScalar``: Laurent polynomials over the rationals in the spacing
  symbols a (= a1), a2, ..., extended by the imaginary unit i (i*i = -1).
* ``LaurentPoly``: polynomials in the lattice coordinates x1..xn whose
  coefficients are ``SpacingScalar`` values.
* ``StirlingTable``: memoized triangles of Stirling numbers, used for the
  monomial <-> falling factorial conversions.

All values are immutable once built; structural equality is exact equality.
"""

import logging
import threading
from abc import ABC, abstractmethod
from fractions import Fraction
from itertools import product
from numbers import Rational
from typing import Dict, Iterable, Iterator, List, Mapping, Optional, Sequence, Tuple, Union

from src.config import load_config
from src.exceptions import DomainError, NotInvertibleError

# Setup logging configuration
logging.basicConfig(level=logging.INFO, format="%(asctime)s - %(levelname)s - %(message)s")

ScalarKey = Tuple[int, Tuple[int, ...]]
Exponent = Tuple[int, ...]
ScalarLike = Union["SpacingScalar", int, Fraction]


def _strip(powers: Iterable[int]) -> Tuple[int, ...]:
    powers = list(powers)
    while powers and powers[-1] == 0:
        powers.pop()
    return tuple(powers)


def _add_powers(left: Tuple[int, ...], right: Tuple[int, ...]) -> Tuple[int, ...]:
    width = max(len(left), len(right))
    return _strip(
        (left[i] if i < len(left) else 0) + (right[i] if i < len(right) else 0) for i in range(width)
    )


def _as_fraction(value) -> Fraction:
    if isinstance(value, bool):
        raise TypeError("Booleans are not exact scalars.")
    if isinstance(value, Fraction):
        return value
    if isinstance(value, (int, Rational)):
        return Fraction(value)
    raise TypeError(f"Expected an exact rational, got {type(value).__name__}.")


def symbol_name(index: int) -> str:
    """Display name of the spacing symbol with the given index (0 -> 'a')."""
    return "a" if index == 0 else f"a{index + 1}"


class SpacingScalar:
    """
    Gaussian Laurent polynomial in the spacing symbols.

    Terms are keyed by (ipow, powers) where ipow is 0 or 1 (the power of i) and
    powers holds the exponents of a1, a2, ... with trailing zeros stripped.
    """

    __slots__ = ("_terms",)

    def __init__(self, terms: Optional[Mapping[ScalarKey, Fraction]] = None):
        normalized: Dict[ScalarKey, Fraction] = {}
        for (ipow, powers), coef in (terms or {}).items():
            coef = _as_fraction(coef)
            if ipow not in (0, 1):
                raise DomainError(f"Power of i must be 0 or 1, got {ipow}.")
            if coef == 0:
                continue
            key = (ipow, _strip(powers))
            total = normalized.get(key, Fraction(0)) + coef
            if total == 0:
                normalized.pop(key, None)
            else:
                normalized[key] = total
        self._terms = dict(sorted(normalized.items()))

    # Constructors
    # ------------
    @classmethod
    def const(cls, value) -> "SpacingScalar":
        return cls({(0, ()): _as_fraction(value)})

    @classmethod
    def zero(cls) -> "SpacingScalar":
        return cls()

    @classmethod
    def one(cls) -> "SpacingScalar":
        return cls.const(1)

    @classmethod
    def imag(cls) -> "SpacingScalar":
        return cls({(1, ()): Fraction(1)})

    @classmethod
    def symbol(cls, index: int = 0, power: int = 1, coefficient=1) -> "SpacingScalar":
        """coefficient * a_{index+1} ** power."""
        powers = [0] * (index + 1)
        powers[index] = power
        return cls({(0, tuple(powers)): _as_fraction(coefficient)})

    @classmethod
    def coerce(cls, value: ScalarLike) -> "SpacingScalar":
        if isinstance(value, SpacingScalar):
            return value
        return cls.const(value)

    # Inspection
    # ----------
    def items(self) -> Iterator[Tuple[ScalarKey, Fraction]]:
        return iter(self._terms.items())

    def is_zero(self) -> bool:
        return not self._terms

    def is_constant(self) -> bool:
        return all(powers == () and ipow == 0 for ipow, powers in self._terms)

    def is_real(self) -> bool:
        return all(ipow == 0 for ipow, _ in self._terms)

    def is_monomial(self) -> bool:
        return len(self._terms) == 1

    def constant_value(self) -> Fraction:
        if not self.is_constant():
            raise DomainError(f"{self} is not a rational constant.")
        return self._terms.get((0, ()), Fraction(0))

    def max_symbol(self) -> int:
        """Number of spacing symbols this scalar mentions."""
        return max((len(powers) for _, powers in self._terms), default=0)

    def leading(self) -> Tuple[ScalarKey, Fraction]:
        if not self._terms:
            raise NotInvertibleError("The zero scalar has no leading term.")
        key = max(self._terms)
        return key, self._terms[key]

    # Arithmetic
    # ----------
    def __add__(self, other):
        try:
            other = SpacingScalar.coerce(other)
        except TypeError:
            return NotImplemented
        merged = dict(self._terms)
        for key, coef in other._terms.items():
            merged[key] = merged.get(key, Fraction(0)) + coef
        return SpacingScalar(merged)

    __radd__ = __add__

    def __neg__(self):
        return SpacingScalar({key: -coef for key, coef in self._terms.items()})

    def __sub__(self, other):
        try:
            other = SpacingScalar.coerce(other)
        except TypeError:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, SpacingScalar):
            pass
        elif isinstance(other, (int, Fraction)) and not isinstance(other, bool):
            factor = Fraction(other)
            return SpacingScalar({key: coef * factor for key, coef in self._terms.items()})
        else:
            return NotImplemented
        result: Dict[ScalarKey, Fraction] = {}
        for (ip1, pw1), c1 in self._terms.items():
            for (ip2, pw2), c2 in other._terms.items():
                ipow = ip1 + ip2
                coef = c1 * c2
                if ipow == 2:
                    ipow, coef = 0, -coef
                key = (ipow, _add_powers(pw1, pw2))
                result[key] = result.get(key, Fraction(0)) + coef
        return SpacingScalar(result)

    __rmul__ = __mul__

    def inverse(self) -> "SpacingScalar":
        """Inverse of a single-term scalar; sums of terms are not invertible here."""
        if not self.is_monomial():
            logging.error(f"Attempted to invert the non-monomial scalar {self}.")
            raise NotInvertibleError(f"Only monomial scalars are invertible, got {self}.")
        (ipow, powers), coef = next(iter(self._terms.items()))
        negated = tuple(-p for p in powers)
        if ipow == 1:
            return SpacingScalar({(1, negated): -1 / coef})
        return SpacingScalar({(0, negated): 1 / coef})

    def __truediv__(self, other):
        try:
            other = SpacingScalar.coerce(other)
        except TypeError:
            return NotImplemented
        return self * other.inverse()

    def __rtruediv__(self, other):
        return SpacingScalar.coerce(other) * self.inverse()

    def __pow__(self, exponent: int):
        if not isinstance(exponent, int):
            raise TypeError("Scalars only take integer powers.")
        if exponent < 0:
            return self.inverse() ** (-exponent)
        result, base = SpacingScalar.one(), self
        while exponent:
            if exponent & 1:
                result = result * base
            base = base * base
            exponent >>= 1
        return result

    def conjugate(self) -> "SpacingScalar":
        return SpacingScalar({(ipow, powers): (-coef if ipow else coef) for (ipow, powers), coef in self._terms.items()})

    def real_part(self) -> "SpacingScalar":
        return SpacingScalar({key: coef for key, coef in self._terms.items() if key[0] == 0})

    def imag_part(self) -> "SpacingScalar":
        return SpacingScalar({(0, powers): coef for (ipow, powers), coef in self._terms.items() if ipow == 1})

    def evaluate(self, spacings: Sequence = ()):
        """
        Numeric value for concrete spacings.

        Parameters:
        spacings (Sequence): values substituted for a1, a2, ...; Fractions keep
            the result exact.

        Returns:
        Fraction | float | complex: complex only when i survives.
        """
        real, imag = 0, 0
        for (ipow, powers), coef in self._terms.items():
            if len(powers) > len(spacings):
                logging.error(f"Scalar {self} needs {len(powers)} spacing values.")
                raise DomainError(f"Scalar {self} needs {len(powers)} spacing values, got {len(spacings)}.")
            value = coef
            for base, power in zip(spacings, powers):
                value = value * (Fraction(base) if isinstance(base, int) else base) ** power
            if ipow:
                imag = imag + value
            else:
                real = real + value
        if imag == 0:
            return Fraction(real) if isinstance(real, int) else real
        return complex(float(real), float(imag))

    # Comparison / hashing
    # --------------------
    def __eq__(self, other):
        try:
            other = SpacingScalar.coerce(other)
        except TypeError:
            return NotImplemented
        return self._terms == other._terms

    def __hash__(self):
        return hash(tuple(self._terms.items()))

    def __bool__(self):
        return bool(self._terms)

    # Serialization
    # -------------
    def to_json(self) -> List[dict]:
        entries = []
        for (ipow, powers), coef in self._terms.items():
            entry = {"apow": powers[0] if powers else 0, "num": str(coef.numerator), "den": str(coef.denominator)}
            if len(powers) > 1:
                entry["apows"] = list(powers)
            if ipow:
                entry["ipow"] = 1
            entries.append(entry)
        return entries

    @classmethod
    def from_json(cls, entries: Sequence[dict]) -> "SpacingScalar":
        terms: Dict[ScalarKey, Fraction] = {}
        for entry in entries:
            powers = tuple(entry["apows"]) if "apows" in entry else (entry["apow"],)
            key = (int(entry.get("ipow", 0)), _strip(powers))
            terms[key] = terms.get(key, Fraction(0)) + Fraction(int(entry["num"]), int(entry["den"]))
        return cls(terms)

    def __str__(self):
        if not self._terms:
            return "0"
        pieces = []
        for (ipow, powers), coef in sorted(self._terms.items(), key=lambda kv: (-sum(kv[0][1]), kv[0])):
            factors = []
            if ipow:
                factors.append("i")
            for index, power in enumerate(powers):
                if power == 1:
                    factors.append(symbol_name(index))
                elif power:
                    factors.append(f"{symbol_name(index)}^{power}")
            magnitude = abs(coef)
            if not factors:
                body = str(magnitude)
            elif magnitude == 1:
                body = "*".join(factors)
            else:
                body = f"{magnitude}*" + "*".join(factors)
            sign = "-" if coef < 0 else "+"
            pieces.append((sign, body))
        text = ("-" if pieces[0][0] == "-" else "") + pieces[0][1]
        for sign, body in pieces[1:]:
            text += f" {sign} {body}"
        return text

    def __repr__(self):
        return f"SpacingScalar({self})"


# Canonical spacing symbol, a = a1
A = SpacingScalar.symbol(0)


def _coordinate_name(axis: int, dim: int) -> str:
    return "x" if dim == 1 else f"x{axis + 1}"


class LaurentPoly:
    """
    Polynomial in the lattice coordinates with ``SpacingScalar`` coefficients.

    Terms map full-length exponent tuples to coefficients, kept sorted so that
    equality is structural.
    """

    __slots__ = ("dim", "_terms")

    def __init__(self, terms: Optional[Mapping[Exponent, ScalarLike]] = None, dim: int = 1):
        if dim < 1:
            raise DomainError(f"Polynomial dimension must be at least 1, got {dim}.")
        self.dim = dim
        normalized: Dict[Exponent, SpacingScalar] = {}
        for exponent, coef in (terms or {}).items():
            exponent = tuple(exponent)
            if len(exponent) != dim or any(e < 0 for e in exponent):
                raise DomainError(f"Exponent {exponent} does not fit a {dim}-dimensional polynomial.")
            coef = SpacingScalar.coerce(coef)
            total = normalized.get(exponent, SpacingScalar.zero()) + coef
            if total.is_zero():
                normalized.pop(exponent, None)
            else:
                normalized[exponent] = total
        self._terms = dict(sorted(normalized.items()))

    # Constructors
    # ------------
    @classmethod
    def zero(cls, dim: int = 1) -> "LaurentPoly":
        return cls({}, dim)

    @classmethod
    def constant(cls, value: ScalarLike, dim: int = 1) -> "LaurentPoly":
        return cls({(0,) * dim: value}, dim)

    @classmethod
    def one(cls, dim: int = 1) -> "LaurentPoly":
        return cls.constant(1, dim)

    @classmethod
    def coordinate(cls, axis: int = 0, dim: int = 1) -> "LaurentPoly":
        exponent = [0] * dim
        exponent[axis] = 1
        return cls({tuple(exponent): 1}, dim)

    @classmethod
    def monomial(cls, exponent: Sequence[int], coefficient: ScalarLike = 1) -> "LaurentPoly":
        return cls({tuple(exponent): coefficient}, len(exponent))

    @classmethod
    def from_coefficients(cls, coefficients: Sequence[ScalarLike], axis: int = 0, dim: int = 1) -> "LaurentPoly":
        """Univariate polynomial sum_k c_k x_axis^k."""
        terms = {}
        for power, coef in enumerate(coefficients):
            exponent = [0] * dim
            exponent[axis] = power
            terms[tuple(exponent)] = coef
        return cls(terms, dim)

    # Inspection
    # ----------
    def items(self) -> Iterator[Tuple[Exponent, SpacingScalar]]:
        return iter(self._terms.items())

    def is_zero(self) -> bool:
        return not self._terms

    @property
    def degree(self) -> int:
        """Total degree, -1 for the zero polynomial."""
        return max((sum(e) for e in self._terms), default=-1)

    def degree_in(self, axis: int) -> int:
        return max((e[axis] for e in self._terms), default=-1)

    def coefficient(self, exponent: Sequence[int]) -> SpacingScalar:
        return self._terms.get(tuple(exponent), SpacingScalar.zero())

    def constant_term(self) -> SpacingScalar:
        return self.coefficient((0,) * self.dim)

    def is_univariate_in(self, axis: int) -> bool:
        return all(all(e == 0 for i, e in enumerate(exp) if i != axis) for exp in self._terms)

    def univariate_coefficients(self, axis: int = 0) -> List[SpacingScalar]:
        if not self.is_univariate_in(axis):
            logging.error(f"Polynomial {self} involves coordinates other than x{axis + 1}.")
            raise DomainError(f"Polynomial {self} is not univariate in coordinate {axis}.")
        coefficients = [SpacingScalar.zero()] * (self.degree_in(axis) + 1)
        for exponent, coef in self._terms.items():
            coefficients[exponent[axis]] = coef
        return coefficients

    # Arithmetic
    # ----------
    def _check_dim(self, other: "LaurentPoly"):
        if other.dim != self.dim:
            raise DomainError(f"Dimension mismatch: {self.dim} vs {other.dim}.")

    def _coerce(self, other) -> Optional["LaurentPoly"]:
        if isinstance(other, LaurentPoly):
            self._check_dim(other)
            return other
        if isinstance(other, (SpacingScalar, int, Fraction)) and not isinstance(other, bool):
            return LaurentPoly.constant(other, self.dim)
        return None

    def __add__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        merged: Dict[Exponent, SpacingScalar] = dict(self._terms)
        for exponent, coef in other._terms.items():
            merged[exponent] = merged.get(exponent, SpacingScalar.zero()) + coef
        return LaurentPoly(merged, self.dim)

    __radd__ = __add__

    def __neg__(self):
        return LaurentPoly({e: -c for e, c in self._terms.items()}, self.dim)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (SpacingScalar, int, Fraction)) and not isinstance(other, bool):
            return LaurentPoly({e: c * other for e, c in self._terms.items()}, self.dim)
        if not isinstance(other, LaurentPoly):
            return NotImplemented
        self._check_dim(other)
        result: Dict[Exponent, SpacingScalar] = {}
        for e1, c1 in self._terms.items():
            for e2, c2 in other._terms.items():
                exponent = tuple(x + y for x, y in zip(e1, e2))
                result[exponent] = result.get(exponent, SpacingScalar.zero()) + c1 * c2
        return LaurentPoly(result, self.dim)

    __rmul__ = __mul__

    def __pow__(self, exponent: int):
        if not isinstance(exponent, int) or exponent < 0:
            raise TypeError("Polynomials only take non-negative integer powers.")
        result, base = LaurentPoly.one(self.dim), self
        while exponent:
            if exponent & 1:
                result = result * base
            base = base * base
            exponent >>= 1
        return result

    def map_coefficients(self, fn) -> "LaurentPoly":
        return LaurentPoly({e: fn(c) for e, c in self._terms.items()}, self.dim)

    # Calculus and substitution
    # -------------------------
    def derivative(self, axis: int = 0, times: int = 1) -> "LaurentPoly":
        """Partial derivative d^times / dx_axis^times."""
        result: Dict[Exponent, SpacingScalar] = {}
        for exponent, coef in self._terms.items():
            power = exponent[axis]
            if power < times:
                continue
            factor = 1
            for step in range(times):
                factor *= power - step
            shifted = list(exponent)
            shifted[axis] -= times
            result[tuple(shifted)] = coef * factor
        return LaurentPoly(result, self.dim)

    def partial(self, orders: Sequence[int]) -> "LaurentPoly":
        result = self
        for axis, times in enumerate(orders):
            if times:
                result = result.derivative(axis, times)
        return result

    def compose(self, images: Sequence["LaurentPoly"]) -> "LaurentPoly":
        """Substitute x_i -> images[i]; all images share a target dimension."""
        if len(images) != self.dim:
            raise DomainError(f"Need {self.dim} images, got {len(images)}.")
        target = images[0].dim
        if any(image.dim != target for image in images):
            raise DomainError("Substitution images must share a dimension.")
        powers: List[Dict[int, LaurentPoly]] = [{0: LaurentPoly.one(target)} for _ in images]

        def power_of(axis: int, k: int) -> LaurentPoly:
            cache = powers[axis]
            if k not in cache:
                cache[k] = power_of(axis, k - 1) * images[axis]
            return cache[k]

        result = LaurentPoly.zero(target)
        for exponent, coef in self._terms.items():
            term = LaurentPoly.constant(coef, target)
            for axis, k in enumerate(exponent):
                if k:
                    term = term * power_of(axis, k)
            result = result + term
        return result

    def substitute(self, axis: int, image: "LaurentPoly") -> "LaurentPoly":
        self._check_dim(image)
        images = [LaurentPoly.coordinate(i, self.dim) for i in range(self.dim)]
        images[axis] = image
        return self.compose(images)

    def shift(self, axis: int, amount: ScalarLike) -> "LaurentPoly":
        """p(x + amount * e_axis)."""
        return self.substitute(axis, LaurentPoly.coordinate(axis, self.dim) + amount)

    def embed(self, dim: int, axes: Sequence[int]) -> "LaurentPoly":
        """Re-index coordinates: x_i becomes x_{axes[i]} of a dim-dimensional space."""
        if len(axes) != self.dim:
            raise DomainError(f"Need {self.dim} target axes, got {len(axes)}.")
        result = {}
        for exponent, coef in self._terms.items():
            target = [0] * dim
            for source_axis, power in enumerate(exponent):
                target[axes[source_axis]] += power
            result[tuple(target)] = coef
        return LaurentPoly(result, dim)

    def evaluate(self, point: Sequence, spacings: Sequence = ()):
        """Numeric value at a coordinate point; exact when inputs are Fractions."""
        if len(point) != self.dim:
            raise DomainError(f"Point has {len(point)} coordinates, polynomial has {self.dim}.")
        total = 0
        for exponent, coef in self._terms.items():
            value = coef.evaluate(spacings)
            for base, power in zip(point, exponent):
                if power:
                    value = value * (Fraction(base) if isinstance(base, int) else base) ** power
            total = total + value
        return Fraction(total) if isinstance(total, int) else total

    def evaluate_spacings(self, spacings: Sequence[Fraction]) -> "LaurentPoly":
        """Replace the spacing symbols by rational values, keeping coordinates symbolic."""
        return self.map_coefficients(lambda c: _substitute_scalar(c, spacings))

    # Comparison / serialization
    # --------------------------
    def __eq__(self, other):
        if isinstance(other, LaurentPoly):
            return self.dim == other.dim and self._terms == other._terms
        if isinstance(other, (SpacingScalar, int, Fraction)) and not isinstance(other, bool):
            return self == LaurentPoly.constant(other, self.dim)
        return NotImplemented

    def __hash__(self):
        return hash((self.dim, tuple(self._terms.items())))

    def to_json(self) -> dict:
        return {
            "dim": self.dim,
            "terms": [{"exp": list(exponent), "coef": coef.to_json()} for exponent, coef in self._terms.items()],
        }

    @classmethod
    def from_json(cls, payload: Mapping) -> "LaurentPoly":
        terms = {tuple(term["exp"]): SpacingScalar.from_json(term["coef"]) for term in payload["terms"]}
        return cls(terms, int(payload["dim"]))

    def __str__(self):
        if not self._terms:
            return "0"
        pieces = []
        for exponent, coef in sorted(self._terms.items(), key=lambda kv: (-sum(kv[0]), [-e for e in kv[0]])):
            factors = []
            for axis, power in enumerate(exponent):
                name = _coordinate_name(axis, self.dim)
                if power == 1:
                    factors.append(name)
                elif power:
                    factors.append(f"{name}^{power}")
            monomial = "*".join(factors)
            negative = False
            if coef.is_monomial():
                (_, _), value = next(coef.items())
                negative = value < 0
                magnitude = -coef if negative else coef
                coef_text = str(magnitude)
            else:
                coef_text = f"({coef})"
            if not monomial:
                body = coef_text
            elif coef_text == "1":
                body = monomial
            else:
                body = f"{coef_text}*{monomial}"
            pieces.append(("-" if negative else "+", body))
        text = ("-" if pieces[0][0] == "-" else "") + pieces[0][1]
        for sign, body in pieces[1:]:
            text += f" {sign} {body}"
        return text

    def __repr__(self):
        return f"LaurentPoly({self})"


def _substitute_scalar(scalar: SpacingScalar, spacings: Sequence[Fraction]) -> SpacingScalar:
    result = SpacingScalar.zero()
    for (ipow, powers), coef in scalar.items():
        value = coef
        for base, power in zip(spacings, powers):
            value *= Fraction(base) ** power
        leftover = powers[len(spacings):]
        key_powers = (0,) * len(spacings) + tuple(leftover) if leftover else ()
        result = result + SpacingScalar({(ipow, key_powers): value})
    return result


def monomial_basis(dim: int, max_degree: int) -> List[LaurentPoly]:
    """All monic monomials of total degree <= max_degree."""
    return [
        LaurentPoly.monomial(exponent)
        for exponent in product(range(max_degree + 1), repeat=dim)
        if sum(exponent) <= max_degree
    ]


# Abstract Base Class for Stirling recurrences
class StirlingRecurrence(ABC):
    kind: str

    @abstractmethod
    def next_row(self, n: int, previous: List[int]) -> List[int]:
        """
        Builds row n of the triangle from row n - 1.

        Parameters:
        n (int): The row index, n >= 1.
        previous (List[int]): Row n - 1, of length n.

        Returns:
        List[int]: Row n, of length n + 1.
        """
        pass


# Concrete Strategy for S(n, k) = k S(n-1, k) + S(n-1, k-1)
class SecondKindRecurrence(StirlingRecurrence):
    kind = "second"

    def next_row(self, n: int, previous: List[int]) -> List[int]:
        row = [0] * (n + 1)
        for k in range(1, n + 1):
            row[k] = (k * previous[k] if k < n else 0) + previous[k - 1]
        return row


# Concrete Strategy for signed s(n, k) = s(n-1, k-1) - (n-1) s(n-1, k)
class FirstKindRecurrence(StirlingRecurrence):
    kind = "first"

    def next_row(self, n: int, previous: List[int]) -> List[int]:
        row = [0] * (n + 1)
        for k in range(1, n + 1):
            row[k] = previous[k - 1] - ((n - 1) * previous[k] if k < n else 0)
        return row


# Context Class holding a memoized triangle
class StirlingTable:
    def __init__(self, recurrence: StirlingRecurrence, cap: Optional[int] = None):
        """
        Initializes a lazily grown Stirling triangle.

        Parameters:
        recurrence (StirlingRecurrence): Row recurrence for the wanted kind.
        cap (Optional[int]): Largest row index served; defaults to the configured cap.
        """
        self._recurrence = recurrence
        self.cap = cap if cap is not None else load_config().exact.stirling_cap
        self._rows: List[List[int]] = [[1]]
        self._lock = threading.Lock()

    @property
    def kind(self) -> str:
        return self._recurrence.kind

    def value(self, n: int, k: int) -> Fraction:
        if n < 0 or k < 0 or k > n:
            logging.error(f"Stirling {self.kind} kind requested outside 0 <= k <= n: ({n}, {k}).")
            raise DomainError(f"Stirling numbers need 0 <= k <= n, got n={n}, k={k}.")
        if n > self.cap:
            logging.error(f"Stirling row {n} exceeds the configured cap {self.cap}.")
            raise DomainError(f"Stirling row {n} exceeds the configured cap {self.cap}.")
        if n >= len(self._rows):
            with self._lock:
                while len(self._rows) <= n:
                    self._rows.append(self._recurrence.next_row(len(self._rows), self._rows[-1]))
        return Fraction(self._rows[n][k])

    def row(self, n: int) -> List[Fraction]:
        return [self.value(n, k) for k in range(n + 1)]


_SECOND_KIND = StirlingTable(SecondKindRecurrence())
_FIRST_KIND = StirlingTable(FirstKindRecurrence())


def stirling2(n: int, k: int) -> Fraction:
    """Stirling number of the second kind S(n, k)."""
    return _SECOND_KIND.value(n, k)


def stirling1(n: int, k: int) -> Fraction:
    """Signed Stirling number of the first kind s(n, k)."""
    return _FIRST_KIND.value(n, k)


def falling_factorial(k: int, spacing: ScalarLike = A, axis: int = 0, dim: int = 1) -> LaurentPoly:
    """
    Expands x^(k) = x (x - h) ... (x - (k-1) h) in the monomial basis.

    Parameters:
    k (int): Number of factors, k >= 0.
    spacing (ScalarLike): The step h; the symbol a by default.
    axis (int): Coordinate the factorial is taken in.
    dim (int): Dimension of the resulting polynomial.

    Returns:
    LaurentPoly: The expanded falling factorial.
    """
    if k < 0:
        raise DomainError(f"Falling factorial order must be non-negative, got {k}.")
    spacing = SpacingScalar.coerce(spacing)
    x = LaurentPoly.coordinate(axis, dim)
    result = LaurentPoly.one(dim)
    for j in range(k):
        result = result * (x - spacing * j)
    return result


def monomial_to_factorial(
    p: LaurentPoly, axis: Optional[int] = None, spacing: ScalarLike = A
) -> List[SpacingScalar]:
    """
    Coefficients F with p = sum_k F_k x^(k), using x^n = sum_k S(n,k) h^(n-k) x^(k).

    Parameters:
    p (LaurentPoly): Polynomial univariate in the chosen coordinate.
    axis (Optional[int]): The coordinate; may be omitted for 1-dimensional input.
    spacing (ScalarLike): Factorial step h.

    Returns:
    List[SpacingScalar]: F_0 .. F_deg.
    """
    if axis is None:
        if p.dim != 1:
            logging.error("Factorial conversion of a multivariate polynomial needs a coordinate.")
            raise DomainError("Multivariate polynomial given without a designated coordinate.")
        axis = 0
    spacing = SpacingScalar.coerce(spacing)
    monomial_coefficients = p.univariate_coefficients(axis)
    if not monomial_coefficients:
        return []
    result = [SpacingScalar.zero() for _ in monomial_coefficients]
    for n, coef in enumerate(monomial_coefficients):
        if coef.is_zero():
            continue
        for k in range(n + 1):
            weight = stirling2(n, k)
            if weight:
                result[k] = result[k] + coef * weight * spacing ** (n - k)
    return result


def factorial_to_monomial(
    coefficients: Sequence[ScalarLike], spacing: ScalarLike = A, axis: int = 0, dim: int = 1
) -> LaurentPoly:
    """Inverse of ``monomial_to_factorial``: sum_k F_k x^(k) via the signed first kind."""
    spacing = SpacingScalar.coerce(spacing)
    monomial_coefficients = [SpacingScalar.zero() for _ in coefficients]
    for k, coef in enumerate(coefficients):
        coef = SpacingScalar.coerce(coef)
        if coef.is_zero():
            continue
        for j in range(k + 1):
            weight = stirling1(k, j)
            if weight:
                monomial_coefficients[j] = monomial_coefficients[j] + coef * weight * spacing ** (k - j)
    return LaurentPoly.from_coefficients(monomial_coefficients, axis, dim)
