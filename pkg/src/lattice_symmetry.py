import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations, permutations, product
from math import pi
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import sympy
from scipy.optimize import brentq

from src.config import load_config
from src.exact_core import LaurentPoly, SpacingScalar, monomial_basis
from src.exceptions import DomainError, UmbralError
from src.operator_algebra import (
    NormalOrderedOp,
    ShiftInvariantOp,
    make_delta,
    rodrigues_xhat,
    shift_op,
    symmetric_xhat,
)

# Setup logging configuration
logging.basicConfig(level=logging.INFO, format="%(asctime)s - %(levelname)s - %(message)s")

I_UNIT = SpacingScalar.imag()


def levi_civita(i: int, j: int, k: int) -> int:
    return int(sympy.LeviCivita(i, j, k))


@dataclass(frozen=True)
class LatticeSpecND:
    """Hypercubic lattice with one spacing per dimension."""

    dimension: int
    spacings: Tuple[SpacingScalar, ...]

    def __post_init__(self):
        if self.dimension < 1 or len(self.spacings) != self.dimension:
            raise DomainError(f"Need {self.dimension} spacings for a {self.dimension}-dimensional lattice.")

    @classmethod
    def symbolic(cls, dimension: int) -> "LatticeSpecND":
        """Spacings a1 .. an as independent symbols."""
        return cls(dimension, tuple(SpacingScalar.symbol(i) for i in range(dimension)))

    @classmethod
    def numeric(cls, spacings: Sequence) -> "LatticeSpecND":
        values = tuple(SpacingScalar.const(Fraction(s)) for s in spacings)
        if any(v.constant_value() <= 0 for v in values):
            raise DomainError(f"Numeric spacings must be positive, got {list(spacings)}.")
        return cls(len(values), values)

    def is_numeric(self) -> bool:
        return all(s.is_constant() for s in self.spacings)

    def numeric_spacings(self) -> Tuple[Fraction, ...]:
        if not self.is_numeric():
            raise DomainError("This operation needs numeric spacings.")
        return tuple(s.constant_value() for s in self.spacings)


# Abstract Base Class for lattice variants
class LatticeVariant(ABC):
    name: str

    @abstractmethod
    def delta(self, spacing: SpacingScalar) -> ShiftInvariantOp:
        """Delta operator along one axis."""
        pass

    @abstractmethod
    def xhat(self, delta: ShiftInvariantOp, axis: int, dim: int, order: int) -> NormalOrderedOp:
        """Position operator along one axis."""
        pass

    @abstractmethod
    def radial_term(self, coordinate: Fraction, spacing: Fraction) -> Fraction:
        """Contribution of one coordinate to sum_k xhat_k^2 1."""
        pass

    @abstractmethod
    def reflect(self, index: int) -> int:
        """Image of the lattice index n under the coordinate reflection."""
        pass

    @abstractmethod
    def zone_symbol(self, kappa: np.ndarray, spacing: float) -> np.ndarray:
        """Real, dimensionless momentum symbol of the delta operator; its zeros are the species."""
        pass

    def box(self, radius: int) -> range:
        return range(-radius, radius + 1)


# Concrete Strategy for forward differences with x S^-1
class ForwardBasicVariant(LatticeVariant):
    name = "forward-basic"

    def delta(self, spacing: SpacingScalar) -> ShiftInvariantOp:
        return make_delta("forward", spacing)

    def xhat(self, delta: ShiftInvariantOp, axis: int, dim: int, order: int) -> NormalOrderedOp:
        return rodrigues_xhat(delta, axis, dim, order)

    def radial_term(self, coordinate: Fraction, spacing: Fraction) -> Fraction:
        return coordinate * (coordinate - spacing)

    def reflect(self, index: int) -> int:
        # x -> a - x
        return 1 - index

    def zone_symbol(self, kappa: np.ndarray, spacing: float) -> np.ndarray:
        # |e^{i a k} - 1| = 2 |sin(a k / 2)|
        return np.sin(spacing * kappa / 2)

    def box(self, radius: int) -> range:
        return range(-radius + 1, radius + 1)


# Concrete Strategy for central differences with the symmetric xhat
class CentralSymmetricVariant(LatticeVariant):
    name = "central-symmetric"

    def delta(self, spacing: SpacingScalar) -> ShiftInvariantOp:
        return make_delta("central", spacing)

    def xhat(self, delta: ShiftInvariantOp, axis: int, dim: int, order: int) -> NormalOrderedOp:
        return symmetric_xhat(delta, axis, dim, order)

    def radial_term(self, coordinate: Fraction, spacing: Fraction) -> Fraction:
        return coordinate * coordinate - spacing * spacing / 2

    def reflect(self, index: int) -> int:
        return -index

    def zone_symbol(self, kappa: np.ndarray, spacing: float) -> np.ndarray:
        return np.sin(spacing * kappa)


# Concrete Strategy for the continuum pair (D, y)
class ContinuumVariant(LatticeVariant):
    name = "continuum"

    def delta(self, spacing: SpacingScalar) -> ShiftInvariantOp:
        return make_delta("derivative")

    def xhat(self, delta: ShiftInvariantOp, axis: int, dim: int, order: int) -> NormalOrderedOp:
        return NormalOrderedOp.coordinate(axis, dim)

    def radial_term(self, coordinate: Fraction, spacing: Fraction) -> Fraction:
        return coordinate * coordinate

    def reflect(self, index: int) -> int:
        return -index

    def zone_symbol(self, kappa: np.ndarray, spacing: float) -> np.ndarray:
        return spacing * kappa


# Factory to create lattice variants
class LatticeVariantFactory:
    @staticmethod
    def get_variant(name: str) -> LatticeVariant:
        """Returns the lattice variant registered under ``name``."""
        if name == "forward-basic":
            return ForwardBasicVariant()
        elif name == "central-symmetric":
            return CentralSymmetricVariant()
        elif name == "continuum":
            return ContinuumVariant()
        else:
            logging.error(f"Unknown lattice variant: {name}")
            raise DomainError(f"Unknown lattice variant: {name}")


def _default_order(order: Optional[int], degree: Optional[int] = None) -> int:
    if order is not None:
        return order
    cfg = load_config().operators
    return (degree if degree is not None else cfg.test_degree) + cfg.order_slack


@dataclass(frozen=True)
class NDOperators:
    variant: str
    deltas: Tuple[ShiftInvariantOp, ...]
    Q: Tuple[NormalOrderedOp, ...]
    S: Tuple[NormalOrderedOp, ...]
    xhat: Tuple[NormalOrderedOp, ...]

    @property
    def dim(self) -> int:
        return len(self.Q)


def build_nd_ops(spec: LatticeSpecND, variant: str = "forward-basic", order: Optional[int] = None) -> NDOperators:
    """
    Per-dimension delta, shift and position operators.

    Parameters:
    spec (LatticeSpecND): Lattice description.
    variant (str): 'forward-basic', 'central-symmetric' or 'continuum'.
    order (Optional[int]): Exact D-order carried by the operators.

    Returns:
    NDOperators: Q_i, S_i and xhat_i as normal-ordered operators.
    """
    strategy = LatticeVariantFactory.get_variant(variant)
    order = _default_order(order)
    dim = spec.dimension
    deltas, qs, shifts, xhats = [], [], [], []
    for axis, spacing in enumerate(spec.spacings):
        delta = strategy.delta(spacing)
        deltas.append(delta)
        qs.append(NormalOrderedOp.from_shift_invariant(delta, axis, dim, order))
        shifts.append(NormalOrderedOp.from_shift_invariant(shift_op(spacing), axis, dim, order))
        xhats.append(strategy.xhat(delta, axis, dim, order))
    logging.info(f"Built {variant} operators on a {dim}-dimensional lattice (order {order}).")
    return NDOperators(variant, tuple(deltas), tuple(qs), tuple(shifts), tuple(xhats))


@dataclass(frozen=True)
class CommutatorCheck:
    relation: str
    status: str
    max_residual_degree: int

    @property
    def holds(self) -> bool:
        return self.status == "holds"

    def as_dict(self) -> dict:
        return {"relation": self.relation, "status": self.status, "max_residual_degree": self.max_residual_degree}


def _check_relation(name: str, residual: NormalOrderedOp, degree: int) -> CommutatorCheck:
    structural = residual.is_zero()
    on_monomials = all(residual.apply(p).is_zero() for p in monomial_basis(residual.dim, degree))
    return CommutatorCheck(name, "holds" if structural and on_monomials else "fails", degree)


def ccr_report(ops: NDOperators, degree: Optional[int] = None) -> List[CommutatorCheck]:
    """[Q_i, xhat_j] = delta_ij, [Q_i, Q_j] = 0 and [xhat_i, xhat_j] = 0."""
    degree = degree if degree is not None else load_config().operators.test_degree
    checks = []
    dim = ops.dim
    for i, j in product(range(dim), repeat=2):
        expected = NormalOrderedOp.identity(dim) if i == j else NormalOrderedOp.zero(dim)
        bracket = ops.Q[i] * ops.xhat[j] - ops.xhat[j] * ops.Q[i]
        checks.append(_check_relation(f"[Q{i + 1}, xhat{j + 1}]", bracket - expected, degree))
    for i, j in combinations(range(dim), 2):
        checks.append(_check_relation(f"[Q{i + 1}, Q{j + 1}]", ops.Q[i] * ops.Q[j] - ops.Q[j] * ops.Q[i], degree))
        checks.append(
            _check_relation(
                f"[xhat{i + 1}, xhat{j + 1}]", ops.xhat[i] * ops.xhat[j] - ops.xhat[j] * ops.xhat[i], degree
            )
        )
    return checks


def angular_momentum(
    spec: LatticeSpecND, variant: str = "forward-basic", order: Optional[int] = None
) -> Tuple[NormalOrderedOp, NormalOrderedOp, NormalOrderedOp]:
    """L_i = -i sum_jk eps_ijk xhat_j Q_k on a 3-dimensional lattice."""
    if spec.dimension != 3:
        logging.error(f"Angular momentum requested on a {spec.dimension}-dimensional lattice.")
        raise DomainError(f"Angular momentum needs dimension 3, got {spec.dimension}.")
    ops = build_nd_ops(spec, variant, order)
    generators = []
    for i in range(3):
        total = NormalOrderedOp.zero(3)
        for j, k in permutations(range(3), 2):
            eps = levi_civita(i, j, k)
            if eps:
                total = total + (ops.xhat[j] * ops.Q[k]).scale(-I_UNIT * eps)
        generators.append(total)
    return tuple(generators)


def verify_so3(generators: Sequence[NormalOrderedOp], degree: Optional[int] = None, sign: int = 1) -> List[CommutatorCheck]:
    """[L_i, L_j] - sign * i eps_ijk L_k, structurally and on monomials up to ``degree``."""
    degree = degree if degree is not None else load_config().operators.test_degree
    checks = []
    for i, j in combinations(range(3), 2):
        k = 3 - i - j
        bracket = generators[i] * generators[j] - generators[j] * generators[i]
        expected = generators[k].scale(I_UNIT * (sign * levi_civita(i, j, k)))
        checks.append(_check_relation(f"[L{i + 1}, L{j + 1}]", bracket - expected, degree))
    return checks


def so3_convention(generators: Sequence[NormalOrderedOp], degree: Optional[int] = None) -> str:
    """Reports whether the generators close with +i or -i structure constants."""
    if all(c.holds for c in verify_so3(generators, degree, 1)):
        return "+i"
    if all(c.holds for c in verify_so3(generators, degree, -1)):
        return "-i"
    return "none"


# Lattice spheres
# ---------------
def lattice_sphere(
    spec: LatticeSpecND, c, variant: str = "forward-basic", radius: int = 4
) -> List[Tuple[Fraction, ...]]:
    """
    Lattice points with sum_k xhat_k^2 1 = c inside a search box.

    Parameters:
    spec (LatticeSpecND): Lattice with numeric spacings.
    c: Target value (rational).
    variant (str): 'forward-basic' or 'central-symmetric'.
    radius (int): Half-width of the search box in lattice steps.

    Returns:
    List[Tuple[Fraction, ...]]: Matching points, in coordinates (multiples of a_i).
    """
    strategy = LatticeVariantFactory.get_variant(variant)
    spacings = spec.numeric_spacings()
    target = Fraction(c)
    if radius < 0:
        raise DomainError(f"Search radius must be non-negative, got {radius}.")
    points = []
    for indices in product(strategy.box(radius), repeat=spec.dimension):
        coordinates = tuple(n * a for n, a in zip(indices, spacings))
        if sum(strategy.radial_term(x, a) for x, a in zip(coordinates, spacings)) == target:
            points.append(coordinates)
    logging.info(f"Found {len(points)} lattice points with radial value {target}.")
    return points


@dataclass(frozen=True)
class SphereSymmetryReport:
    closed_under_swaps: bool
    closed_under_reflections: bool
    orbits: List[List[Tuple[Fraction, ...]]] = field(default_factory=list)

    @property
    def closed(self) -> bool:
        return self.closed_under_swaps and self.closed_under_reflections


def sphere_symmetries_check(
    points: Sequence[Tuple[Fraction, ...]], spec: LatticeSpecND, variant: str = "forward-basic"
) -> SphereSymmetryReport:
    """Closure of a point set under coordinate swaps and per-coordinate reflections."""
    spacings = spec.numeric_spacings()
    if len(set(spacings)) > 1:
        logging.error("Sphere symmetry check requested for unequal spacings.")
        raise DomainError("Sphere symmetries need equal spacings.")
    strategy = LatticeVariantFactory.get_variant(variant)
    a = spacings[0]
    point_set = set(points)

    def swaps(point):
        for i, j in combinations(range(len(point)), 2):
            swapped = list(point)
            swapped[i], swapped[j] = swapped[j], swapped[i]
            yield tuple(swapped)

    def reflections(point):
        for i in range(len(point)):
            reflected = list(point)
            reflected[i] = strategy.reflect(int(point[i] / a)) * a
            yield tuple(reflected)

    closed_swaps = all(image in point_set for p in points for image in swaps(p))
    closed_reflections = all(image in point_set for p in points for image in reflections(p))

    orbits, seen = [], set()
    for start in sorted(point_set):
        if start in seen:
            continue
        orbit, frontier = {start}, [start]
        while frontier:
            current = frontier.pop()
            for image in list(swaps(current)) + list(reflections(current)):
                if image in point_set and image not in orbit:
                    orbit.add(image)
                    frontier.append(image)
        seen |= orbit
        orbits.append(sorted(orbit))
    return SphereSymmetryReport(closed_swaps, closed_reflections, orbits)


# Poincare representation
# -----------------------
GENERATOR_NAMES = ("P0", "P1", "P2", "P3", "M1", "M2", "M3", "L1", "L2", "L3")


@dataclass(frozen=True)
class PoincareRep:
    generators: Dict[str, NormalOrderedOp]
    time_derivative: NormalOrderedOp
    spatial_deltas: Tuple[NormalOrderedOp, ...]
    kappa: Fraction
    variant: str
    discrete_time: bool

    def casimir(self, form: str = "displayed") -> NormalOrderedOp:
        """
        Quadratic element built from the time derivative and the Q_k.

        'displayed' is -d_t^2 + sum_k Q_k^2; 'kappa' is kappa d_t^2 + sum_k Q_k^2,
        which commutes with every generator for any kappa.
        """
        spatial = NormalOrderedOp.zero(4)
        for q in self.spatial_deltas:
            spatial = spatial + q * q
        dt2 = self.time_derivative * self.time_derivative
        if form == "displayed":
            return spatial - dt2
        if form == "kappa":
            return spatial + dt2.scale(self.kappa)
        raise DomainError(f"Unknown Casimir form: {form}")


def poincare_rep(
    spec: LatticeSpecND,
    variant: str = "central-symmetric",
    kappa=Fraction(1),
    discrete_time: bool = False,
    order: Optional[int] = None,
) -> PoincareRep:
    """
    P_mu = -i d/dy_mu, M_i = eps_ijk y_j P_k, L_i = y_0 P_i - kappa y_i P_0 with
    y_i -> xhat_i and d/dy_i -> Q_i on the spatial axes 1..3 (axis 0 is time).
    """
    if spec.dimension != 3:
        raise DomainError(f"Poincare representation needs 3 spatial dimensions, got {spec.dimension}.")
    strategy = LatticeVariantFactory.get_variant(variant)
    order = _default_order(order)
    kappa = Fraction(kappa)
    if discrete_time:
        time_delta = strategy.delta(SpacingScalar.symbol(3))
        dt = NormalOrderedOp.from_shift_invariant(time_delta, 0, 4, order)
        y0 = strategy.xhat(time_delta, 0, 4, order)
    else:
        dt = NormalOrderedOp.derivative(0, 4)
        y0 = NormalOrderedOp.coordinate(0, 4)
    qs, xs = [], []
    for k, spacing in enumerate(spec.spacings):
        delta = strategy.delta(spacing)
        qs.append(NormalOrderedOp.from_shift_invariant(delta, k + 1, 4, order))
        xs.append(strategy.xhat(delta, k + 1, 4, order))

    minus_i = -I_UNIT
    momenta = [dt.scale(minus_i)] + [q.scale(minus_i) for q in qs]
    generators = {f"P{mu}": momenta[mu] for mu in range(4)}
    for i in range(3):
        total = NormalOrderedOp.zero(4)
        for j, k in permutations(range(3), 2):
            eps = levi_civita(i, j, k)
            if eps:
                total = total + (xs[j] * momenta[k + 1]).scale(eps)
        generators[f"M{i + 1}"] = total
        generators[f"L{i + 1}"] = y0 * momenta[i + 1] - (xs[i] * momenta[0]).scale(kappa)
    logging.info(f"Built Poincare generators ({variant}, kappa = {kappa}, discrete time = {discrete_time}).")
    return PoincareRep(generators, dt, tuple(qs), kappa, variant, discrete_time)


def _flatten(op: NormalOrderedOp) -> Dict[Tuple, SpacingScalar]:
    flat = {}
    for m, series in op.items():
        for e, coef in series.items():
            flat[(m, e)] = coef
    return flat


def _to_sympy(value: SpacingScalar):
    if not all(powers == () for (_, powers), _ in value.items()):
        raise DomainError(f"Structure constants must be numeric, got {value}.")
    real = value.real_part()
    imag = value.imag_part()
    re = real.constant_value() if not real.is_zero() else Fraction(0)
    im = imag.constant_value() if not imag.is_zero() else Fraction(0)
    return sympy.Rational(re.numerator, re.denominator) + sympy.I * sympy.Rational(im.numerator, im.denominator)


def _from_sympy(value) -> SpacingScalar:
    re, im = sympy.re(value), sympy.im(value)
    return SpacingScalar.const(Fraction(int(re.p), int(re.q))) + I_UNIT * Fraction(int(im.p), int(im.q))


def structure_constants(rep: PoincareRep) -> Dict[Tuple[str, str], Optional[Dict[str, SpacingScalar]]]:
    """
    Expresses every commutator of generators as a combination of generators.

    Entries are None when a commutator leaves the span of the generators.
    """
    flats = {name: _flatten(rep.generators[name]) for name in GENERATOR_NAMES}
    constants = {}
    for left, right in combinations(GENERATOR_NAMES, 2):
        bracket = rep.generators[left] * rep.generators[right] - rep.generators[right] * rep.generators[left]
        target = _flatten(bracket)
        keys = sorted(set(target).union(*[set(f) for f in flats.values()]))
        matrix = sympy.Matrix(
            [[_to_sympy(flats[name].get(key, SpacingScalar.zero())) for name in GENERATOR_NAMES] for key in keys]
        )
        rhs = sympy.Matrix([_to_sympy(target.get(key, SpacingScalar.zero())) for key in keys])
        try:
            solution, params = matrix.gauss_jordan_solve(rhs)
        except ValueError:
            constants[(left, right)] = None
            continue
        solution = solution.subs({p: 0 for p in params})
        constants[(left, right)] = {
            name: _from_sympy(sympy.nsimplify(solution[idx]))
            for idx, name in enumerate(GENERATOR_NAMES)
            if solution[idx] != 0
        }
    return constants


@dataclass(frozen=True)
class PoincareClosureReport:
    structure_constants: Dict[Tuple[str, str], Optional[Dict[str, SpacingScalar]]]
    checks: List[CommutatorCheck]
    rotation_convention: str

    @property
    def closes(self) -> bool:
        return all(c is not None for c in self.structure_constants.values()) and all(c.holds for c in self.checks)


def poincare_closure_report(rep: PoincareRep, degree: Optional[int] = None) -> PoincareClosureReport:
    """
    Checks that the lattice generators close with the continuum structure constants.

    The constants are computed from the continuum representation (Q = D, xhat = y)
    with the same kappa and time treatment.
    """
    degree = degree if degree is not None else load_config().operators.test_degree
    continuum = poincare_rep(LatticeSpecND.symbolic(3), "continuum", rep.kappa, False)
    constants = structure_constants(continuum)
    checks = []
    for (left, right), combination in constants.items():
        bracket = rep.generators[left] * rep.generators[right] - rep.generators[right] * rep.generators[left]
        expected = NormalOrderedOp.zero(4)
        for name, coef in (combination or {}).items():
            expected = expected + rep.generators[name].scale(coef)
        checks.append(_check_relation(f"[{left}, {right}]", bracket - expected, degree))
    m12 = constants.get(("M1", "M2")) or {}
    if m12.get("M3") == I_UNIT and len(m12) == 1:
        convention = "+i"
    elif m12.get("M3") == -I_UNIT and len(m12) == 1:
        convention = "-i"
    else:
        convention = "none"
    logging.info(f"Poincare closure checked on degree <= {degree}; [M1, M2] convention {convention}.")
    return PoincareClosureReport(constants, checks, convention)


def casimir_report(rep: PoincareRep, form: str = "displayed", degree: Optional[int] = None) -> Dict[str, bool]:
    """For each generator G, whether [C, G] vanishes structurally and on test monomials."""
    degree = degree if degree is not None else load_config().operators.test_degree
    casimir = rep.casimir(form)
    return {
        name: _check_relation(f"[C, {name}]", casimir * op - op * casimir, degree).holds
        for name, op in rep.generators.items()
    }


# Dirac factorization
# -------------------
MINKOWSKI = (1, -1, -1, -1)


def _scalar_matrix(rows) -> np.ndarray:
    matrix = np.empty((len(rows), len(rows[0])), dtype=object)
    for r, row in enumerate(rows):
        for c, value in enumerate(row):
            matrix[r, c] = SpacingScalar.coerce(value)
    return matrix


@dataclass(frozen=True)
class GammaSet:
    """Four 4x4 matrices with Gaussian-rational entries."""

    matrices: Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]

    @classmethod
    def dirac_basis(cls) -> "GammaSet":
        i = I_UNIT
        zero, one = SpacingScalar.zero(), SpacingScalar.one()
        sigmas = (
            [[zero, one], [one, zero]],
            [[zero, -i], [i, zero]],
            [[one, zero], [zero, -one]],
        )
        gamma0 = _scalar_matrix([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, -1, 0], [0, 0, 0, -1]])
        gammas = [gamma0]
        for sigma in sigmas:
            rows = [[zero] * 4 for _ in range(4)]
            for r in range(2):
                for c in range(2):
                    rows[r][c + 2] = sigma[r][c]
                    rows[r + 2][c] = -sigma[r][c]
            gammas.append(_scalar_matrix(rows))
        return cls(tuple(gammas))

    def conjugated(self, rotation: np.ndarray) -> "GammaSet":
        """R gamma R^T for a rational orthogonal R."""
        transpose = rotation.T
        return GammaSet(tuple(rotation @ g @ transpose for g in self.matrices))

    def is_valid(self) -> bool:
        identity = _scalar_matrix([[1 if r == c else 0 for c in range(4)] for r in range(4)])
        for mu, nu in product(range(4), repeat=2):
            anticommutator = self.matrices[mu] @ self.matrices[nu] + self.matrices[nu] @ self.matrices[mu]
            expected = identity * (2 * MINKOWSKI[mu] if mu == nu else 0)
            if not all(anticommutator[r, c] == expected[r, c] for r, c in product(range(4), repeat=2)):
                return False
        return True


def cayley_rotation(seed: int = 0) -> np.ndarray:
    """Rational orthogonal 4x4 matrix (I - K)(I + K)^-1 from a skew-symmetric K."""
    rng = np.random.default_rng(seed)
    skew = sympy.zeros(4, 4)
    for r, c in combinations(range(4), 2):
        value = sympy.Rational(int(rng.integers(-3, 4)), int(rng.integers(1, 4)))
        skew[r, c], skew[c, r] = value, -value
    identity = sympy.eye(4)
    rotation = (identity - skew) * (identity + skew).inv()
    return _scalar_matrix(
        [[Fraction(int(sympy.Rational(rotation[r, c]).p), int(sympy.Rational(rotation[r, c]).q)) for c in range(4)] for r in range(4)]
    )


@dataclass(frozen=True)
class DiracReport:
    holds: bool
    failing_entries: List[Tuple[int, int]]


def dirac_factorization_check(
    gammas: GammaSet,
    spec: LatticeSpecND,
    m=Fraction(1),
    variant: str = "central-symmetric",
    order: Optional[int] = None,
) -> DiracReport:
    """
    (i g^0 d_t + i g^k Q_k - m)(i g^0 d_t + i g^k Q_k + m) = -d_t^2 + sum Q_k^2 - m^2,
    checked entry by entry as normal-ordered operators.
    """
    if not gammas.is_valid():
        logging.error("Gamma matrices violate the Clifford relations.")
        raise DomainError("Gamma matrices do not satisfy {g^mu, g^nu} = 2 eta^{mu nu}.")
    if spec.dimension != 3:
        raise DomainError(f"Dirac factorization needs 3 spatial dimensions, got {spec.dimension}.")
    strategy = LatticeVariantFactory.get_variant(variant)
    order = _default_order(order)
    mass = SpacingScalar.coerce(Fraction(m))
    derivatives = [NormalOrderedOp.derivative(0, 4)] + [
        NormalOrderedOp.from_shift_invariant(strategy.delta(spacing), k + 1, 4, order)
        for k, spacing in enumerate(spec.spacings)
    ]

    def dirac_matrix(sign: int):
        entries = np.empty((4, 4), dtype=object)
        for r, c in product(range(4), repeat=2):
            total = NormalOrderedOp.zero(4)
            for mu in range(4):
                coef = gammas.matrices[mu][r, c]
                if coef:
                    total = total + derivatives[mu].scale(I_UNIT * coef)
            if r == c:
                total = total + NormalOrderedOp.scalar(mass * sign, 4)
            entries[r, c] = total
        return entries

    left, right = dirac_matrix(-1), dirac_matrix(1)
    laplacian = NormalOrderedOp.zero(4) - derivatives[0] * derivatives[0]
    for q in derivatives[1:]:
        laplacian = laplacian + q * q
    laplacian = laplacian - NormalOrderedOp.scalar(mass * mass, 4)
    failing = []
    for r, c in product(range(4), repeat=2):
        entry = NormalOrderedOp.zero(4)
        for t in range(4):
            entry = entry + left[r, t] * right[t, c]
        expected = laplacian if r == c else NormalOrderedOp.zero(4)
        if not entry.equals(expected):
            failing.append((r, c))
    logging.info(f"Dirac factorization: {16 - len(failing)}/16 entries agree.")
    return DiracReport(not failing, failing)


# Doubling
# --------
@dataclass(frozen=True)
class DoublingReport:
    count: int
    zeros: List[Tuple[float, ...]]


def _zone_zeros(variant: LatticeVariant, spacing: float, samples: int, tol: float) -> List[float]:
    """Zeros of the zone symbol on (-pi/a, pi/a]: exact grid hits plus brentq on every sign change."""
    edge = pi / spacing
    grid = np.linspace(-edge, edge, samples + 1)
    values = variant.zone_symbol(grid, spacing)

    def symbol(kappa: float) -> float:
        return float(variant.zone_symbol(np.asarray(kappa), spacing))

    candidates = [float(k) for k, v in zip(grid, values) if abs(v) <= tol]
    for left, right, f_left, f_right in zip(grid[:-1], grid[1:], values[:-1], values[1:]):
        if f_left * f_right < 0:
            candidates.append(brentq(symbol, left, right, xtol=1e-15 * edge))

    zeros: List[float] = []
    for kappa in sorted(candidates):
        if np.isclose(kappa, -edge, rtol=0.0, atol=1e-9 * edge):
            continue
        if zeros and np.isclose(kappa, zeros[-1], rtol=0.0, atol=1e-9 * edge):
            continue
        if abs(symbol(kappa)) > tol:
            logging.error(f"Zone root {kappa} of the {variant.name} symbol failed verification.")
            raise UmbralError(f"Refined zone root {kappa} does not annihilate the {variant.name} symbol.")
        zeros.append(kappa)
    return zeros


def doubling_count(
    spacings: Sequence,
    include_time: bool = False,
    time_spacing=1,
    variant: str = "central-symmetric",
    samples: int = 257,
) -> DoublingReport:
    """
    Zero-momentum species of the lattice delta operator, one factor per dimension.

    Parameters:
    spacings (Sequence): Positive spatial spacings.
    include_time (bool): Also discretize time with ``time_spacing``.
    variant (str): Lattice variant whose delta operator is examined.
    samples (int): Grid intervals per axis over the zone (-pi/a, pi/a].

    Returns:
    DoublingReport: Number of species and the zero momenta.
    """
    strategy = LatticeVariantFactory.get_variant(variant)
    all_spacings = [float(a) for a in spacings] + ([float(time_spacing)] if include_time else [])
    if not all_spacings or any(a <= 0 for a in all_spacings):
        logging.error(f"Doubling count needs positive spacings, got {all_spacings}.")
        raise DomainError(f"Doubling count needs positive spacings, got {all_spacings}.")
    if samples < 2:
        raise DomainError(f"Zone grid needs at least 2 intervals, got {samples}.")
    tol = load_config().spectral.linalg_tol
    per_axis = [_zone_zeros(strategy, a, samples, tol) for a in all_spacings]
    zeros = [tuple(point) for point in product(*per_axis)]
    logging.info(f"Found {len(zeros)} zero momenta for the {variant} operator.")
    return DoublingReport(len(zeros), zeros)
