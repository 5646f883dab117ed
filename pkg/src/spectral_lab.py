import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from math import ceil, erf, pi, sqrt
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.linalg
from scipy.special import roots_legendre

from src.config import load_config
from src.exceptions import DomainError, HermiticityError, ParityError, ResolutionError

# Setup logging configuration
logging.basicConfig(level=logging.INFO, format="%(asctime)s - %(levelname)s - %(message)s")


# Abstract Base Class for lattice boundary handling
class BoundaryStrategy(ABC):
    name: str

    @abstractmethod
    def shift_matrix(self, n_sites: int) -> np.ndarray:
        """
        Matrix of the unit shift (S f)_j = f_{j+1}.

        Parameters:
        n_sites (int): Number of lattice sites.

        Returns:
        np.ndarray: The (n_sites x n_sites) shift matrix.
        """
        pass

    @abstractmethod
    def qp_invertible(self, n_sites: int) -> bool:
        """Whether (S + S^-1)/2 is invertible on this boundary."""
        pass


# Concrete Strategy for a periodic lattice
class PeriodicBoundary(BoundaryStrategy):
    name = "periodic"

    def shift_matrix(self, n_sites: int) -> np.ndarray:
        return np.roll(np.eye(n_sites), 1, axis=1)

    def qp_invertible(self, n_sites: int) -> bool:
        return n_sites % 4 != 0


# Concrete Strategy for zero-padded open ends
class ZeroPaddedBoundary(BoundaryStrategy):
    name = "zero-padded"

    def shift_matrix(self, n_sites: int) -> np.ndarray:
        return np.eye(n_sites, k=1)

    def qp_invertible(self, n_sites: int) -> bool:
        # the path adjacency has eigenvalues cos(pi j/(N+1)), zero at j = (N+1)/2
        return n_sites % 2 == 0


class BoundaryFactory:
    @staticmethod
    def get_boundary(name: str) -> BoundaryStrategy:
        if name == "periodic":
            return PeriodicBoundary()
        elif name == "zero-padded":
            return ZeroPaddedBoundary()
        else:
            logging.error(f"Unknown boundary: {name}")
            raise DomainError(f"Unknown boundary: {name}")


@dataclass(frozen=True)
class PeriodicLattice:
    """N sites x_j = (j - origin) a with indices taken mod N."""

    N: int
    a: float
    origin: int = 0

    def __post_init__(self):
        if self.N < 2:
            raise DomainError(f"A periodic lattice needs N >= 2, got {self.N}.")
        if not self.a > 0:
            raise DomainError(f"Spacing must be positive, got {self.a}.")

    @classmethod
    def centered(cls, N: int, a: float) -> "PeriodicLattice":
        return cls(N, a, N // 2)

    @property
    def boundary(self) -> BoundaryStrategy:
        return BoundaryFactory.get_boundary("periodic")

    @property
    def sites(self) -> np.ndarray:
        return (np.arange(self.N) - self.origin) * self.a

    def describe(self) -> dict:
        return {"kind": "periodic", "N": self.N, "a": self.a, "origin": self.origin}


@dataclass(frozen=True)
class TruncatedLattice:
    """Odd number of sites centred on 0 with zero-padded ends."""

    N: int
    a: float

    def __post_init__(self):
        if self.N < 3 or self.N % 2 == 0:
            raise DomainError(f"A truncated lattice needs odd N >= 3, got {self.N}.")
        if not self.a > 0:
            raise DomainError(f"Spacing must be positive, got {self.a}.")

    @property
    def origin(self) -> int:
        return (self.N - 1) // 2

    @property
    def boundary(self) -> BoundaryStrategy:
        return BoundaryFactory.get_boundary("zero-padded")

    @property
    def sites(self) -> np.ndarray:
        return (np.arange(self.N) - self.origin) * self.a

    def describe(self) -> dict:
        return {"kind": "truncated", "N": self.N, "a": self.a, "origin": self.origin}


Lattice = Union[PeriodicLattice, TruncatedLattice]


@dataclass
class LatticeMatrix:
    entries: np.ndarray
    lattice: Lattice
    hermitian: bool = False

    def __post_init__(self):
        if self.hermitian:
            deviation = hermiticity_deviation(self.entries)
            if deviation > load_config().spectral.linalg_tol * max(1.0, np.abs(self.entries).max(initial=0.0)):
                logging.error(f"Matrix flagged Hermitian deviates by {deviation:.3e}.")
                raise HermiticityError(f"Matrix flagged Hermitian deviates by {deviation:.3e}.")


@dataclass
class WaveState:
    amplitudes: np.ndarray
    sites: np.ndarray
    time: float = 0.0

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def normalized(self) -> "WaveState":
        norm = self.norm()
        if norm == 0:
            raise DomainError("Cannot normalize the zero state.")
        return WaveState(self.amplitudes / norm, self.sites, self.time)


@dataclass(frozen=True)
class ExtensionParams:
    """Boundary angles of the two spectral branches."""

    alpha1: float = 0.0
    alpha2: Optional[float] = None

    def __post_init__(self):
        for value in (self.alpha1, self.second):
            if not 0 <= value < 1:
                raise DomainError(f"Extension angles must lie in [0, 1), got {value}.")

    @property
    def second(self) -> float:
        return self.alpha1 if self.alpha2 is None else self.alpha2

    def angle(self, branch: int) -> float:
        return self.alpha1 if branch == 1 else self.second


def hermiticity_deviation(matrix: np.ndarray) -> float:
    return float(np.abs(matrix - matrix.conj().T).max(initial=0.0))


# Q' inverse
# ----------
def _parity_message(N: int) -> str:
    return f"Q' singular (N=2m, m even): N = {N}"


def qp_inverse_closed_form(lat: PeriodicLattice) -> LatticeMatrix:
    """
    Closed-form shift sum for ((S + S^-1)/2)^-1 on a periodic lattice.

    Parameters:
    lat (PeriodicLattice): N odd or N = 2m with m odd.

    Returns:
    LatticeMatrix: The inverse; its product with (S + S^-1)/2 is checked to be I exactly.
    """
    N = lat.N
    shift = lat.boundary.shift_matrix(N).astype(np.int64)
    # weight of S^j, j taken mod N
    coefficients = np.zeros(N, dtype=np.int64)

    if N % 2 == 0:
        m = N // 2
        if m % 2 == 0:
            qp = (shift + shift.T) / 2
            null = np.array([[1, 0, -1, 0][j % 4] for j in range(N)], dtype=float)
            logging.error(_parity_message(N))
            raise ParityError(
                f"{_parity_message(N)}; det = {np.linalg.det(qp):.1e}, "
                f"null vector residual {np.abs(qp @ null).max():.1e}"
            )
        for k in range(m):
            coefficients[(2 * k + 1) % N] += (-1) ** k
    else:
        half = (N - 1) // 2
        for k in range(half + 1):
            coefficients[(2 * k) % N] += (-1) ** (k + half)
        for k in range(half):
            coefficients[(2 * k + 1) % N] += (-1) ** k
    # S^j has its ones at (i, i + j), so row i is the weights rolled by i
    inverse = np.stack([np.roll(coefficients, i) for i in range(N)])

    # (S + S^-1) P = 2 I over the integers
    if not np.array_equal((shift + shift.T) @ inverse, 2 * np.eye(N, dtype=np.int64)):
        raise ParityError(f"Closed-form Q' inverse failed the exact check for N = {N}.")
    logging.info(f"Closed-form Q' inverse built for N = {N}.")
    return LatticeMatrix(inverse.astype(float), lat, hermitian=True)


# Matrices
# --------
@dataclass
class LatticeMatrices:
    lattice: Lattice
    X: np.ndarray
    Qc: np.ndarray
    Qp: np.ndarray
    Qp_inverse: Optional[np.ndarray] = None
    Xhat: Optional[np.ndarray] = None
    hermiticity: Dict[str, float] = field(default_factory=dict)

    def ccr_deviation(self) -> float:
        """Frobenius norm of [Qc, Xhat] - I; nonzero on any finite lattice."""
        if self.Xhat is None:
            raise ParityError("Xhat is not available on this lattice.")
        bracket = self.Qc @ self.Xhat - self.Xhat @ self.Qc
        return float(np.linalg.norm(bracket - np.eye(self.lattice.N)))


def build_matrices(lat: Lattice, include_xhat: bool = True) -> LatticeMatrices:
    """
    X, the central difference Qc, Q' = (S + S^-1)/2 and Xhat = (X Q'^-1 + Q'^-1 X)/2.

    Parameters:
    lat (Lattice): Periodic or truncated lattice.
    include_xhat (bool): Also build Q'^-1 and Xhat (fails on singular Q').

    Returns:
    LatticeMatrices: The dense matrices and their hermiticity deviations.
    """
    shift = lat.boundary.shift_matrix(lat.N)
    X = np.diag(lat.sites)
    Qc = (shift - shift.T) / (2 * lat.a)
    Qp = (shift + shift.T) / 2
    mats = LatticeMatrices(lat, X, Qc, Qp)
    mats.hermiticity = {
        "X": hermiticity_deviation(X),
        "minus_i_Qc": hermiticity_deviation(-1j * Qc),
        "Qp": hermiticity_deviation(Qp),
    }
    if include_xhat:
        if not lat.boundary.qp_invertible(lat.N):
            logging.error(f"Q' is singular on the {lat.boundary.name} lattice with N = {lat.N}.")
            if isinstance(lat, PeriodicLattice):
                raise ParityError(_parity_message(lat.N))
            raise ParityError(f"Q' singular on a zero-padded lattice with odd N = {lat.N}.")
        if isinstance(lat, PeriodicLattice):
            mats.Qp_inverse = qp_inverse_closed_form(lat).entries
        else:
            mats.Qp_inverse = np.linalg.inv(Qp)
        mats.Xhat = (X @ mats.Qp_inverse + mats.Qp_inverse @ X) / 2
        mats.hermiticity["Xhat"] = hermiticity_deviation(mats.Xhat)
    logging.info(f"Built lattice matrices for {lat.describe()}.")
    return mats


# Dispersion
# ----------
@dataclass(frozen=True)
class DispersionReport:
    eigenvalues: np.ndarray
    expected: np.ndarray
    max_error: float
    spectral_radius: float
    bound: float

    @property
    def within_bound(self) -> bool:
        return self.spectral_radius <= self.bound * (1 + 1e-12)


def dispersion_check(lat: PeriodicLattice) -> DispersionReport:
    """Eigenvalues of -i Qc against sin(a k_n)/a with k_n = 2 pi n/(N a)."""
    mats = build_matrices(lat, include_xhat=False)
    eigenvalues = scipy.linalg.eigvalsh(-1j * mats.Qc)
    expected = np.sort(np.sin(2 * pi * np.arange(lat.N) / lat.N) / lat.a)
    max_error = float(np.abs(np.sort(eigenvalues) - expected).max())
    radius = float(np.abs(eigenvalues).max())
    logging.info(f"Dispersion check on N = {lat.N}: max error {max_error:.2e}.")
    return DispersionReport(np.sort(eigenvalues), expected, max_error, radius, 1 / lat.a)


def momentum_eigenfunction(lam: float, lat: Lattice) -> Tuple[WaveState, float]:
    """
    exp[i (x/a) arcsin(lambda a)] sampled on the sites.

    Returns the state and the residual max |(-i Qc) f - lambda f| over interior rows.
    """
    if abs(lam * lat.a) >= 1:
        logging.error(f"Momentum eigenvalue {lam} outside |lambda a| < 1.")
        raise DomainError(f"Momentum eigenfunctions need |lambda a| < 1, got {lam * lat.a}.")
    x = lat.sites
    f = np.exp(1j * (x / lat.a) * np.arcsin(lam * lat.a))
    applied = -1j * (f[2:] - f[:-2]) / (2 * lat.a)
    residual = float(np.abs(applied - lam * f[1:-1]).max(initial=0.0))
    return WaveState(f, x), residual


# Spectral branches and quadrature
# --------------------------------
# Abstract Base Class for the two halves of the Brillouin zone
class SpectralBranch(ABC):
    index: int

    @abstractmethod
    def momenta(self, theta: np.ndarray, a: float) -> np.ndarray:
        """
        Momenta k(theta) covering the branch as theta runs over [-pi/2, pi/2].

        Parameters:
        theta (np.ndarray): Quadrature angles.
        a (float): Lattice spacing.

        Returns:
        np.ndarray: k values.
        """
        pass

    @property
    @abstractmethod
    def cos_sign(self) -> int:
        """Sign of cos(a k) on the branch."""
        pass


# Concrete Strategy for |k| < pi/(2a)
class InnerBranch(SpectralBranch):
    index = 1

    def momenta(self, theta: np.ndarray, a: float) -> np.ndarray:
        return (pi / (2 * a)) * np.sin(theta)

    @property
    def cos_sign(self) -> int:
        return 1


# Concrete Strategy for pi/(2a) < |k| <= pi/a
class OuterBranch(SpectralBranch):
    index = 2

    def momenta(self, theta: np.ndarray, a: float) -> np.ndarray:
        return pi / a - (pi / (2 * a)) * np.sin(theta)

    @property
    def cos_sign(self) -> int:
        return -1


BRANCHES = (InnerBranch(), OuterBranch())


@dataclass(frozen=True)
class BranchRule:
    """Gauss-Legendre rule in theta; |cos(ak)|, p = sin(ak)/a and |dk/dtheta| at the nodes."""

    theta: np.ndarray
    weights: np.ndarray
    abs_cos: np.ndarray
    p: np.ndarray
    jacobian: np.ndarray


def branch_rule(a: float, panels: Optional[int] = None, nodes: Optional[int] = None) -> BranchRule:
    """
    Composite Gauss-Legendre rule for k = (pi/2a) sin(theta); the substitution turns
    the square-root endpoints of |cos(ak)|^(1/2) into smooth zeros.
    """
    cfg = load_config().spectral
    panels = panels or cfg.quadrature_panels
    nodes = nodes or cfg.quadrature_nodes
    per_panel = max(2, nodes // panels)
    base, base_weights = roots_legendre(per_panel)
    edges = np.linspace(-pi / 2, pi / 2, panels + 1)
    half = np.diff(edges) / 2
    mid = (edges[:-1] + edges[1:]) / 2
    theta = (mid[:, None] + half[:, None] * base[None, :]).ravel()
    weights = (half[:, None] * base_weights[None, :]).ravel()
    # cos((pi/2) sin t) = sin((pi/2)(1 - sin|t|)) without cancellation
    abs_cos = np.sin(pi * np.sin((pi / 2 - np.abs(theta)) / 2) ** 2)
    p = np.sin((pi / 2) * np.sin(theta)) / a
    jacobian = (pi / (2 * a)) * np.cos(theta)
    return BranchRule(theta, weights, abs_cos, p, jacobian)


def branch_transform(
    sites: np.ndarray,
    a: float,
    branch: SpectralBranch,
    profile: Callable[[np.ndarray], np.ndarray],
    rule: BranchRule,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    f(x) = int |cos ak|^(1/2) H(p) e^{ikx} dk and g = Q'^-1 f over one branch.

    Parameters:
    sites (np.ndarray): Lattice coordinates.
    a (float): Spacing.
    branch (SpectralBranch): Which half of the zone.
    profile (Callable): H(p), evaluated at p = sin(ak)/a.
    rule (BranchRule): Quadrature rule from branch_rule.

    Returns:
    Tuple[np.ndarray, np.ndarray]: f and g on the sites.
    """
    k = branch.momenta(rule.theta, a)
    h = profile(rule.p)
    measure = rule.weights * rule.jacobian
    phases = np.exp(1j * np.outer(sites, k))
    f = phases @ (measure * np.sqrt(rule.abs_cos) * h)
    g = phases @ (measure * h / (branch.cos_sign * np.sqrt(rule.abs_cos)))
    return f, g


def _shift_rows(values: np.ndarray, offset: int, margin: int) -> np.ndarray:
    return values[margin + offset : len(values) - margin + offset]


def lifted_xhat_residual(sites: np.ndarray, a: float, f: np.ndarray, g: np.ndarray, lam: complex) -> np.ndarray:
    """x f + (a^2/2) Qc g - lambda Q' f on rows 1..N-2; zero iff Q'(xhat - lambda) f = 0 there."""
    x = _shift_rows(sites, 0, 1)
    qc_g = (_shift_rows(g, 1, 1) - _shift_rows(g, -1, 1)) / (2 * a)
    qp_f = (_shift_rows(f, 1, 1) + _shift_rows(f, -1, 1)) / 2
    return x * _shift_rows(f, 0, 1) + (a * a / 2) * qc_g - lam * qp_f


def _tail_ratio(f: np.ndarray, width: int = 3) -> float:
    peak = np.abs(f).max()
    if peak == 0:
        return float("inf")
    return float(max(np.abs(f[:width]).max(), np.abs(f[-width:]).max()) / peak)


def _check_tails(f: np.ndarray, label: str) -> float:
    ratio = _tail_ratio(f)
    tol = load_config().spectral.tail_tol
    if ratio > tol:
        logging.error(f"{label}: tail ratio {ratio:.3e} exceeds {tol}.")
        raise ResolutionError(f"{label} does not decay inside the lattice (tail ratio {ratio:.3e}); enlarge N.")
    return ratio


# xhat eigenfunctions
# -------------------
@dataclass(frozen=True)
class XhatEigenpair:
    branch: int
    n: int
    alpha: float
    eigenvalue: float
    estimated: complex
    residual: float
    tail_ratio: float
    state: WaveState


def xhat_eigenfunctions(
    params: ExtensionParams,
    lat: TruncatedLattice,
    n_range: Sequence[int] = range(4),
    panels: Optional[int] = None,
    nodes: Optional[int] = None,
    tol: Optional[float] = None,
) -> List[XhatEigenpair]:
    """
    Eigenfunctions of xhat with eigenvalue (alpha_l + n) pi a on both branches.

    Parameters:
    params (ExtensionParams): Extension angles per branch.
    lat (TruncatedLattice): Finite stand-in for the infinite lattice.
    n_range (Sequence[int]): Integers n to build.
    tol (Optional[float]): Largest relative lifted residual accepted; defaults to spectral.quadrature_tol.

    Returns:
    List[XhatEigenpair]: One entry per (branch, n), with the lifted residual relative
    to ||f|| and the least-squares eigenvalue estimate.
    """
    a = lat.a
    sites = lat.sites
    rule = branch_rule(a, panels, nodes)
    tol = load_config().spectral.quadrature_tol if tol is None else tol
    pairs = []
    for branch in BRANCHES:
        alpha = params.angle(branch.index)
        for n in n_range:
            lam = (alpha + n) * pi * a
            f, g = branch_transform(sites, a, branch, lambda p, lam=lam: np.exp(-1j * lam * p), rule)
            label = f"xhat eigenfunction (branch {branch.index}, n = {n})"
            tail = _check_tails(f, label)
            interior_f = _shift_rows(f, 0, 1)
            qp_f = (_shift_rows(f, 1, 1) + _shift_rows(f, -1, 1)) / 2
            lifted = lifted_xhat_residual(sites, a, f, g, 0.0)
            estimated = complex(np.vdot(qp_f, lifted) / np.vdot(qp_f, qp_f))
            residual = float(
                np.linalg.norm(lifted_xhat_residual(sites, a, f, g, lam)) / np.linalg.norm(interior_f)
            )
            if residual > tol:
                logging.error(f"{label}: residual {residual:.3e} above {tol}.")
                raise ResolutionError(
                    f"{label} has lifted residual {residual:.3e} > {tol}; refine the quadrature or enlarge N."
                )
            pairs.append(XhatEigenpair(branch.index, n, alpha, lam, estimated, residual, tail, WaveState(f, sites)))
    logging.info(f"Built {len(pairs)} xhat eigenfunctions on N = {lat.N}, a = {a}.")
    return pairs


def same_branch_spacings(pairs: Sequence[XhatEigenpair]) -> Dict[int, List[float]]:
    """Differences of consecutive estimated eigenvalues within each branch."""
    spacings: Dict[int, List[float]] = {}
    for branch in {p.branch for p in pairs}:
        ordered = sorted((p for p in pairs if p.branch == branch), key=lambda p: p.n)
        spacings[branch] = [
            (b.estimated.real - a.estimated.real) / (b.n - a.n) for a, b in zip(ordered, ordered[1:])
        ]
    return spacings


def xhat_dense_spectrum(lat: PeriodicLattice, window: int = 10) -> Tuple[np.ndarray, float]:
    """Eigenvalues of the periodic Xhat nearest 0 and their median spacing."""
    mats = build_matrices(lat)
    eigenvalues = scipy.linalg.eigvalsh(mats.Xhat)
    central = eigenvalues[np.argsort(np.abs(eigenvalues))[: 2 * window]]
    central = np.sort(central)
    return central, float(np.median(np.diff(central)))


# Ground state in p-space
# -----------------------
def ground_profile(alpha: float, a: float, amplitude: complex = 1.0) -> Callable[[np.ndarray], np.ndarray]:
    """chi_0(p) = C exp(kappa p - p^2/2) with kappa = i pi a alpha."""
    kappa = 1j * pi * a * alpha
    return lambda p: amplitude * np.exp(kappa * p - p * p / 2)


@dataclass(frozen=True)
class GroundStateReport:
    alpha: float
    kappa: complex
    lattice_eigenvalue: float
    state: WaveState
    residual: float
    boundary_residual: float
    extension_residual: float
    tail_ratio: float


def _interval_rule(a: float, panels: int, nodes: int) -> Tuple[np.ndarray, np.ndarray]:
    per_panel = max(2, nodes // panels)
    base, base_weights = roots_legendre(per_panel)
    edges = np.linspace(-1 / a, 1 / a, panels + 1)
    half = np.diff(edges) / 2
    mid = (edges[:-1] + edges[1:]) / 2
    return (mid[:, None] + half[:, None] * base[None, :]).ravel(), (half[:, None] * base_weights[None, :]).ravel()


def extension_residual(alpha: float, a: float, n_modes: Optional[int] = None) -> float:
    """
    ||(p + D_alpha) chi_0 - kappa chi_0|| / ||chi_0|| with D_alpha realised on its
    eigenbasis exp(i mu_n p), mu_n = (alpha + n) pi a, on [-1/a, 1/a].
    """
    cfg = load_config().spectral
    p, w = _interval_rule(a, cfg.quadrature_panels, cfg.quadrature_nodes)
    chi = ground_profile(alpha, a)(p)
    kappa = 1j * pi * a * alpha
    n_modes = n_modes or int(ceil(12 / (pi * a))) + 2
    length = 2 / a
    mu = (alpha + np.arange(-n_modes, n_modes + 1)) * pi * a
    basis = np.exp(1j * np.outer(p, mu)) / sqrt(length)
    coefficients = basis.conj().T @ (w * chi)
    derivative = basis @ (1j * mu * coefficients)
    residual = p * chi + derivative - kappa * chi
    return float(sqrt(np.sum(w * np.abs(residual) ** 2) / np.sum(w * np.abs(chi) ** 2)))


def ground_state_pspace(alpha: float, lat: TruncatedLattice, amplitude: complex = 1.0) -> GroundStateReport:
    """
    Lattice image of the annihilation ground state in the alpha extension.

    Parameters:
    alpha (float): Extension angle in [0, 1), used on both branches.
    lat (TruncatedLattice): Lattice to sample on.
    amplitude (complex): The constant C.

    Returns:
    GroundStateReport: The state psi with (Qc + xhat) psi = -pi a alpha psi checked through
    the lifted relation, the p-space boundary condition and the D_alpha check.
    """
    if not 0 <= alpha < 1:
        raise DomainError(f"alpha must lie in [0, 1), got {alpha}.")
    if amplitude == 0:
        logging.error("Ground state requested with amplitude C = 0.")
        raise DomainError("The ground state amplitude C must be nonzero.")
    a = lat.a
    sites = lat.sites
    kappa = 1j * pi * a * alpha
    lattice_eigenvalue = -pi * a * alpha
    profile = ground_profile(alpha, a, amplitude)
    rule = branch_rule(a)
    psi = np.zeros(lat.N, dtype=complex)
    g = np.zeros(lat.N, dtype=complex)
    for branch in BRANCHES:
        f_branch, g_branch = branch_transform(sites, a, branch, profile, rule)
        psi += f_branch
        g += g_branch
    tail = _check_tails(psi, "ground state")

    # Q'(Qc + xhat - lambda) psi on rows 2..N-3
    qp_qc = (_shift_rows(psi, 2, 2) - _shift_rows(psi, -2, 2)) / (4 * a)
    lifted = lifted_xhat_residual(sites, a, psi, g, lattice_eigenvalue)[1:-1]
    residual_vector = qp_qc + lifted
    residual = float(np.linalg.norm(residual_vector) / np.linalg.norm(_shift_rows(psi, 0, 2)))

    edge = profile(np.array([1 / a, -1 / a]))
    boundary = float(abs(edge[0] - np.exp(2j * pi * alpha) * edge[1]) / abs(amplitude))
    ext = extension_residual(alpha, a)
    logging.info(f"Ground state alpha = {alpha}, a = {a}: residual {residual:.2e}, extension {ext:.2e}.")
    return GroundStateReport(alpha, kappa, lattice_eigenvalue, WaveState(psi, sites), residual, boundary, ext, tail)


def creation_domain_violation(alpha: float, a: float, amplitude: complex = 1.0) -> float:
    """
    |(p chi_0)(1/a) - e^{2 pi i alpha} (p chi_0)(-1/a)| / ||chi_0||, the failure of
    p chi_0 to satisfy the alpha boundary condition.
    """
    if amplitude == 0:
        logging.error("Creation-domain check requested for the zero state.")
        raise DomainError("The ground state amplitude C must be nonzero.")
    if not a > 0:
        raise DomainError(f"Spacing must be positive, got {a}.")
    profile = ground_profile(alpha, a, amplitude)
    edge = 1 / a
    at_plus, at_minus = profile(np.array([edge, -edge]))
    mismatch = abs(edge * at_plus - np.exp(2j * pi * alpha) * (-edge) * at_minus)
    # |chi_0|^2 = |C|^2 exp(-p^2) since kappa is imaginary
    norm = abs(amplitude) * sqrt(sqrt(pi) * erf(edge))
    return float(mismatch / norm)


# Oscillator
# ----------
def hamiltonian_matrix(mats: LatticeMatrices) -> np.ndarray:
    """(-Qc^2 + Xhat^2)/2."""
    if mats.Xhat is None:
        raise ParityError("The oscillator Hamiltonian needs an invertible Q'.")
    return (-mats.Qc @ mats.Qc + mats.Xhat @ mats.Xhat) / 2


def operator_string_action(mats: LatticeMatrices, psi: np.ndarray) -> np.ndarray:
    """
    (1/2)[-Qc^2 + P^2 (X^2 - a^2/2) + 2 a^2 P^3 Qc X + (5/4) a^4 P^4 Qc^2] psi, P = Q'^-1,
    applied by successive matrix-vector products.
    """
    if mats.Qp_inverse is None:
        raise ParityError("The operator string needs an invertible Q'.")
    a = mats.lattice.a
    P, Qc, X = mats.Qp_inverse, mats.Qc, mats.X

    def p_power(vector, times):
        for _ in range(times):
            vector = P @ vector
        return vector

    qc2 = Qc @ (Qc @ psi)
    total = -qc2
    total = total + p_power(X @ (X @ psi) - (a * a / 2) * psi, 2)
    total = total + 2 * a * a * p_power(Qc @ (X @ psi), 3)
    total = total + 1.25 * a ** 4 * p_power(qc2, 4)
    return total / 2


def operator_string_matrix(mats: LatticeMatrices) -> np.ndarray:
    return operator_string_action(mats, np.eye(mats.lattice.N))


@dataclass(frozen=True)
class HamiltonianComparison:
    matrix_deviation: float
    state_deviation: float


def compare_hamiltonians(mats: LatticeMatrices, psi: np.ndarray) -> HamiltonianComparison:
    """
    Compares the operator string with (-Qc^2 + Xhat^2)/2.

    The full-matrix deviation carries the periodic seam, where [Q', X] differs from
    a^2 Qc, so it is reported only. On a state localized away from the seam and with
    no weight near k = +-pi/(2a) the two agree.
    """
    symmetric = hamiltonian_matrix(mats)
    matrix_deviation = float(np.abs(operator_string_matrix(mats) - symmetric).max())
    state_deviation = float(np.linalg.norm(operator_string_action(mats, psi) - symmetric @ psi) / np.linalg.norm(psi))
    return HamiltonianComparison(matrix_deviation, state_deviation)


def pair_levels(eigenvalues: Sequence[float], gap_ratio: Optional[float] = None) -> List[int]:
    """
    Pair ids for sorted eigenvalues: two neighbours share an id when their gap is below
    gap_ratio times the gap to the next level.
    """
    gap_ratio = gap_ratio if gap_ratio is not None else load_config().spectral.pair_gap_ratio
    values = np.sort(np.asarray(eigenvalues, dtype=float))
    ids = [-1] * len(values)
    pair_id, i = 0, 0
    while i < len(values):
        if i + 1 < len(values):
            gap = values[i + 1] - values[i]
            if i + 2 < len(values):
                local = values[i + 2] - values[i + 1]
            elif i > 0:
                local = values[i] - values[i - 1]
            else:
                local = np.inf
            if gap < gap_ratio * local:
                ids[i] = ids[i + 1] = pair_id
                pair_id += 1
                i += 2
                continue
        ids[i] = pair_id
        pair_id += 1
        i += 1
    return ids


def pspace_oracle(a: float, n_levels: int, n_points: int = 6001) -> np.ndarray:
    """Lowest levels of (p^2 - d^2/dp^2)/2 on [-1/a, 1/a] with clamped ends, by finite differences."""
    h = (2 / a) / (n_points + 1)
    p = -1 / a + h * np.arange(1, n_points + 1)
    diagonal = 1 / h ** 2 + p * p / 2
    off = np.full(n_points - 1, -1 / (2 * h ** 2))
    return scipy.linalg.eigh_tridiagonal(diagonal, off, eigvals_only=True, select="i", select_range=(0, n_levels - 1))


@dataclass(frozen=True)
class OscillatorReport:
    eigenvalues: np.ndarray
    pair_ids: List[int]
    pair_means: List[float]
    pair_splittings: List[float]
    oracle: np.ndarray

    def pair_count_below(self, energy: float) -> int:
        return sum(1 for mean in self.pair_means if mean < energy)


def oscillator_spectrum(lat: PeriodicLattice, n_low: int = 10, oracle_points: int = 6001) -> OscillatorReport:
    """
    Low spectrum of (-Qc^2 + Xhat^2)/2 on a centred periodic lattice with N = 2m, m odd.

    Parameters:
    lat (PeriodicLattice): The lattice; use PeriodicLattice.centered.
    n_low (int): Number of doubled levels to resolve.

    Returns:
    OscillatorReport: Eigenvalues, pairing, pair means and splittings, and the p-space oracle.
    """
    if lat.N % 2 != 0 or (lat.N // 2) % 2 == 0:
        logging.error(f"Oscillator spectrum requested on N = {lat.N}.")
        raise ParityError(f"The oscillator needs N = 2m with m odd, got N = {lat.N}.")
    mats = build_matrices(lat)
    H = hamiltonian_matrix(mats)
    count = min(lat.N, 2 * n_low + 2)
    eigenvalues = scipy.linalg.eigh(H, eigvals_only=True, subset_by_index=[0, count - 1])
    ids = pair_levels(eigenvalues)
    means, splittings = [], []
    for pid in sorted(set(ids)):
        members = [eigenvalues[i] for i, j in enumerate(ids) if j == pid]
        if len(members) == 2:
            means.append(float(np.mean(members)))
            splittings.append(float(members[1] - members[0]))
    oracle = pspace_oracle(lat.a, n_low, oracle_points)
    logging.info(f"Oscillator on N = {lat.N}, a = {lat.a}: {len(means)} pairs among {count} levels.")
    return OscillatorReport(eigenvalues, ids, means, splittings, oracle)


# Evolution
# ---------
@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    norms: np.ndarray
    energies: np.ndarray

    @property
    def norm_drift(self) -> float:
        return float(np.abs(self.norms - self.norms[0]).max())

    @property
    def energy_drift(self) -> float:
        return float(np.abs(self.energies - self.energies[0]).max())


def gaussian_packet(lat: Lattice, center: float = 0.0, width: float = 1.0, momentum: float = 0.0) -> WaveState:
    x = lat.sites
    amplitudes = np.exp(-((x - center) ** 2) / (2 * width ** 2) + 1j * momentum * x)
    return WaveState(amplitudes.astype(complex), x).normalized()


def evolve(H: LatticeMatrix, psi0: WaveState, t_grid: Sequence[float]) -> Trajectory:
    """
    psi(t) = exp(-i H t) psi0 through the eigendecomposition of H.

    Parameters:
    H (LatticeMatrix): Hermitian Hamiltonian.
    psi0 (WaveState): Initial state.
    t_grid (Sequence[float]): Times.

    Returns:
    Trajectory: States, norms and energy expectations at every time.
    """
    entries = np.asarray(H.entries)
    tol = load_config().spectral.norm_tol
    deviation = hermiticity_deviation(entries)
    if deviation > tol:
        logging.error(f"evolve received a non-Hermitian matrix (deviation {deviation:.3e}).")
        raise HermiticityError(f"Hamiltonian is not Hermitian: deviation {deviation:.3e} > {tol}.")
    if psi0.amplitudes.shape != (entries.shape[0],):
        raise DomainError("State and Hamiltonian sizes differ.")
    energies_h, vectors = scipy.linalg.eigh(entries)
    times = np.asarray(t_grid, dtype=float)
    coefficients = vectors.conj().T @ psi0.amplitudes
    phases = np.exp(-1j * np.outer(times, energies_h))
    states = (phases * coefficients[None, :]) @ vectors.T
    norms = np.linalg.norm(states, axis=1)
    energies = np.real(np.einsum("ti,ij,tj->t", states.conj(), entries, states)) / norms ** 2
    logging.info(f"Evolved over {len(times)} times; norm drift {np.abs(norms - norms[0]).max():.2e}.")
    return Trajectory(times, states, norms, energies)
