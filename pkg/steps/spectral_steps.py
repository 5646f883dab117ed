import logging
from typing import Optional

import numpy as np
import pandas as pd

from zenml import step

from src.spectral_lab import (
    ExtensionParams,
    LatticeMatrix,
    PeriodicLattice,
    TruncatedLattice,
    build_matrices,
    compare_hamiltonians,
    creation_domain_violation,
    dispersion_check,
    evolve,
    gaussian_packet,
    ground_state_pspace,
    hamiltonian_matrix,
    momentum_eigenfunction,
    oscillator_spectrum,
    qp_inverse_closed_form,
    same_branch_spacings,
    xhat_dense_spectrum,
    xhat_eigenfunctions,
)
from steps.artifact_writer import StepResult, reports_domain_errors


def _state_table(sites: np.ndarray, amplitudes: np.ndarray, a: float) -> pd.DataFrame:
    return pd.DataFrame({"site": np.rint(sites / a).astype(int), "re": amplitudes.real, "im": amplitudes.imag})


@step(enable_cache=False)
@reports_domain_errors
def qp_inverse_step(N: int = 6) -> StepResult:
    """Closed-form inverse of (S + S^-1)/2 on a periodic lattice."""
    lat = PeriodicLattice(N, 1.0)
    inverse = qp_inverse_closed_form(lat)
    qp = build_matrices(lat, include_xhat=False).Qp
    dense_error = float(np.abs(inverse.entries - np.linalg.inv(qp)).max())
    first_row = pd.DataFrame({"shift": range(N), "coefficient": inverse.entries[0].astype(int)})
    return StepResult({"qp_inverse_row": first_row}, {"N": N}, {"dense_inverse_error": dense_error})


@step(enable_cache=False)
@reports_domain_errors
def dispersion_step(N: int = 101, a: float = 0.5, lam: Optional[float] = None) -> StepResult:
    """Spectrum of -i Qc against sin(a k)/a, and the momentum eigenfunction residual."""
    lat = PeriodicLattice(N, a)
    report = dispersion_check(lat)
    lam = lam if lam is not None else 1 / (np.sqrt(2) * a)
    state, residual = momentum_eigenfunction(lam, lat)
    table = pd.DataFrame({"index": range(N), "eigenvalue": report.eigenvalues, "expected": report.expected})
    residuals = {
        "max_error": report.max_error,
        "spectral_radius": report.spectral_radius,
        "bound": report.bound,
        "eigenfunction_residual": residual,
    }
    return StepResult({"spectrum": table, "eigenfunction": _state_table(state.sites, state.amplitudes, a)}, {"lambda": lam}, residuals)


@step(enable_cache=False)
@reports_domain_errors
def xhat_spectrum_step(N: int = 201, a: float = 1.0, alpha: float = 0.0, alpha2: Optional[float] = None, nmax: int = 3) -> StepResult:
    """xhat eigenfunctions of both branches by quadrature, with residuals and eigenvalue spacings."""
    lat = TruncatedLattice(N, a)
    pairs = xhat_eigenfunctions(ExtensionParams(alpha, alpha2), lat, range(nmax + 1))
    table = pd.DataFrame(
        [
            {
                "branch": p.branch,
                "n": p.n,
                "alpha": p.alpha,
                "eigenvalue": p.eigenvalue,
                "estimated": p.estimated.real,
                "residual": p.residual,
                "tail_ratio": p.tail_ratio,
            }
            for p in pairs
        ]
    )
    spacings = same_branch_spacings(pairs)
    residuals = {
        "max_residual": max(p.residual for p in pairs),
        "spacing_error": max(abs(s - np.pi * a) for values in spacings.values() for s in values) if nmax else 0.0,
    }
    payload = {"spacings": spacings}
    # periodic companion of the same size with invertible Q'
    periodic_N = N + 1 if (N + 1) % 4 == 2 else N + 3
    central, median_spacing = xhat_dense_spectrum(PeriodicLattice.centered(periodic_N, a))
    payload["dense_periodic"] = {"N": periodic_N, "central_eigenvalues": central, "median_spacing": median_spacing}
    return StepResult({"eigenpairs": table}, payload, residuals)


@step(enable_cache=False)
@reports_domain_errors
def oscillator_step(N: int = 510, a: float = 1 / 15, nlow: int = 10) -> StepResult:
    """Low spectrum of the lattice oscillator with pairing and the p-space oracle."""
    lat = PeriodicLattice.centered(N, a)
    report = oscillator_spectrum(lat, nlow)
    spectrum = pd.DataFrame({"index": range(len(report.eigenvalues)), "eigenvalue": report.eigenvalues, "pair_id": report.pair_ids})
    count = min(len(report.pair_means), len(report.oracle))
    pairs = pd.DataFrame(
        {
            "n": range(count),
            "pair_mean": report.pair_means[:count],
            "splitting": report.pair_splittings[:count],
            "oracle": report.oracle[:count],
        }
    )
    residuals = {
        "max_splitting": max(report.pair_splittings[:5], default=None),
        "max_oracle_deviation": float(np.abs(np.array(report.pair_means[:count]) - report.oracle[:count]).max()) if count else None,
        "pairs_below_10": report.pair_count_below(10.0),
    }
    return StepResult({"spectrum": spectrum, "pairs": pairs}, {"lattice": lat.describe()}, residuals)


@step(enable_cache=False)
@reports_domain_errors
def ground_state_step(alpha: float = 0.25, N: int = 201, a: float = 0.1) -> StepResult:
    """Lattice image of the annihilation ground state, and the creation-operator domain violation."""
    lat = TruncatedLattice(N, a)
    report = ground_state_pspace(alpha, lat)
    violation = creation_domain_violation(alpha, a)
    residuals = {
        "residual": report.residual,
        "boundary_residual": report.boundary_residual,
        "extension_residual": report.extension_residual,
        "creation_violation": violation,
    }
    payload = {"kappa": report.kappa, "lattice_eigenvalue": report.lattice_eigenvalue}
    return StepResult({"state": _state_table(report.state.sites, report.state.amplitudes, a)}, payload, residuals)


@step(enable_cache=False)
@reports_domain_errors
def evolve_step(N: int = 202, a: float = 0.1, tmax: float = 1.0, steps: int = 1000, width: float = 1.0, center: float = 0.0) -> StepResult:
    """Unitary evolution of a Gaussian packet under the lattice oscillator, and the two Hamiltonian forms compared."""
    lat = PeriodicLattice.centered(N, a)
    mats = build_matrices(lat)
    H = LatticeMatrix(hamiltonian_matrix(mats), lat, hermitian=True)
    psi0 = gaussian_packet(lat, center, width)
    trajectory = evolve(H, psi0, np.linspace(0.0, tmax, steps + 1))
    comparison = compare_hamiltonians(mats, psi0.amplitudes)
    logging.info(f"Evolution: norm drift {trajectory.norm_drift:.2e}, energy drift {trajectory.energy_drift:.2e}.")
    summary = pd.DataFrame({"t": trajectory.times, "norm": trajectory.norms, "energy": trajectory.energies})
    stride = max(1, steps // 10)
    blocks = pd.concat(
        [
            _state_table(lat.sites, trajectory.states[i], a).assign(t=trajectory.times[i])
            for i in range(0, len(trajectory.times), stride)
        ],
        ignore_index=True,
    )
    residuals = {
        "norm_drift": trajectory.norm_drift,
        "energy_drift": trajectory.energy_drift,
        "string_state_deviation": comparison.state_deviation,
        "string_matrix_deviation": comparison.matrix_deviation,
        "ccr_deviation": mats.ccr_deviation(),
    }
    return StepResult({"observables": summary, "trajectory": blocks}, {"lattice": lat.describe()}, residuals)
