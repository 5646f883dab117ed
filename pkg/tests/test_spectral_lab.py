from math import erf, exp, pi, sqrt

import numpy as np
import pytest

from src.exceptions import DomainError, HermiticityError, ParityError, ResolutionError
from src.spectral_lab import (
    ExtensionParams,
    LatticeMatrix,
    PeriodicLattice,
    TruncatedLattice,
    WaveState,
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
    pair_levels,
    pspace_oracle,
    qp_inverse_closed_form,
    same_branch_spacings,
    xhat_dense_spectrum,
    xhat_eigenfunctions,
)


def shift(N):
    return np.roll(np.eye(N), 1, axis=1)


def test_lattice_validation():
    with pytest.raises(DomainError):
        TruncatedLattice(4, 1.0)
    with pytest.raises(DomainError):
        PeriodicLattice(6, 0.0)
    assert TruncatedLattice(5, 0.5).sites.tolist() == [-1.0, -0.5, 0.0, 0.5, 1.0]
    assert PeriodicLattice.centered(6, 1.0).origin == 3


def test_qp_inverse_closed_form_n6():
    S = shift(6)
    P = qp_inverse_closed_form(PeriodicLattice(6, 1.0)).entries
    expected = S - np.linalg.matrix_power(S, 3) + np.linalg.matrix_power(S, 5)
    np.testing.assert_array_equal(P, expected)


INVERTIBLE_LENGTHS = [N for N in range(2, 65) if N % 2 or (N // 2) % 2]
SINGULAR_LENGTHS = [N for N in range(4, 65, 4)]


@pytest.mark.parametrize("N", INVERTIBLE_LENGTHS)
def test_qp_inverse_matches_dense_inverse(N):
    lat = PeriodicLattice(N, 1.0)
    qp = build_matrices(lat, include_xhat=False).Qp
    np.testing.assert_allclose(qp_inverse_closed_form(lat).entries, np.linalg.inv(qp), atol=1e-12)


@pytest.mark.parametrize("N", SINGULAR_LENGTHS)
def test_qp_singular_when_half_length_is_even(N):
    with pytest.raises(ParityError, match="Q' singular"):
        qp_inverse_closed_form(PeriodicLattice(N, 1.0))
    with pytest.raises(ParityError):
        build_matrices(PeriodicLattice(N, 1.0))


def test_truncated_lattice_with_odd_length_has_singular_qp():
    with pytest.raises(ParityError):
        build_matrices(TruncatedLattice(5, 1.0))
    assert build_matrices(TruncatedLattice(5, 1.0), include_xhat=False).Xhat is None


def test_lattice_matrices_are_hermitian():
    mats = build_matrices(PeriodicLattice.centered(10, 0.5))
    assert max(mats.hermiticity.values()) < 1e-12
    assert mats.ccr_deviation() > 0


def test_dispersion_small_lattice():
    report = dispersion_check(PeriodicLattice(4, 1.0))
    np.testing.assert_allclose(report.eigenvalues, [-1.0, 0.0, 0.0, 1.0], atol=1e-12)


def test_dispersion_matches_sine_law():
    report = dispersion_check(PeriodicLattice(101, 0.5))
    assert report.max_error < 1e-12
    assert report.within_bound


def test_momentum_eigenfunction():
    lat = PeriodicLattice(8, 1.0)
    state, residual = momentum_eigenfunction(1 / sqrt(2), lat)
    np.testing.assert_allclose(state.amplitudes, np.exp(1j * np.arange(8) * pi / 4), atol=1e-12)
    assert residual < 1e-12
    with pytest.raises(DomainError):
        momentum_eigenfunction(1.0, lat)


def test_extension_angles_must_lie_in_unit_interval():
    with pytest.raises(DomainError):
        ExtensionParams(1.0)
    with pytest.raises(DomainError):
        ExtensionParams(0.2, -0.1)
    assert ExtensionParams(0.3).angle(2) == 0.3


def test_xhat_eigenfunctions_on_both_branches():
    pairs = xhat_eigenfunctions(ExtensionParams(0.5), TruncatedLattice(201, 1.0), range(4))
    assert {p.branch for p in pairs} == {1, 2}
    pair = next(p for p in pairs if p.branch == 1 and p.n == 2)
    assert pair.eigenvalue == pytest.approx(2.5 * pi)
    assert all(p.residual < 1e-6 for p in pairs)
    for spacings in same_branch_spacings(pairs).values():
        np.testing.assert_allclose(spacings, pi, atol=1e-4)


def test_xhat_eigenfunctions_reject_unresolved_residuals():
    with pytest.raises(ResolutionError, match="lifted residual"):
        xhat_eigenfunctions(ExtensionParams(0.5), TruncatedLattice(201, 1.0), range(2), tol=1e-30)


def test_dense_periodic_xhat_spectrum_is_reported():
    central, median = xhat_dense_spectrum(PeriodicLattice.centered(202, 1.0))
    assert len(central) == 20
    assert np.all(np.diff(central) >= 0)
    assert median > 0


def test_ground_state_in_momentum_space():
    report = ground_state_pspace(0.25, TruncatedLattice(201, 0.1))
    assert report.lattice_eigenvalue == pytest.approx(-pi * 0.1 * 0.25)
    assert report.kappa == pytest.approx(1j * pi * 0.1 * 0.25)
    assert report.residual < 1e-8
    assert report.boundary_residual < 1e-10
    assert report.extension_residual < 1e-8


def test_ground_state_rejects_bad_input():
    with pytest.raises(DomainError):
        ground_state_pspace(1.0, TruncatedLattice(201, 0.1))
    with pytest.raises(DomainError):
        ground_state_pspace(0.0, TruncatedLattice(201, 0.1), amplitude=0)


@pytest.mark.parametrize("alpha", [0.0, 0.5])
def test_creation_operator_leaves_the_domain(alpha):
    expected = 4 * exp(-2) / sqrt(sqrt(pi) * erf(2))
    assert creation_domain_violation(alpha, 0.5) == pytest.approx(expected, rel=1e-12)
    with pytest.raises(DomainError):
        creation_domain_violation(alpha, 0.5, amplitude=0)


def test_pair_levels():
    assert pair_levels([0.0, 1e-9, 1.0, 1.0 + 1e-9, 2.0]) == [0, 0, 1, 1, 2]


def test_pspace_oracle_approaches_oscillator_levels():
    np.testing.assert_allclose(pspace_oracle(0.1, 3), [0.5, 1.5, 2.5], atol=1e-3)


def test_oscillator_spectrum_is_doubled():
    report = oscillator_spectrum(PeriodicLattice.centered(510, 1 / 15), 10)
    assert max(report.pair_splittings[:5]) < 1e-6
    np.testing.assert_allclose(report.pair_means[:5], report.oracle[:5], atol=1e-3)
    assert report.pair_count_below(10.0) == 10


@pytest.mark.parametrize("N", [508, 509])
def test_oscillator_needs_twice_odd_length(N):
    with pytest.raises(ParityError):
        oscillator_spectrum(PeriodicLattice.centered(N, 1 / 15))


def test_evolution_conserves_norm_and_energy():
    lat = PeriodicLattice.centered(202, 0.1)
    mats = build_matrices(lat)
    H = LatticeMatrix(hamiltonian_matrix(mats), lat, hermitian=True)
    psi0 = gaussian_packet(lat, 0.0, 1.0)
    trajectory = evolve(H, psi0, np.linspace(0.0, 1.0, 1001))
    assert len(trajectory.times) == 1001
    assert trajectory.norm_drift < 1e-10
    assert trajectory.energy_drift < 1e-8
    assert compare_hamiltonians(mats, psi0.amplitudes).state_deviation < 1e-9


def test_evolution_rejects_non_hermitian_input():
    lat = PeriodicLattice(2, 1.0)
    H = LatticeMatrix(np.array([[0.0, 1.0], [0.0, 0.0]]), lat)
    psi = WaveState(np.array([1.0, 0.0], dtype=complex), lat.sites)
    with pytest.raises(HermiticityError):
        evolve(H, psi, [0.0, 1.0])
    with pytest.raises(HermiticityError):
        LatticeMatrix(np.array([[0.0, 1.0], [0.0, 0.0]]), lat, hermitian=True)


def test_evolution_rejects_size_mismatch():
    lat = PeriodicLattice(2, 1.0)
    H = LatticeMatrix(np.eye(2), lat, hermitian=True)
    with pytest.raises(DomainError):
        evolve(H, WaveState(np.ones(3, dtype=complex), np.zeros(3)), [0.0])
