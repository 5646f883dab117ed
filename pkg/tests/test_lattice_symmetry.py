from fractions import Fraction
from math import pi

import numpy as np
import pytest

from src.exact_core import A, LaurentPoly, SpacingScalar
from src.exceptions import DomainError
from src.lattice_symmetry import (
    GammaSet,
    LatticeSpecND,
    angular_momentum,
    build_nd_ops,
    casimir_report,
    cayley_rotation,
    ccr_report,
    dirac_factorization_check,
    doubling_count,
    lattice_sphere,
    levi_civita,
    poincare_closure_report,
    poincare_rep,
    so3_convention,
    sphere_symmetries_check,
    verify_so3,
)
from src.operator_algebra import NormalOrderedOp


def test_levi_civita():
    assert levi_civita(0, 1, 2) == 1
    assert levi_civita(1, 0, 2) == -1
    assert levi_civita(0, 0, 2) == 0


def test_lattice_spec_validation():
    with pytest.raises(DomainError):
        LatticeSpecND(2, (A,))
    with pytest.raises(DomainError):
        LatticeSpecND.numeric([1, 0])
    with pytest.raises(DomainError):
        LatticeSpecND.symbolic(2).numeric_spacings()


def test_central_radial_operator_on_constant():
    ops = build_nd_ops(LatticeSpecND.symbolic(3), "central-symmetric", order=6)
    radial = NormalOrderedOp.zero(3)
    for xhat in ops.xhat:
        radial = radial + xhat * xhat
    expected = LaurentPoly.zero(3)
    for axis in range(3):
        expected = expected + LaurentPoly.coordinate(axis, 3) ** 2 - SpacingScalar.symbol(axis, 2) / 2
    assert radial.apply(LaurentPoly.one(3)) == expected


@pytest.mark.parametrize("variant", ["forward-basic", "central-symmetric", "continuum"])
def test_canonical_commutators_hold(variant):
    checks = ccr_report(build_nd_ops(LatticeSpecND.symbolic(2), variant, order=8), degree=3)
    assert len(checks) == 6
    assert all(c.holds for c in checks)


def test_unknown_variant():
    with pytest.raises(DomainError):
        build_nd_ops(LatticeSpecND.symbolic(1), "backward-basic")


@pytest.mark.parametrize("variant", ["forward-basic", "central-symmetric"])
def test_angular_momentum_closes_with_plus_i(variant):
    generators = angular_momentum(LatticeSpecND.symbolic(3), variant, order=8)
    checks = verify_so3(generators, degree=5)
    assert all(c.holds for c in checks)
    assert {c.max_residual_degree for c in checks} == {5}
    assert not all(c.holds for c in verify_so3(generators, degree=2, sign=-1))
    assert so3_convention(generators, degree=2) == "+i"


def test_angular_momentum_annihilates_lattice_sphere_polynomial():
    spec = LatticeSpecND.symbolic(3)
    generators = angular_momentum(spec, "forward-basic", order=6)
    radial = LaurentPoly.zero(3)
    for axis in range(3):
        x = LaurentPoly.coordinate(axis, 3)
        radial = radial + x * (x - SpacingScalar.symbol(axis))
    for generator in generators:
        assert generator.apply(radial).is_zero()
        assert generator.apply(LaurentPoly.one(3)).is_zero()


def test_angular_momentum_needs_three_dimensions():
    with pytest.raises(DomainError):
        angular_momentum(LatticeSpecND.symbolic(2))


@pytest.mark.parametrize("c, count", [(0, 8), (2, 24), (1, 0)])
def test_forward_lattice_spheres(c, count):
    spec = LatticeSpecND.numeric([1, 1, 1])
    points = lattice_sphere(spec, c, "forward-basic")
    assert len(points) == count
    report = sphere_symmetries_check(points, spec, "forward-basic")
    assert report.closed


def test_zero_sphere_is_the_unit_cube():
    points = lattice_sphere(LatticeSpecND.numeric([1, 1, 1]), 0)
    assert all(x in (0, 1) for point in points for x in point)
    report = sphere_symmetries_check(points, LatticeSpecND.numeric([1, 1, 1]))
    assert len(report.orbits) == 1


def test_central_lattice_sphere():
    spec = LatticeSpecND.numeric([1, 1, 1])
    points = lattice_sphere(spec, Fraction(-1, 2), "central-symmetric")
    assert len(points) == 6
    assert sphere_symmetries_check(points, spec, "central-symmetric").closed


def test_sphere_symmetries_need_equal_spacings():
    spec = LatticeSpecND.numeric([1, 2, 1])
    with pytest.raises(DomainError):
        sphere_symmetries_check(lattice_sphere(spec, 0), spec)


def test_poincare_closure():
    rep = poincare_rep(LatticeSpecND.symbolic(3), "central-symmetric", 1, order=6)
    report = poincare_closure_report(rep, degree=4)
    assert {c.max_residual_degree for c in report.checks} == {4}
    assert report.closes
    assert report.rotation_convention == "+i"


def test_kappa_casimir_is_central():
    rep = poincare_rep(LatticeSpecND.symbolic(3), "central-symmetric", 1, order=6)
    assert all(casimir_report(rep, "kappa", degree=4).values())
    displayed = casimir_report(rep, "displayed", degree=4)
    assert not displayed["L1"]
    assert displayed["P1"] and displayed["M3"]


def test_displayed_casimir_is_central_for_kappa_minus_one():
    rep = poincare_rep(LatticeSpecND.symbolic(3), "central-symmetric", -1, order=6)
    assert all(casimir_report(rep, "displayed", degree=4).values())


def test_dirac_basis_is_valid():
    gammas = GammaSet.dirac_basis()
    assert gammas.is_valid()
    assert gammas.conjugated(cayley_rotation()).is_valid()


@pytest.mark.parametrize("mass", [Fraction(0), Fraction(1), Fraction(3, 2)])
def test_dirac_factorization(mass):
    spec = LatticeSpecND.numeric([1, 1, 1])
    assert dirac_factorization_check(GammaSet.dirac_basis(), spec, mass, order=6).holds
    rotated = GammaSet.dirac_basis().conjugated(cayley_rotation(seed=3))
    assert dirac_factorization_check(rotated, spec, mass, order=6).holds


def test_dirac_rejects_invalid_gammas():
    gammas = GammaSet.dirac_basis()
    broken = GammaSet((gammas.matrices[0],) * 4)
    with pytest.raises(DomainError):
        dirac_factorization_check(broken, LatticeSpecND.numeric([1, 1, 1]))


@pytest.mark.parametrize("dim", [1, 2, 3, 4])
def test_central_operator_doubles_every_axis(dim):
    assert doubling_count([1] * dim).count == 2 ** dim


def test_doubling_with_discrete_time():
    assert doubling_count([1, 1, 1], include_time=True).count == 16
    assert doubling_count([1, 1, 1], include_time=True, variant="forward-basic").count == 1


@pytest.mark.parametrize("samples", [2, 16, 257])
def test_doubling_zeros_are_refined_roots(samples):
    single = doubling_count([Fraction(1, 2)], samples=samples)
    assert single.count == 2
    np.testing.assert_allclose(np.array(single.zeros), [[0.0], [2 * pi]], atol=1e-12)


@pytest.mark.parametrize("variant", ["forward-basic", "continuum"])
def test_undoubled_operators_have_one_species(variant):
    report = doubling_count([1, Fraction(1, 3)], variant=variant)
    assert report.count == 1
    np.testing.assert_allclose(np.array(report.zeros), [[0.0, 0.0]], atol=1e-12)


def test_doubling_rejects_bad_input():
    with pytest.raises(DomainError):
        doubling_count([1, -1])
    with pytest.raises(DomainError):
        doubling_count([1], samples=1)
    with pytest.raises(DomainError):
        doubling_count([1], variant="wilson")
