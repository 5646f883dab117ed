import logging
from typing import Optional

import pandas as pd

from zenml import step

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
    poincare_closure_report,
    poincare_rep,
    so3_convention,
    sphere_symmetries_check,
    verify_so3,
)
from steps.artifact_writer import StepResult, reports_domain_errors
from steps.exact_steps import parse_rational


@step(enable_cache=False)
@reports_domain_errors
def lie_check_step(variant: str = "forward-basic", dim: int = 3, degree: int = 4, order: Optional[int] = None) -> StepResult:
    """Commutation relations of Q_i and xhat_i, and so(3) closure of the lattice angular momentum."""
    spec = LatticeSpecND.symbolic(dim)
    order = order if order is not None else degree + 8
    checks = ccr_report(build_nd_ops(spec, variant, order), degree)
    convention = None
    if dim == 3:
        generators = angular_momentum(spec, variant, order)
        checks += verify_so3(generators, degree)
        convention = so3_convention(generators, degree)
    table = pd.DataFrame([c.as_dict() for c in checks])
    residuals = {"all_hold": all(c.holds for c in checks), "so3_convention": convention}
    return StepResult({"relations": table}, {"variant": variant, "dim": dim, "order": order}, residuals)


@step(enable_cache=False)
@reports_domain_errors
def sphere_step(c: str = "2", variant: str = "forward-basic", spacing: str = "1", dim: int = 3, radius: int = 4) -> StepResult:
    """Lattice spheres in a search box, with their symmetry closure and orbits."""
    value = parse_rational(c, "sphere constant")
    a = parse_rational(spacing, "spacing")
    spec = LatticeSpecND.numeric([a] * dim)
    points = lattice_sphere(spec, value, variant, radius)
    report = sphere_symmetries_check(points, spec, variant)
    table = pd.DataFrame([[str(x / a) for x in p] for p in points], columns=[f"x{i + 1}" for i in range(dim)])
    payload = {"count": len(points), "orbits": [[[str(x) for x in p] for p in orbit] for orbit in report.orbits]}
    residuals = {
        "count": len(points),
        "closed_under_swaps": report.closed_under_swaps,
        "closed_under_reflections": report.closed_under_reflections,
    }
    return StepResult({"points": table}, payload, residuals)


@step(enable_cache=False)
@reports_domain_errors
def poincare_step(
    variant: str = "central-symmetric",
    kappa: str = "1",
    degree: int = 2,
    discrete_time: bool = False,
    order: Optional[int] = None,
    mass: str = "1",
) -> StepResult:
    """Poincare closure, Casimir centrality and the Dirac factorization on a symbolic 3D lattice."""
    spec = LatticeSpecND.symbolic(3)
    order = order if order is not None else degree + 8
    mass = parse_rational(mass, "mass")
    rep = poincare_rep(spec, variant, parse_rational(kappa, "kappa"), discrete_time, order)
    closure = poincare_closure_report(rep, degree)
    displayed = casimir_report(rep, "displayed", degree)
    kappa_form = casimir_report(rep, "kappa", degree)
    dirac = dirac_factorization_check(GammaSet.dirac_basis(), spec, mass, variant, order)
    rotated = dirac_factorization_check(GammaSet.dirac_basis().conjugated(cayley_rotation()), spec, mass, variant, order)
    constants = [
        {"left": left, "right": right, "combination": "outside span" if combo is None else " + ".join(f"({v})*{k}" for k, v in combo.items()) or "0"}
        for (left, right), combo in closure.structure_constants.items()
    ]
    logging.info(f"Poincare closure {closure.closes}, Dirac factorization {dirac.holds}.")
    residuals = {
        "closes": closure.closes,
        "rotation_convention": closure.rotation_convention,
        "casimir_displayed_central": all(displayed.values()),
        "casimir_kappa_central": all(kappa_form.values()),
        "dirac_holds": dirac.holds,
        "dirac_rotated_holds": rotated.holds,
    }
    tables = {
        "relations": pd.DataFrame([c.as_dict() for c in closure.checks]),
        "structure_constants": pd.DataFrame(constants),
    }
    payload = {"casimir_displayed": displayed, "casimir_kappa": kappa_form, "kappa": kappa}
    return StepResult(tables, payload, residuals)


@step(enable_cache=False)
@reports_domain_errors
def doubling_step(
    dim: int = 3, include_time: bool = False, spacing: str = "1", variant: str = "central-symmetric"
) -> StepResult:
    """Number of zero-momentum species of the lattice delta operator."""
    a = parse_rational(spacing, "spacing")
    report = doubling_count([a] * dim, include_time, a, variant)
    columns = [f"k{i + 1}" for i in range(dim)] + (["k0"] if include_time else [])
    table = pd.DataFrame(report.zeros, columns=columns)
    return StepResult({"zeros": table}, {"count": report.count}, {"count": report.count})
