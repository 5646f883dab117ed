import logging
from typing import Optional

import pandas as pd

from zenml import step

from src.config import load_config
from src.exceptions import DomainError
from src.umbral_engine import (
    eval_newton,
    exp_coefficients,
    gaussian_coefficients,
    ho_forward_solution,
    newton_map,
)
from steps.artifact_writer import StepResult, reports_domain_errors
from steps.exact_steps import parse_rational, parse_spacing


@step(enable_cache=False)
@reports_domain_errors
def newton_step(
    function: str = "exp",
    k: str = "1/2",
    spacing: str = "1",
    x: Optional[str] = None,
    kcut: Optional[int] = None,
    basis: str = "umbral",
    order: Optional[int] = None,
) -> StepResult:
    """
    Newton (factorial-basis) series of exp(k y) or exp(-y^2/2), optionally evaluated at x.

    Parameters:
    function (str): 'exp' or 'gaussian'.
    k (str): Rate of the exponential.
    spacing (str): Lattice spacing; evaluation needs a numeric one.
    x (Optional[str]): Point to evaluate at.
    kcut (Optional[int]): Truncation of the partial sum.
    basis (str): 'umbral' or 'gregory_newton'.
    order (Optional[int]): Number of input Taylor orders (default: divergence probe length).

    Returns:
    StepResult: Coefficients, and with x the terms, partial sums and verdict.
    """
    order = order if order is not None else load_config().spectral.divergence_terms
    h = parse_spacing(spacing)
    if function == "exp":
        coefficients = exp_coefficients(parse_rational(k, "k"), order)
    elif function == "gaussian":
        coefficients = gaussian_coefficients(order)
    else:
        logging.error(f"Unsupported Newton input function: {function}")
        raise DomainError(f"Unsupported Newton input function: {function}")
    spacing_value = h.constant_value() if h.is_constant() else h
    series = newton_map(coefficients, spacing_value, basis=basis, source=function)
    table = pd.DataFrame({"k": range(len(series.coefficients)), "F": [str(c) for c in series.coefficients]})
    payload = {"function": function, "basis": basis, "coefficients": [str(c) for c in series.coefficients]}
    residuals = {}
    tables = {"coefficients": table}
    if x is not None:
        if not h.is_constant():
            raise DomainError("Evaluating a Newton series needs a numeric spacing.")
        evaluation = eval_newton(series, parse_rational(x, "x"), kcut)
        tables["evaluation"] = pd.DataFrame(
            {
                "k": range(len(evaluation.partial_sums)),
                "partial_sum": [str(s) for s in evaluation.partial_sums],
                "term_magnitude": evaluation.magnitudes[: len(evaluation.partial_sums)],
            }
        )
        payload.update({"x": x, "value": str(evaluation.value), "verdict": evaluation.verdict})
        residuals = {"verdict": evaluation.verdict, "ratio_estimate": evaluation.ratio_estimate}
    return StepResult(tables, payload, residuals)


@step(enable_cache=False)
@reports_domain_errors
def ho_forward_step(nmax: int = 30, spacing: str = "1", probe_x: Optional[str] = None) -> StepResult:
    """Forward-difference oscillator: lattice values, exact residuals, divergence table and extensions."""
    h = parse_spacing(spacing)
    if not h.is_constant():
        raise DomainError("The forward oscillator check needs a numeric spacing.")
    report = ho_forward_solution(nmax, h.constant_value(), parse_rational(probe_x, "probe x") if probe_x else None)
    values = pd.DataFrame(
        {
            "n": list(report.residuals),
            "psi": [str(report.values[n]) for n in report.residuals],
            "residual": [str(r) for r in report.residuals.values()],
        }
    )
    divergence = pd.DataFrame(report.divergence)
    extensions = pd.DataFrame(
        [
            {"extension": i, "n": n, "psi": str(value)}
            for i, extension in enumerate(report.extensions)
            for n, value in extension.items()
        ]
    )
    residuals = {
        "max_residual": str(max(abs(r) for r in report.residuals.values())),
        "divergence_index": report.divergence_index,
        "extension_residuals": [str(r) for r in report.extension_residuals],
    }
    payload = {"free_parameters": list(report.free_parameters), "spacing": str(report.spacing)}
    return StepResult({"values": values, "divergence": divergence, "extensions": extensions}, payload, residuals)
