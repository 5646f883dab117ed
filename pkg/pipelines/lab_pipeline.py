from typing import Any, Dict, Optional

from zenml import pipeline

from steps.artifact_writer import export_artifacts_step
from steps.exact_steps import (
    basic_seq_step,
    ff_rep_step,
    hermite_step,
    map_equation_step,
    sheffer_seq_step,
    star_step,
)
from steps.newton_steps import ho_forward_step, newton_step
from steps.spectral_steps import (
    dispersion_step,
    evolve_step,
    ground_state_step,
    oscillator_step,
    qp_inverse_step,
    xhat_spectrum_step,
)
from steps.symmetry_steps import doubling_step, lie_check_step, poincare_step, sphere_step

COMMANDS = {
    "basic-seq": basic_seq_step,
    "sheffer-seq": sheffer_seq_step,
    "star": star_step,
    "map-equation": map_equation_step,
    "newton": newton_step,
    "ho-forward": ho_forward_step,
    "hermite": hermite_step,
    "lie-check": lie_check_step,
    "sphere": sphere_step,
    "poincare": poincare_step,
    "doubling": doubling_step,
    "qp-inverse": qp_inverse_step,
    "dispersion": dispersion_step,
    "xhat-spectrum": xhat_spectrum_step,
    "oscillator": oscillator_step,
    "ground-state": ground_state_step,
    "evolve": evolve_step,
    "ff-rep": ff_rep_step,
}


@pipeline(enable_cache=False)
def lab_pipeline(
    command: str,
    params: Dict[str, Any],
    out_dir: str,
    fmt: str,
    tolerances: Dict[str, Any],
    tol: Optional[float] = None,
    track: bool = False,
):
    """Runs the computation step of one subcommand and exports its artifacts."""

    # Computation Step
    result = COMMANDS[command](**params)

    # Export Step
    outputs = export_artifacts_step(
        result,
        out_dir=out_dir,
        fmt=fmt,
        command=command,
        params=params,
        tolerances=tolerances,
        tol=tol,
        track=track,
    )

    return outputs
