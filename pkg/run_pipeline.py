import functools
import json
import logging
import sys

import click

from pipelines.cli_pipeline import RunConfig, dispatch, replay_config
from src.operator_algebra import DeltaOperatorFactory

DELTAS = click.Choice(DeltaOperatorFactory.kinds())
VARIANTS = click.Choice(["forward-basic", "central-symmetric", "continuum"])


def output_options(command):
    """--out, --format, --track and --tol, shared by every subcommand."""

    @click.option("--out", "out", default=None, help="Output directory (default: $UMBRAL_LAB_OUTPUT_DIR or config).")
    @click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default=None, help="Table format.")
    @click.option("--track", is_flag=True, default=False, help="Log the run manifest to MLflow.")
    @click.option("--tol", type=float, default=None, help="Tolerance for the headline residual.")
    @functools.wraps(command)
    def wrapper(out, fmt, track, tol, **params):
        return command(RunConfig(command="", params=params, output_dir=out, format=fmt, track=track, tol=tol))

    return wrapper


def _run(name: str, config: RunConfig):
    outcome = dispatch(RunConfig(name, config.params, config.output_dir, config.format, config.track, config.tol))
    if outcome.exit_code == 0:
        click.echo(json.dumps({"status": "ok", "command": name, "outputs": outcome.paths}))
    sys.exit(outcome.exit_code)


@click.group()
@click.option("--verbose", is_flag=True, help="Log at DEBUG level.")
@click.option("--quiet", is_flag=True, help="Log warnings and errors only.")
def cli(verbose, quiet):
    """Exact umbral calculus and lattice spectral computations."""
    if verbose:
        logging.getLogger().setLevel(logging.DEBUG)
    elif quiet:
        logging.getLogger().setLevel(logging.WARNING)


@cli.command("basic-seq")
@click.option("--delta", type=DELTAS, default="central")
@click.option("--spacing", default="a", help="'a', a positive rational or c*a^k.")
@click.option("--kmax", type=int, default=5)
@output_options
def basic_seq(config):
    """Basic sequence q_0..q_kmax of a delta operator."""
    _run("basic-seq", config)


@cli.command("sheffer-seq")
@click.option("--delta", type=DELTAS, default="central")
@click.option("--spacing", default="a")
@click.option("--kmax", type=int, default=5)
@output_options
def sheffer_seq(config):
    """Sheffer sequence of the symmetric position operator."""
    _run("sheffer-seq", config)


@cli.command("star")
@click.option("--f", "f", required=True, help="Polynomial in x, e.g. 'x^2 + 1'.")
@click.option("--g", "g", required=True)
@click.option("--delta", type=DELTAS, default="forward")
@click.option("--spacing", default="a")
@output_options
def star(config):
    """Star product f * g of two polynomials."""
    _run("star", config)


@cli.command("map-equation")
@click.option("--delta", type=DELTAS, default="forward")
@click.option("--recipe", type=click.Choice(["rodrigues", "symmetric"]), default="rodrigues")
@click.option("--spacing", default="a")
@click.option("--order", type=int, default=12)
@output_options
def map_equation(config):
    """Umbral image of the oscillator Hamiltonian."""
    _run("map-equation", config)


@cli.command("newton")
@click.option("--function", "function", type=click.Choice(["exp", "gaussian"]), default="exp")
@click.option("--k", "k", default="1/2", help="Rate of exp(k y).")
@click.option("--spacing", default="1")
@click.option("--x", "x", default=None, help="Evaluation point.")
@click.option("--kcut", type=int, default=None)
@click.option("--basis", type=click.Choice(["umbral", "gregory_newton"]), default="umbral")
@click.option("--order", type=int, default=None)
@output_options
def newton(config):
    """Newton series of exp(k y) or exp(-y^2/2)."""
    _run("newton", config)


@cli.command("ho-forward")
@click.option("--nmax", type=int, default=30)
@click.option("--spacing", default="1")
@click.option("--probe-x", "probe_x", default=None)
@output_options
def ho_forward(config):
    """Forward-difference oscillator on the half lattice."""
    _run("ho-forward", config)


@cli.command("hermite")
@click.option("--n", "n", type=int, default=4)
@click.option("--delta", type=DELTAS, default="forward")
@click.option("--spacing", default="a")
@output_options
def hermite(config):
    """Discrete Hermite polynomials and the generating-function cross-check."""
    _run("hermite", config)


@cli.command("lie-check")
@click.option("--variant", type=VARIANTS, default="forward-basic")
@click.option("--dim", type=int, default=3)
@click.option("--degree", type=int, default=4)
@click.option("--order", type=int, default=None)
@output_options
def lie_check(config):
    """Commutation relations and so(3) closure."""
    _run("lie-check", config)


@cli.command("sphere")
@click.option("--c", "c", default="2")
@click.option("--variant", type=VARIANTS, default="forward-basic")
@click.option("--spacing", default="1")
@click.option("--dim", type=int, default=3)
@click.option("--radius", type=int, default=4)
@output_options
def sphere(config):
    """Lattice sphere points and their symmetries."""
    _run("sphere", config)


@cli.command("poincare")
@click.option("--variant", type=VARIANTS, default="central-symmetric")
@click.option("--kappa", default="1")
@click.option("--degree", type=int, default=2)
@click.option("--discrete-time", "discrete_time", is_flag=True, default=False)
@click.option("--order", type=int, default=None)
@click.option("--mass", default="1")
@output_options
def poincare(config):
    """Poincare closure, Casimir and Dirac factorization."""
    _run("poincare", config)


@cli.command("doubling")
@click.option("--dim", type=int, default=3)
@click.option("--include-time", "include_time", is_flag=True, default=False)
@click.option("--spacing", default="1")
@click.option("--variant", type=VARIANTS, default="central-symmetric")
@output_options
def doubling(config):
    """Species count of a lattice delta operator."""
    _run("doubling", config)


@cli.command("qp-inverse")
@click.option("--N", "N", type=int, default=6)
@output_options
def qp_inverse(config):
    """Closed-form inverse of Q' on a periodic lattice."""
    _run("qp-inverse", config)


@cli.command("dispersion")
@click.option("--N", "N", type=int, default=101)
@click.option("--a", "a", type=float, default=0.5)
@click.option("--lam", type=float, default=None)
@output_options
def dispersion(config):
    """Lattice momentum spectrum against sin(ak)/a."""
    _run("dispersion", config)


@cli.command("xhat-spectrum")
@click.option("--N", "N", type=int, default=201)
@click.option("--a", "a", type=float, default=1.0)
@click.option("--alpha", type=float, default=0.0)
@click.option("--alpha2", type=float, default=None)
@click.option("--nmax", type=int, default=3)
@output_options
def xhat_spectrum(config):
    """xhat eigenfunctions on both spectral branches."""
    _run("xhat-spectrum", config)


@cli.command("oscillator")
@click.option("--N", "N", type=int, default=510)
@click.option("--a", "a", type=float, default=1 / 15)
@click.option("--nlow", type=int, default=10)
@output_options
def oscillator(config):
    """Low spectrum of the lattice oscillator."""
    _run("oscillator", config)


@cli.command("ground-state")
@click.option("--alpha", type=float, default=0.25)
@click.option("--N", "N", type=int, default=201)
@click.option("--a", "a", type=float, default=0.1)
@output_options
def ground_state(config):
    """Annihilation ground state in p-space and on the lattice."""
    _run("ground-state", config)


@cli.command("evolve")
@click.option("--N", "N", type=int, default=202)
@click.option("--a", "a", type=float, default=0.1)
@click.option("--tmax", type=float, default=1.0)
@click.option("--steps", type=int, default=1000)
@click.option("--width", type=float, default=1.0)
@click.option("--center", type=float, default=0.0)
@output_options
def evolve(config):
    """Time evolution of a Gaussian packet."""
    _run("evolve", config)


@cli.command("ff-rep")
@click.option("--p", "p", type=int, default=3)
@output_options
def ff_rep(config):
    """Commutation relation over Z_p."""
    _run("ff-rep", config)


@cli.command("replay")
@click.argument("manifest", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out", default=None)
def replay(manifest, out):
    """Re-run the computation recorded in a manifest.json."""
    try:
        config = replay_config(manifest, out)
    except (ValueError, KeyError) as e:
        raise click.UsageError(f"Cannot replay {manifest}: {e}")
    _run(config.command, config)


if __name__ == "__main__":
    cli()
