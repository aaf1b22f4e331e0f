"""Command-line entry points: solve, gen, eval, serve.

Exit codes: 0 success, 2 invalid flags, 3 validation failure,
4 solver precondition failure.
"""

from __future__ import annotations

import sys

import click

from . import io
from .evaluation import SyntheticSpec, generate, gibbs_percentage, matched_l2
from .model import SolverConfig, ValidationError
from .solver import SolverPreconditionError, solve

EXIT_VALIDATION = 3
EXIT_PRECONDITION = 4


@click.group()
def main():
    """Demix 1-D diffraction libraries into shiftable basis patterns."""


def _fail(code: int, message: str):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


@main.command("solve")
@click.option("--instance", "instance_path", required=True, type=click.Path(), help="Instance document to solve.")
@click.option("--k", required=True, type=int, help="Number of basis patterns.")
@click.option("--m", default=1, show_default=True, type=int, help="Number of shift copies.")
@click.option("--sparsity", type=float, default=0.0, is_flag=False, flag_value=0.35, show_default=True, help="L1 weight on activations; bare flag enables the 0.35 default.")
@click.option("--gibbs", type=click.Choice(["off", "greedy", "exact"]), default="off", show_default=True, help="Phase-count enforcement mode.")
@click.option("--nel", default=3, show_default=True, type=int, help="Phase-count limit per sample.")
@click.option("--conv-gap", default=2e-5, show_default=True, type=float, help="Relative loss-change convergence threshold.")
@click.option("--max-iters", default=5000, show_default=True, type=int, help="Iteration cap per update pass.")
@click.option("--seed", default=0, show_default=True, type=int, help="RNG seed for initialization.")
@click.option("--freeze", "freeze_path", type=click.Path(), default=None, help="Optional freeze-spec document.")
@click.option("--out", "out_path", required=True, type=click.Path(), help="Where to write the solution document.")
def cli_solve(instance_path, k, m, sparsity, gibbs, nel, conv_gap, max_iters, seed, freeze_path, out_path):
    """Solve an instance and write the solution document."""
    try:
        instance = io.read_instance(instance_path)
        freeze = io.read_freeze(freeze_path) if freeze_path else None
        config = SolverConfig(
            k=k,
            m=m,
            sparsity=sparsity,
            conv_gap=conv_gap,
            max_iters=max_iters,
            seed=seed,
            n_el=nel,
            gibbs=gibbs,
        )
    except FileNotFoundError as exc:
        _fail(EXIT_VALIDATION, str(exc))
    except ValidationError as exc:
        _fail(EXIT_VALIDATION, str(exc))
    try:
        solution = solve(instance, config, freeze)
    except SolverPreconditionError as exc:
        _fail(EXIT_PRECONDITION, str(exc))
    except ValidationError as exc:
        _fail(EXIT_VALIDATION, str(exc))
    io.write_solution(out_path, solution)
    click.echo(
        f"loss={float(solution.loss_trace[-1])!r} iterations={solution.iterations}"
    )


def _at_least_one(_ctx, param, value):
    if value < 1.0:
        raise click.BadParameter("must be >= 1")
    return value


@main.command("gen")
@click.option("--k", default=3, show_default=True, type=int, help="Number of phases.")
@click.option("--peaks", default=6, show_default=True, type=int, help="Gaussian peaks per phase.")
@click.option("--grid", default=15, show_default=True, type=int, help="Lattice points per triangle edge.")
@click.option("--nq", default=256, show_default=True, type=int, help="Number of q bins.")
@click.option("--qmin", default=1.0, show_default=True, type=float, help="Lower q bound.")
@click.option("--qmax", default=4.0, show_default=True, type=float, help="Upper q bound.")
@click.option("--alloy-max", default=1.0, show_default=True, type=float, callback=_at_least_one, help="Maximum peak-position scaling across the simplex.")
@click.option("--noise", default=0.0, show_default=True, type=float, help="Additive Gaussian noise sigma.")
@click.option("--seed", default=0, show_default=True, type=int, help="Generator seed.")
@click.option("--out-instance", required=True, type=click.Path(), help="Where to write the instance document.")
@click.option("--out-truth", required=True, type=click.Path(), help="Where to write the ground-truth document.")
def cli_gen(k, peaks, grid, nq, qmin, qmax, alloy_max, noise, seed, out_instance, out_truth):
    """Generate a synthetic ternary system with ground truth."""
    try:
        spec = SyntheticSpec(
            k=k,
            peaks_per_phase=peaks,
            grid_per_edge=grid,
            n_q=nq,
            q_min=qmin,
            q_max=qmax,
            alloy_max=alloy_max,
            noise_sigma=noise,
            seed=seed,
        )
        instance, truth = generate(spec)
    except ValidationError as exc:
        _fail(EXIT_VALIDATION, str(exc))
    io.write_instance(out_instance, instance)
    io.write_truth(out_truth, truth)
    click.echo(f"samples={instance.n_samples} q_bins={len(instance.q)}")


@main.command("eval")
@click.option("--solution", "solution_path", required=True, type=click.Path(), help="Solution document.")
@click.option("--truth", "truth_path", required=True, type=click.Path(), help="Ground-truth document.")
@click.option("--nel", default=3, show_default=True, type=int, help="Phase-count limit for the Gibbs metric.")
@click.option("--threshold", default=0.01, show_default=True, type=float, help="Presence threshold as a fraction of modeled signal.")
def cli_eval(solution_path, truth_path, nel, threshold):
    """Score a solution against ground truth; prints a JSON record."""
    import json

    try:
        solution = io.read_solution(solution_path)
        truth = io.read_truth(truth_path)
        record = {
            "matched_l2": matched_l2(solution, truth),
            "gibbs_percentage": gibbs_percentage(solution, nel, threshold),
        }
    except FileNotFoundError as exc:
        _fail(EXIT_VALIDATION, str(exc))
    except ValidationError as exc:
        _fail(EXIT_VALIDATION, str(exc))
    click.echo(json.dumps(record, sort_keys=True))


@main.command("serve")
@click.option("--host", default="127.0.0.1", show_default=True, help="Bind address.")
@click.option("--port", default=8080, show_default=True, type=int, help="Bind port.")
@click.option("--data-dir", type=click.Path(), default=None, help="Directory for write-through persistence.")
@click.option("--workers", default=2, show_default=True, type=int, help="Concurrent solver jobs.")
@click.option("--ui-dir", type=click.Path(), default=None, help="Frontend checkout to mount at /ui (auto-detects ./frontend).")
def cli_serve(host, port, data_dir, workers, ui_dir):
    """Run the HTTP job service."""
    from pathlib import Path

    import uvicorn

    from .service import create_app

    if ui_dir is None and (Path("frontend") / "index.html").exists():
        ui_dir = "frontend"
    app = create_app(data_dir=data_dir, max_workers=workers, ui_dir=ui_dir)
    uvicorn.run(app, host=host, port=port, log_level="info")


if __name__ == "__main__":
    main()
