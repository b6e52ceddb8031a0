from pathlib import Path
from typing import Any, Dict, List, Optional

import typer

from src.utils.constants import ConstraintConst, ReductionConst
from src.utils.decorators import exit_on_error, log_duration


def train_overrides(
    ctx: typer.Context,
    iterations: Optional[int] = None,
    lr: Optional[float] = None,
    p: Optional[int] = None,
    alpha: Optional[float] = None,
    beta: Optional[float] = None,
    gamma: Optional[float] = None,
    mu: Optional[float] = None,
    nu: Optional[float] = None,
    sparsity_target: Optional[float] = None,
    reduction: Optional[ReductionConst] = None,
    constraint: Optional[ConstraintConst] = None,
    ablate: Optional[List[str]] = None,
    seed: Optional[int] = None,
    metrics_every: Optional[int] = None,
) -> Dict[str, Any]:
    """Nested ``TrainConfig`` overrides; unset flags stay ``None`` so the config file wins."""
    obj = ctx.obj or {}
    return {
        "iterations": iterations,
        "lr0": lr,
        "p": p,
        "weights": {
            "alpha": alpha,
            "beta": beta,
            "gamma": gamma,
            "mu": mu,
            "nu": nu,
            "a_sparse": sparsity_target,
        },
        "reduction": reduction.value if reduction else None,
        "constraint_fn": constraint.value if constraint else None,
        "ablation": list(ablate) if ablate else None,
        "seed": seed,
        "reproducible": obj.get("reproducible"),
        "metrics_every": metrics_every,
    }


@exit_on_error
@log_duration
def fuse(
    ctx: typer.Context,
    config: Optional[Path] = typer.Option(None, "--config", help="JSON run configuration"),
    lrhsi: Optional[Path] = typer.Option(None, "--lrhsi"),
    hrmsi: Optional[Path] = typer.Option(None, "--hrmsi"),
    coverage: Optional[Path] = typer.Option(None, "--coverage"),
    out: Optional[Path] = typer.Option(None, "--out"),
    iterations: Optional[int] = typer.Option(None, "--iterations"),
    lr: Optional[float] = typer.Option(None, "--lr", help="Initial learning rate"),
    p: Optional[int] = typer.Option(None, "--p", help="Number of endmembers"),
    alpha: Optional[float] = typer.Option(None, "--alpha"),
    beta: Optional[float] = typer.Option(None, "--beta"),
    gamma: Optional[float] = typer.Option(None, "--gamma"),
    mu: Optional[float] = typer.Option(None, "--mu"),
    nu: Optional[float] = typer.Option(None, "--nu"),
    sparsity_target: Optional[float] = typer.Option(None, "--sparsity-target"),
    reduction: Optional[ReductionConst] = typer.Option(None, "--reduction"),
    constraint: Optional[ConstraintConst] = typer.Option(None, "--constraint"),
    ablate: Optional[List[str]] = typer.Option(None, "--ablate", help="drop_Zb | drop_Za | drop_Y | drop_Ylr"),
    seed: Optional[int] = typer.Option(None, "--seed"),
    reference: Optional[Path] = typer.Option(None, "--reference", help="Ground-truth HrHSI cube"),
    true_psf: Optional[Path] = typer.Option(None, "--true-psf", help="Ground-truth PSF kernel CSV"),
    true_srf: Optional[Path] = typer.Option(None, "--true-srf", help="Ground-truth SRF weight CSV"),
    metrics_every: Optional[int] = typer.Option(None, "--metrics-every"),
):
    """Train the coupled autoencoders and write the fused HrHSI."""
    from src.services.pipeline import FusionRunService
    from src.services.run_config import resolve_run_config

    overrides = {
        "train": train_overrides(
            ctx, iterations, lr, p, alpha, beta, gamma, mu, nu, sparsity_target,
            reduction, constraint, ablate, seed, metrics_every,
        ),
        "paths": {
            "lrhsi": str(lrhsi) if lrhsi else None,
            "hrmsi": str(hrmsi) if hrmsi else None,
            "coverage": str(coverage) if coverage else None,
            "out": str(out) if out else None,
            "reference": str(reference) if reference else None,
            "true_psf": str(true_psf) if true_psf else None,
            "true_srf": str(true_srf) if true_srf else None,
        },
        "threads": (ctx.obj or {}).get("threads"),
    }
    cfg = resolve_run_config(config, overrides)
    result = FusionRunService(cfg).run()
    typer.echo(
        f"Fused {result.X_tilde.shape[0]}x{result.X_tilde.shape[1]}x{result.X_tilde.shape[2]} "
        f"cube written to {cfg.paths.out} (final L_total {result.final_breakdown['L_total']:.6f})"
    )
