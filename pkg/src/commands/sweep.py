from pathlib import Path
from typing import Optional

import typer

from src.commands.fuse import train_overrides
from src.utils.decorators import exit_on_error, log_duration


def _sweep_config(ctx, config, lrhsi, hrmsi, coverage, reference, out, iterations, seed):
    from src.services.run_config import resolve_run_config

    overrides = {
        "train": train_overrides(ctx, iterations=iterations, seed=seed),
        "paths": {
            "lrhsi": str(lrhsi) if lrhsi else None,
            "hrmsi": str(hrmsi) if hrmsi else None,
            "coverage": str(coverage) if coverage else None,
            "reference": str(reference) if reference else None,
            "out": str(out) if out else None,
        },
    }
    return resolve_run_config(config, overrides)


@exit_on_error
@log_duration
def sweep_endmembers(
    ctx: typer.Context,
    p_values: str = typer.Option("10,50,100", "--p-values", help="Comma-separated endmember counts"),
    repeats: int = typer.Option(1, "--repeats", min=1),
    config: Optional[Path] = typer.Option(None, "--config"),
    lrhsi: Optional[Path] = typer.Option(None, "--lrhsi"),
    hrmsi: Optional[Path] = typer.Option(None, "--hrmsi"),
    coverage: Optional[Path] = typer.Option(None, "--coverage"),
    reference: Optional[Path] = typer.Option(None, "--reference"),
    out: Optional[Path] = typer.Option(None, "--out"),
    iterations: Optional[int] = typer.Option(None, "--iterations"),
    seed: Optional[int] = typer.Option(None, "--seed"),
):
    """Fused quality as a function of the number of endmembers."""
    from src.services.pipeline import SweepService, parse_number_list

    cfg = _sweep_config(ctx, config, lrhsi, hrmsi, coverage, reference, out, iterations, seed)
    frame = SweepService(cfg).endmembers(parse_number_list(p_values, int), repeats)
    typer.echo(frame.to_string(index=False))


@exit_on_error
@log_duration
def sweep_weights(
    ctx: typer.Context,
    weight: str = typer.Option(..., "--weight", help="alpha | beta | gamma | mu | nu"),
    values: str = typer.Option(..., "--values", help="Comma-separated weight values"),
    repeats: int = typer.Option(1, "--repeats", min=1),
    config: Optional[Path] = typer.Option(None, "--config"),
    lrhsi: Optional[Path] = typer.Option(None, "--lrhsi"),
    hrmsi: Optional[Path] = typer.Option(None, "--hrmsi"),
    coverage: Optional[Path] = typer.Option(None, "--coverage"),
    reference: Optional[Path] = typer.Option(None, "--reference"),
    out: Optional[Path] = typer.Option(None, "--out"),
    iterations: Optional[int] = typer.Option(None, "--iterations"),
    seed: Optional[int] = typer.Option(None, "--seed"),
):
    """Fused quality as a function of one loss trade-off weight."""
    from src.services.pipeline import SweepService, parse_number_list

    cfg = _sweep_config(ctx, config, lrhsi, hrmsi, coverage, reference, out, iterations, seed)
    frame = SweepService(cfg).weights(weight, parse_number_list(values, float), repeats)
    typer.echo(frame.to_string(index=False))
