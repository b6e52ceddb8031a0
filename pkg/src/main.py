from typing import Optional

import typer
from click.core import ParameterSource

from src.commands import (
    evaluate,
    fuse,
    grad_check,
    simulate,
    sweep_endmembers,
    sweep_weights,
)
from src.config.config import apply_thread_hint, settings
from src.config.logger import parse_level, setup_logging

app = typer.Typer(
    name="specfuse",
    help="Unsupervised HSI-MSI fusion with coupled autoencoders and a learned PSF and SRF.",
    no_args_is_help=True,
    add_completion=False,
)


@app.callback()
def main(
    ctx: typer.Context,
    log_level: str = typer.Option("INFO", "--log-level", help="DEBUG, INFO, WARNING or ERROR"),
    threads: Optional[int] = typer.Option(None, "--threads", min=1, help="Thread hint for array math"),
    reproducible: bool = typer.Option(
        False, "--reproducible/--no-reproducible", help="Single-threaded deterministic runs"
    ),
):
    try:
        setup_logging(parse_level(log_level))
    except ValueError as e:
        raise typer.BadParameter(str(e), param_hint="--log-level")
    # None lets a config file decide; the flag or SPECFUSE_REPRODUCIBLE overrides it
    chosen: Optional[bool] = reproducible
    if ctx.get_parameter_source("reproducible") != ParameterSource.COMMANDLINE:
        chosen = True if settings.reproducible else None
    # numeric modules are imported lazily by the commands, after this point
    applied = apply_thread_hint(threads, bool(chosen))
    ctx.obj = {"threads": applied, "reproducible": chosen}


app.command("simulate")(simulate)
app.command("fuse")(fuse)
app.command("evaluate")(evaluate)
app.command("grad-check")(grad_check)
app.command("sweep-endmembers")(sweep_endmembers)
app.command("sweep-weights")(sweep_weights)


if __name__ == "__main__":
    app()
