from pathlib import Path
from typing import Optional

import typer

from src.utils.constants import ExitCodeConst, GradCheckConst
from src.utils.decorators import exit_on_error, log_duration


@exit_on_error
@log_duration
def grad_check(
    seed: int = typer.Option(0, "--seed"),
    step: float = typer.Option(GradCheckConst.STEP, "--step", help="Central-difference step h"),
    tolerance: float = typer.Option(GradCheckConst.TOLERANCE, "--tolerance"),
    samples: int = typer.Option(GradCheckConst.SAMPLES_PER_GROUP, "--samples", help="Coordinates per parameter group"),
    out: Optional[Path] = typer.Option(None, "--out", help="Directory for the CSV report"),
):
    """Check analytic gradients against finite differences; exit 0 iff every group passes."""
    from src.services.pipeline import GradCheckService

    report = GradCheckService(seed).run(step, tolerance, samples)
    if out is not None:
        GradCheckService.write_report(out, report)
    for row in report.rows():
        status = "pass" if row["passed"] else "FAIL"
        typer.echo(f"{row['group']}: {status} (max rel error {row['max_rel_error']:.3e}, {row['sampled']} sampled)")
    if not report.passed:
        failed = ", ".join(g.group for g in report.groups if not g.passed)
        typer.echo(f"Gradient check failed for: {failed}", err=True)
        raise typer.Exit(code=int(ExitCodeConst.CHECK_FAILED))
