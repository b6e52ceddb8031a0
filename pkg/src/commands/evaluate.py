from pathlib import Path

import typer

from src.utils.decorators import exit_on_error, log_duration


@exit_on_error
@log_duration
def evaluate(
    ref: Path = typer.Option(..., "--ref", help="Reference HrHSI cube"),
    est: Path = typer.Option(..., "--est", help="Estimated HrHSI cube"),
    ratio: int = typer.Option(..., "--ratio", help="GSD ratio used by ERGAS"),
    out: Path = typer.Option(Path("eval"), "--out"),
):
    """Compute mPSNR, mSAM, ERGAS, RMSE and MRAE plus per-band PSNR and error heatmaps."""
    from src.services.pipeline import EvaluationService

    report = EvaluationService(out).run(ref, est, ratio)
    for name, value in report.scalars().items():
        typer.echo(f"{name}: {value:.6g}")
