from pathlib import Path
from typing import Optional

import typer

from src.utils.constants import SceneDefaultsConst
from src.utils.decorators import exit_on_error, log_duration


@exit_on_error
@log_duration
def simulate(
    synthetic: bool = typer.Option(False, "--synthetic", help="Generate a planted scene instead of reading --hrhsi"),
    hrhsi: Optional[Path] = typer.Option(None, "--hrhsi", help="Reference HrHSI cube to degrade"),
    coverage: Optional[Path] = typer.Option(None, "--coverage", help="Coverage CSV: msi_band, lambda_low_nm, lambda_high_nm"),
    srf: Optional[Path] = typer.Option(None, "--srf", help="SRF weight CSV: msi_band, wavelength_nm, weight"),
    size: int = typer.Option(SceneDefaultsConst.SIZE, "--size"),
    bands: int = typer.Option(SceneDefaultsConst.BANDS, "--bands"),
    p_true: int = typer.Option(SceneDefaultsConst.ENDMEMBERS, "--p-true", help="Endmembers in the planted scene"),
    ratio: int = typer.Option(SceneDefaultsConst.RATIO, "--ratio", help="GSD ratio = PSF kernel size"),
    sigma: float = typer.Option(SceneDefaultsConst.SIGMA, "--sigma", help="Gaussian PSF standard deviation in HR pixels"),
    msi_bands: int = typer.Option(SceneDefaultsConst.MSI_BANDS, "--msi-bands"),
    normalise: bool = typer.Option(False, "--normalise", help="Min-max rescale an --hrhsi cube outside [0, 1]"),
    seed: int = typer.Option(0, "--seed"),
    out: Path = typer.Option(Path("out"), "--out"),
):
    """Simulate the LrHSI / HrMSI / LrMSI triplet from a synthetic or user-supplied HrHSI."""
    from src.schemas import SceneConfig
    from src.services.pipeline import SimulationService
    from src.utils.errors import ConfigurationError

    if synthetic == (hrhsi is not None):
        raise ConfigurationError("Pass exactly one of --synthetic or --hrhsi")

    service = SimulationService(out)
    if synthetic:
        service.synthetic(
            SceneConfig(
                size=size, bands=bands, p_true=p_true, ratio=ratio, sigma=sigma, msi_bands=msi_bands, seed=seed
            )
        )
    else:
        service.from_cube(hrhsi, ratio, sigma, coverage, srf, normalise, seed)
    typer.echo(f"Wrote triplet to {out}")
