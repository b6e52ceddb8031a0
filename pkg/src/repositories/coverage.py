import logging
from pathlib import Path
from typing import List, Sequence, Union

import numpy as np
import pandas as pd

from src.models.cube import NDArrayF, SpectralCoverage
from src.services.hsi_core import build_coverage
from src.utils.constants import CsvColumnsConst
from src.utils.errors import ConfigurationError

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]
WAVELENGTH_MATCH_NM = 1e-6


def _read_csv(path: PathLike, columns: List[str], what: str) -> pd.DataFrame:
    path = Path(path)
    if not path.exists():
        raise ConfigurationError(f"{what} file not found: {path}")
    frame = pd.read_csv(path)
    frame.columns = [str(c).strip() for c in frame.columns]
    missing = [c for c in columns if c not in frame.columns]
    if missing:
        raise ConfigurationError(f"{path}: missing column(s) {', '.join(missing)}")
    return frame


class CoverageRepository:
    """SRF coverage tables (one interval per MSI band) and optional SRF weight tables."""

    @staticmethod
    def read_coverage(path: PathLike, hsi_wavelengths: Sequence[float]) -> SpectralCoverage:
        frame = _read_csv(path, CsvColumnsConst.COVERAGE, "Coverage")
        frame = frame.sort_values("msi_band")
        if frame["msi_band"].duplicated().any():
            raise ConfigurationError(f"{path}: duplicate msi_band rows")
        intervals = list(zip(frame["lambda_low_nm"].astype(float), frame["lambda_high_nm"].astype(float)))
        coverage = build_coverage(hsi_wavelengths, intervals)
        logger.debug("Read coverage with %d MSI bands from %s", coverage.n_msi, path)
        return coverage

    @staticmethod
    def coverage_from_srf_table(path: PathLike, hsi_wavelengths: Sequence[float]) -> SpectralCoverage:
        """Coverage spanning the listed wavelengths with positive weight, per MSI band."""
        frame = _read_csv(path, CsvColumnsConst.SRF_WEIGHTS, "SRF weight")
        frame = frame[frame["weight"].astype(float) > 0]
        intervals = []
        for band, rows in frame.groupby("msi_band", sort=True):
            wl = rows["wavelength_nm"].astype(float)
            low, high = float(wl.min()), float(wl.max())
            if not low < high:
                low, high = low - WAVELENGTH_MATCH_NM, high + WAVELENGTH_MATCH_NM
            intervals.append((low, high))
        if not intervals:
            raise ConfigurationError(f"{path}: no positive SRF weights")
        return build_coverage(hsi_wavelengths, intervals)

    @staticmethod
    def write_coverage(path: PathLike, coverage: SpectralCoverage) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        frame = pd.DataFrame(
            [(i, lo, hi) for i, (lo, hi) in enumerate(coverage.msi_bands)],
            columns=CsvColumnsConst.COVERAGE,
        )
        frame.to_csv(path, index=False)
        return path

    @staticmethod
    def read_srf_weights(path: PathLike, coverage: SpectralCoverage) -> List[NDArrayF]:
        """Weight vectors per MSI band, matched to the covered HSI band centers."""
        frame = _read_csv(path, CsvColumnsConst.SRF_WEIGHTS, "SRF weight")
        weights = []
        for band, idx in enumerate(coverage.hsi_band_index_sets):
            rows = frame[frame["msi_band"] == band]
            vector = np.zeros(idx.size)
            for k, wavelength in enumerate(coverage.hsi_wavelengths[idx]):
                hit = rows[np.abs(rows["wavelength_nm"].astype(float) - wavelength) <= WAVELENGTH_MATCH_NM]
                if hit.empty:
                    raise ConfigurationError(
                        f"{path}: no weight for MSI band {band} at {wavelength:g} nm"
                    )
                vector[k] = float(hit["weight"].iloc[0])
            weights.append(vector)
        return weights

    @staticmethod
    def srf_weight_frame(coverage: SpectralCoverage, weights: Sequence[NDArrayF]) -> pd.DataFrame:
        rows = [
            (band, float(coverage.hsi_wavelengths[i]), float(w))
            for band, (idx, vector) in enumerate(zip(coverage.hsi_band_index_sets, weights))
            for i, w in zip(idx, vector)
        ]
        return pd.DataFrame(rows, columns=CsvColumnsConst.SRF_WEIGHTS)
