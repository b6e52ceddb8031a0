"""Shape and clamp primitives shared by every stage of the fusion pipeline."""

from typing import Optional, Sequence, Tuple

import numpy as np

from src.models.cube import ImageCube, NDArrayF, SpectralCoverage
from src.utils.errors import ConfigurationError, ShapeError


def unfold(cube: ImageCube) -> NDArrayF:
    """Pixels x bands matrix; row k is the spectrum of pixel k in row-major order."""
    return np.array(cube.data.reshape(cube.rows * cube.cols, cube.bands))


def fold(mat: NDArrayF, rows: int, cols: int, wavelengths: Optional[NDArrayF] = None) -> ImageCube:
    mat = np.asarray(mat, dtype=np.float64)
    if mat.ndim != 2:
        raise ShapeError(f"fold expects a 2-D matrix, got {mat.ndim} dimensions")
    if rows < 1 or cols < 1 or mat.shape[0] != rows * cols:
        raise ShapeError(f"Cannot fold {mat.shape[0]} rows into a {rows} x {cols} image")
    return ImageCube(mat.reshape(rows, cols, mat.shape[1]), wavelengths)


def clamp01(x) -> NDArrayF:
    """Elementwise min(max(x, 0), 1).

    The gradient contract used by the tape is pass-through on the open
    interval (0, 1) and zero elsewhere.
    """
    x = np.asarray(x, dtype=np.float64)
    if np.isnan(x).any():
        raise ValueError("clamp01 received NaN input")
    return np.clip(x, 0.0, 1.0)


def build_coverage(
    hsi_wavelengths: Sequence[float],
    msi_intervals: Sequence[Tuple[float, float]],
) -> SpectralCoverage:
    """Map each MSI interval to the HSI bands whose center lies inside it (inclusive bounds)."""
    wl = np.asarray(hsi_wavelengths, dtype=np.float64).reshape(-1)
    if wl.size == 0:
        raise ConfigurationError("HSI wavelength grid is empty")
    if wl.size > 1 and not np.all(np.diff(wl) > 0):
        raise ConfigurationError("HSI wavelengths must be strictly increasing")

    index_sets = []
    for i, (low, high) in enumerate(msi_intervals):
        if not low < high:
            raise ConfigurationError(f"MSI band {i}: interval ({low}, {high}) is degenerate")
        idx = np.flatnonzero((wl >= low) & (wl <= high))
        if idx.size == 0:
            raise ConfigurationError(
                f"MSI band {i}: empty coverage, no HSI band center in [{low}, {high}] nm"
            )
        index_sets.append(idx)
    return SpectralCoverage(tuple(msi_intervals), tuple(index_sets), wl)
