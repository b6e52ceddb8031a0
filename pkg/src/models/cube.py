from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
import numpy.typing as npt

from src.utils.constants import NumericConst
from src.utils.errors import ConfigurationError, CubeFormatError, ShapeError

NDArrayF = npt.NDArray[np.floating]
NDArrayI = npt.NDArray[np.integer]
NDArrayB = npt.NDArray[np.bool_]


def _frozen(array, dtype) -> np.ndarray:
    out = np.array(array, dtype=dtype, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class ImageCube:
    """Dense rows x cols x bands reflectance cube with optional band centers (nm).

    ``data`` is held as a read-only float64 array indexed ``[row, col, band]``;
    the on-disk layout is band-sequential (see ``CubeRepository``).
    """
    data: NDArrayF
    wavelengths: Optional[NDArrayF] = None

    def __post_init__(self):
        data = _frozen(self.data, np.float64)
        if data.ndim != 3 or min(data.shape) < 1:
            raise ShapeError(f"ImageCube data must be rows x cols x bands, got shape {data.shape}")
        if not np.all(np.isfinite(data)):
            raise CubeFormatError("ImageCube data contains non-finite values")
        tol = NumericConst.IO_TOLERANCE
        if data.min() < -tol or data.max() > 1.0 + tol:
            raise CubeFormatError(
                f"ImageCube values must lie in [0,1], found range [{data.min():.6g}, {data.max():.6g}]"
            )
        object.__setattr__(self, "data", data)

        if self.wavelengths is not None:
            wl = _frozen(self.wavelengths, np.float64).reshape(-1)
            if wl.size != data.shape[2]:
                raise ShapeError(f"Expected {data.shape[2]} wavelengths, got {wl.size}")
            if wl.size > 1 and not np.all(np.diff(wl) > 0):
                raise ConfigurationError("Wavelengths must be strictly increasing")
            object.__setattr__(self, "wavelengths", wl)

    @property
    def rows(self) -> int:
        return int(self.data.shape[0])

    @property
    def cols(self) -> int:
        return int(self.data.shape[1])

    @property
    def bands(self) -> int:
        return int(self.data.shape[2])

    @property
    def shape(self) -> Tuple[int, int, int]:
        return (self.rows, self.cols, self.bands)

    def equals(self, other: "ImageCube") -> bool:
        if self.shape != other.shape or not np.array_equal(self.data, other.data):
            return False
        if self.wavelengths is None or other.wavelengths is None:
            return self.wavelengths is None and other.wavelengths is None
        return np.array_equal(self.wavelengths, other.wavelengths)


@dataclass(frozen=True, eq=False)
class SpectralCoverage:
    """Wavelength interval of every MSI band and the HSI bands whose centers fall inside it."""
    msi_bands: Tuple[Tuple[float, float], ...]
    hsi_band_index_sets: Tuple[NDArrayI, ...]
    hsi_wavelengths: NDArrayF

    def __post_init__(self):
        wl = _frozen(self.hsi_wavelengths, np.float64).reshape(-1)
        object.__setattr__(self, "hsi_wavelengths", wl)
        object.__setattr__(self, "msi_bands", tuple((float(lo), float(hi)) for lo, hi in self.msi_bands))
        object.__setattr__(
            self,
            "hsi_band_index_sets",
            tuple(_frozen(idx, np.int64).reshape(-1) for idx in self.hsi_band_index_sets),
        )
        if len(self.msi_bands) != len(self.hsi_band_index_sets):
            raise ConfigurationError("One HSI index set is required per MSI band")
        for i, ((lo, hi), idx) in enumerate(zip(self.msi_bands, self.hsi_band_index_sets)):
            if not lo < hi:
                raise ConfigurationError(f"MSI band {i}: interval [{lo}, {hi}] is degenerate")
            if idx.size == 0:
                raise ConfigurationError(f"MSI band {i}: empty coverage for [{lo}, {hi}] nm")
            expected = np.flatnonzero((wl >= lo) & (wl <= hi))
            if not np.array_equal(np.sort(idx), expected):
                raise ConfigurationError(
                    f"MSI band {i}: index set is inconsistent with the HSI wavelength grid"
                )

    @property
    def n_msi(self) -> int:
        return len(self.msi_bands)

    @property
    def n_hsi(self) -> int:
        return int(self.hsi_wavelengths.size)

    def mask(self) -> NDArrayB:
        """Boolean (HSI bands x MSI bands) membership matrix."""
        m = np.zeros((self.n_hsi, self.n_msi), dtype=bool)
        for i, idx in enumerate(self.hsi_band_index_sets):
            m[idx, i] = True
        return m

    def dense_weights(self, weights) -> NDArrayF:
        """Scatter per-band weight vectors into an (HSI x MSI) matrix, zero outside coverage."""
        if len(weights) != self.n_msi:
            raise ShapeError(f"Expected {self.n_msi} SRF weight vectors, got {len(weights)}")
        dense = np.zeros((self.n_hsi, self.n_msi), dtype=np.float64)
        for i, (idx, w) in enumerate(zip(self.hsi_band_index_sets, weights)):
            w = np.asarray(w, dtype=np.float64).reshape(-1)
            if w.size != idx.size:
                raise ShapeError(
                    f"MSI band {i}: {w.size} SRF weights given for {idx.size} covered HSI bands"
                )
            dense[idx, i] = w
        return dense

    def band_weights(self, dense: NDArrayF) -> list:
        """Inverse of ``dense_weights``."""
        return [np.array(dense[idx, i]) for i, idx in enumerate(self.hsi_band_index_sets)]
