"""Ground-truth spatial (PSF) and spectral (SRF) degradation operators."""

import logging
from typing import NamedTuple, Optional, Sequence

import numpy as np

from src.models.cube import ImageCube, NDArrayF, SpectralCoverage
from src.models.psf import GaussianPsf
from src.utils.errors import ConfigurationError, DegenerateSrfError, ShapeError

logger = logging.getLogger(__name__)


class DegradedTriplet(NamedTuple):
    lrhsi: ImageCube
    hrmsi: ImageCube
    lrmsi: ImageCube


def gaussian_kernel(size: int, sigma: float) -> GaussianPsf:
    """Sampled isotropic Gaussian normalised to sum 1.

    Offsets are measured from (size - 1) / 2, so even sizes sample a half-pixel grid.
    """
    if size < 1:
        raise ConfigurationError(f"PSF size must be >= 1, got {size}")
    if not sigma > 0:
        raise ConfigurationError(f"PSF sigma must be > 0, got {sigma}")
    offsets = np.arange(size, dtype=np.float64) - (size - 1) / 2.0
    xx, yy = np.meshgrid(offsets, offsets, indexing="ij")
    kernel = np.exp(-(xx ** 2 + yy ** 2) / (2.0 * sigma ** 2))
    kernel /= kernel.sum()
    return GaussianPsf(size=size, sigma=float(sigma), kernel=kernel)


def check_divisible(rows: int, cols: int, k: int) -> None:
    if rows % k:
        raise ShapeError(f"rows={rows} is not divisible by the PSF size {k}")
    if cols % k:
        raise ShapeError(f"cols={cols} is not divisible by the PSF size {k}")


def to_blocks(x: NDArrayF, k: int) -> NDArrayF:
    """View (R, C, ch) as (R/k, k, C/k, k, ch) non-overlapping k x k blocks."""
    rows, cols, ch = x.shape
    check_divisible(rows, cols, k)
    return x.reshape(rows // k, k, cols // k, k, ch)


def block_conv(x: NDArrayF, kernel: NDArrayF) -> NDArrayF:
    """Stride-k k x k convolution applied identically to every channel."""
    k = kernel.shape[0]
    return np.einsum("ikjlc,kl->ijc", to_blocks(x, k), kernel)


def srf_matrix(cov: SpectralCoverage, weights: Sequence) -> NDArrayF:
    """Validated dense (HSI x MSI) SRF weight matrix."""
    dense = cov.dense_weights(weights)
    if (dense < 0).any():
        raise ConfigurationError("SRF weights must be non-negative")
    sums = dense.sum(axis=0)
    for i, s in enumerate(sums):
        if not s > 0:
            raise DegenerateSrfError(i)
    return dense


def msi_wavelengths(cov: SpectralCoverage) -> Optional[NDArrayF]:
    centers = np.array([(lo + hi) / 2.0 for lo, hi in cov.msi_bands])
    if centers.size > 1 and not np.all(np.diff(centers) > 0):
        return None
    return centers


def apply_psf(cube: ImageCube, psf: GaussianPsf) -> ImageCube:
    return ImageCube(block_conv(cube.data, psf.kernel), cube.wavelengths)


def apply_srf(cube: ImageCube, cov: SpectralCoverage, weights: Sequence) -> ImageCube:
    if cube.bands != cov.n_hsi:
        raise ShapeError(f"Cube has {cube.bands} bands, coverage was built for {cov.n_hsi}")
    dense = srf_matrix(cov, weights)
    out = (cube.data @ dense) / dense.sum(axis=0)
    # convex combination; rounding may step a hair outside the input range
    out = np.clip(out, 0.0, 1.0)
    return ImageCube(out, msi_wavelengths(cov))


def simulate_triplet(
    hrhsi: ImageCube,
    psf: GaussianPsf,
    cov: SpectralCoverage,
    weights: Sequence,
    seed: int = 0,
) -> DegradedTriplet:
    """Simulate LrHSI, HrMSI and the doubly degraded LrMSI from a reference HrHSI.

    The protocol is noise free, so ``seed`` only tags the run in the logs.
    """
    logger.info(
        "Simulating triplet from %dx%dx%d HrHSI (ratio=%d, sigma=%.3g, msi_bands=%d, seed=%d)",
        hrhsi.rows, hrhsi.cols, hrhsi.bands, psf.size, psf.sigma, cov.n_msi, seed,
    )
    lrhsi = apply_psf(hrhsi, psf)
    hrmsi = apply_srf(hrhsi, cov, weights)
    lrmsi = apply_srf(lrhsi, cov, weights)
    return DegradedTriplet(lrhsi=lrhsi, hrmsi=hrmsi, lrmsi=lrmsi)
