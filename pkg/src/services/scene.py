"""Synthetic ground-truth scenes with known endmembers, abundances, PSF and SRF."""

import logging
from dataclasses import dataclass
from itertools import combinations
from typing import List, Tuple, Union

import numpy as np

from src.models.cube import ImageCube, NDArrayF, SpectralCoverage
from src.models.psf import GaussianPsf
from src.schemas.train_config import SceneConfig
from src.services.degradation import DegradedTriplet, check_divisible, gaussian_kernel, simulate_triplet
from src.services.hsi_core import build_coverage
from src.utils.constants import SceneDefaultsConst
from src.utils.errors import ConfigurationError

logger = logging.getLogger(__name__)

Seed = Union[int, np.random.SeedSequence]

MAX_ENDMEMBER_ATTEMPTS = 1000
ABUNDANCE_SHARPNESS = 4.0
COSINE_COMPONENTS = 3
PATCH_CELL = 3          # pixels per jittered patch-grid cell
PATCH_WEIGHT = 1.0


@dataclass(frozen=True, eq=False)
class SyntheticScene:
    hrhsi: ImageCube
    true_E: NDArrayF
    true_A: NDArrayF
    psf: GaussianPsf
    coverage: SpectralCoverage
    srf_weights: Tuple[NDArrayF, ...]
    seed: int

    @property
    def p_true(self) -> int:
        return int(self.true_E.shape[0])


def _angle_deg(a: NDArrayF, b: NDArrayF) -> float:
    cos = float(a @ b / (np.linalg.norm(a) * np.linalg.norm(b)))
    return float(np.degrees(np.arccos(np.clip(cos, -1.0, 1.0))))


def _smooth_spectrum(rng: np.random.Generator, bands: int) -> NDArrayF:
    axis = np.arange(bands, dtype=np.float64)
    spectrum = np.zeros(bands)
    for _ in range(rng.integers(2, 5)):
        center = rng.uniform(0.0, bands - 1)
        width = max(0.5, rng.uniform(bands / 10.0, bands / 3.0))
        spectrum += rng.uniform(0.3, 1.0) * np.exp(-0.5 * ((axis - center) / width) ** 2)
    span = spectrum.max() - spectrum.min()
    unit = (spectrum - spectrum.min()) / span if span > 0 else np.full(bands, 0.5)
    low, high = rng.uniform(0.05, 0.3), rng.uniform(0.6, 0.95)
    return low + (high - low) * unit


def gen_endmembers(
    p_true: int,
    bands: int,
    seed: Seed = 0,
    min_angle_deg: float = SceneDefaultsConst.MIN_ENDMEMBER_ANGLE_DEG,
) -> NDArrayF:
    """p_true smooth spectra in [0.05, 0.95], pairwise at least ``min_angle_deg`` apart."""
    if p_true < 2:
        raise ConfigurationError(f"At least 2 endmembers are required, got {p_true}")
    if bands < 2:
        raise ConfigurationError(f"At least 2 bands are required, got {bands}")
    rng = np.random.default_rng(seed)
    rows: List[NDArrayF] = []
    attempts = 0
    while len(rows) < p_true:
        attempts += 1
        if attempts > MAX_ENDMEMBER_ATTEMPTS * p_true:
            raise ConfigurationError(
                f"Could not draw {p_true} endmembers {min_angle_deg} degrees apart over {bands} bands"
            )
        candidate = _smooth_spectrum(rng, bands)
        if all(_angle_deg(candidate, row) >= min_angle_deg for row in rows):
            rows.append(candidate)
    return np.vstack(rows)


def _patch_labels(rows: int, cols: int, rng: np.random.Generator) -> np.ndarray:
    """Patch index per pixel: nearest jittered site among the 3 x 3 grid cells around the pixel."""
    grid_r, grid_c = -(-rows // PATCH_CELL), -(-cols // PATCH_CELL)
    lattice = np.stack(np.meshgrid(np.arange(grid_r), np.arange(grid_c), indexing="ij"), axis=-1)
    sites = (lattice + rng.uniform(size=(grid_r, grid_c, 2))) * PATCH_CELL
    centre_r, centre_c = np.arange(rows) + 0.5, np.arange(cols) + 0.5
    home_r, home_c = (centre_r // PATCH_CELL).astype(int), (centre_c // PATCH_CELL).astype(int)

    best = np.full((rows, cols), np.inf)
    labels = np.zeros((rows, cols), dtype=int)
    for dr in (-1, 0, 1):
        for dc in (-1, 0, 1):
            nr = np.clip(home_r + dr, 0, grid_r - 1)[:, None]
            nc = np.clip(home_c + dc, 0, grid_c - 1)[None, :]
            site = sites[nr, nc]
            dist = (site[..., 0] - centre_r[:, None]) ** 2 + (site[..., 1] - centre_c[None, :]) ** 2
            closer = dist < best
            best = np.where(closer, dist, best)
            labels = np.where(closer, nr * grid_c + nc, labels)
    return labels


def gen_abundance_field(rows: int, cols: int, p_true: int, seed: Seed = 0) -> NDArrayF:
    """rows x cols x p_true abundances on the simplex.

    Logits are smooth random cosine fields plus piecewise-constant patches a
    few pixels across, so the field has sharp edges inside every GSD block.
    """
    if min(rows, cols) < SceneDefaultsConst.MIN_FIELD_SIZE:
        raise ConfigurationError(
            f"Abundance fields need at least {SceneDefaultsConst.MIN_FIELD_SIZE} rows and cols, got {rows}x{cols}"
        )
    if p_true < 1:
        raise ConfigurationError(f"p_true must be >= 1, got {p_true}")
    if p_true == 1:
        return np.ones((rows, cols, 1))

    rng = np.random.default_rng(seed)
    rr, cc = np.meshgrid(np.arange(rows) / rows, np.arange(cols) / cols, indexing="ij")
    smooth = np.zeros((rows, cols, p_true))
    for j in range(p_true):
        for _ in range(COSINE_COMPONENTS):
            fr, fc = rng.uniform(0.5, 2.5, size=2)
            phase = rng.uniform(0.0, 2.0 * np.pi)
            smooth[..., j] += rng.uniform(0.5, 1.0) * np.cos(2.0 * np.pi * (fr * rr + fc * cc) + phase)
    labels = _patch_labels(rows, cols, rng)
    offsets = rng.normal(size=(int(labels.max()) + 1, p_true))

    logits = _standardise(smooth) + PATCH_WEIGHT * offsets[labels]
    logits = ABUNDANCE_SHARPNESS * _standardise(logits)
    logits -= logits.max(axis=-1, keepdims=True)
    weights = np.exp(logits)
    return weights / weights.sum(axis=-1, keepdims=True)


def _standardise(fields: NDArrayF) -> NDArrayF:
    """Zero mean and unit variance per channel; constant channels become 0."""
    mean = fields.mean(axis=(0, 1), keepdims=True)
    std = fields.std(axis=(0, 1), keepdims=True)
    return np.divide(fields - mean, std, out=np.zeros_like(fields), where=std > 0)


def synthetic_wavelengths(cfg: SceneConfig) -> NDArrayF:
    return np.linspace(cfg.wavelength_start_nm, cfg.wavelength_stop_nm, cfg.bands)


def synthetic_coverage(wavelengths: NDArrayF, msi_bands: int) -> SpectralCoverage:
    """Equal-width contiguous MSI intervals spanning the HSI grid."""
    step = (wavelengths[-1] - wavelengths[0]) / max(len(wavelengths) - 1, 1)
    edges = np.linspace(wavelengths[0] - step / 2.0, wavelengths[-1] + step / 2.0, msi_bands + 1)
    return build_coverage(wavelengths, list(zip(edges[:-1], edges[1:])))


def triangular_weights(n: int) -> NDArrayF:
    """Within-band response peaking at the band middle, 0.1 floor at the edges."""
    j = np.arange(n, dtype=np.float64)
    return 1.0 - 0.9 * np.abs(2.0 * (j + 0.5) / n - 1.0)


def gen_scene(cfg: SceneConfig) -> Tuple[SyntheticScene, DegradedTriplet]:
    check_divisible(cfg.size, cfg.size, cfg.ratio)
    endmember_seed, abundance_seed = np.random.SeedSequence(cfg.seed).spawn(2)
    wavelengths = synthetic_wavelengths(cfg)
    E = gen_endmembers(cfg.p_true, cfg.bands, endmember_seed)
    A = gen_abundance_field(cfg.size, cfg.size, cfg.p_true, abundance_seed)

    X = (A.reshape(-1, cfg.p_true) @ E).reshape(cfg.size, cfg.size, cfg.bands)
    if X.min() < 0.0 or X.max() > 1.0:
        logger.warning("Synthetic scene left [0, 1] (range %.4g..%.4g); clamping", X.min(), X.max())
        X = np.clip(X, 0.0, 1.0)
    hrhsi = ImageCube(X, wavelengths)

    psf = gaussian_kernel(cfg.ratio, cfg.sigma)
    coverage = synthetic_coverage(wavelengths, cfg.msi_bands)
    weights = tuple(triangular_weights(idx.size) for idx in coverage.hsi_band_index_sets)
    scene = SyntheticScene(
        hrhsi=hrhsi,
        true_E=E,
        true_A=A,
        psf=psf,
        coverage=coverage,
        srf_weights=weights,
        seed=cfg.seed,
    )
    logger.info(
        "Generated %dx%dx%d synthetic scene with %d endmembers (seed=%d)",
        cfg.size, cfg.size, cfg.bands, cfg.p_true, cfg.seed,
    )
    return scene, simulate_triplet(hrhsi, psf, coverage, weights, cfg.seed)
