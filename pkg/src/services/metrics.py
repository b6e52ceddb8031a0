"""Quality measures between a reference and an estimated HrHSI cube."""

import logging
from dataclasses import dataclass, field
from typing import Dict, List

import numpy as np

from src.models.cube import ImageCube, NDArrayF
from src.utils.constants import NumericConst
from src.utils.errors import ShapeError

logger = logging.getLogger(__name__)


def _pair(ref, est) -> tuple:
    r = ref.data if isinstance(ref, ImageCube) else np.asarray(ref, dtype=np.float64)
    e = est.data if isinstance(est, ImageCube) else np.asarray(est, dtype=np.float64)
    if r.shape != e.shape:
        raise ShapeError(f"Reference shape {r.shape} does not match estimate shape {e.shape}")
    if r.ndim == 2:
        r, e = r[None], e[None]
    if r.ndim != 3:
        raise ShapeError(f"Expected rows x cols x bands arrays, got {r.ndim}-d")
    return r, e


def psnr_band(ref, est, cap: float = NumericConst.PSNR_CAP_DB) -> NDArrayF:
    """PSNR of every band in dB, peak = per-band max of the reference.

    Exact matches report ``cap``; a band with zero peak and non-zero error reports ``-cap``.
    """
    r, e = _pair(ref, est)
    mse = ((r - e) ** 2).mean(axis=(0, 1))
    peak = r.max(axis=(0, 1))
    out = np.full(mse.shape, cap, dtype=np.float64)
    lossy = mse > 0
    with np.errstate(divide="ignore"):
        out[lossy] = 10.0 * np.log10(peak[lossy] ** 2 / mse[lossy])
    return np.clip(out, -cap, cap)


def mpsnr(ref, est, cap: float = NumericConst.PSNR_CAP_DB) -> float:
    return float(psnr_band(ref, est, cap).mean())


@dataclass
class SamResult:
    mean_deg: float
    map_deg: NDArrayF
    excluded_pixels: int


def sam(ref, est) -> SamResult:
    """Spectral angle per pixel in degrees.

    Pixels whose reference spectrum has zero norm are excluded from the mean
    and hold 0 in the map.
    """
    r, e = _pair(ref, est)
    nr = np.linalg.norm(r, axis=-1)
    ne = np.linalg.norm(e, axis=-1)
    dot = (r * e).sum(axis=-1)
    valid = nr > 0
    denom = np.where(valid, nr * ne, 1.0)
    cos = np.where(denom > 0, dot / np.where(denom > 0, denom, 1.0), 0.0)
    angle = np.degrees(np.arccos(np.clip(cos, -1.0, 1.0)))
    angle = np.where(valid, angle, 0.0)
    excluded = int((~valid).sum())
    if excluded:
        logger.debug("SAM: %d zero-norm reference pixels excluded", excluded)
    mean = float(angle[valid].mean()) if valid.any() else 0.0
    return SamResult(mean_deg=mean, map_deg=angle, excluded_pixels=excluded)


def sam_pixel(r: NDArrayF, e: NDArrayF) -> float:
    r = np.asarray(r, dtype=np.float64).reshape(1, 1, -1)
    e = np.asarray(e, dtype=np.float64).reshape(1, 1, -1)
    return float(sam(r, e).map_deg[0, 0])


def msam(ref, est) -> float:
    return sam(ref, est).mean_deg


def ergas(ref, est, ratio: int) -> float:
    """100 / ratio * sqrt(mean_b (RMSE_b / mean(ref_b))^2)."""
    if ratio <= 0:
        raise ShapeError(f"GSD ratio must be positive, got {ratio}")
    r, e = _pair(ref, est)
    rmse_b = np.sqrt(((r - e) ** 2).mean(axis=(0, 1)))
    mean_b = r.mean(axis=(0, 1))
    rel = np.where(mean_b > 0, rmse_b / np.where(mean_b > 0, mean_b, 1.0), 0.0)
    return float(100.0 / ratio * np.sqrt((rel ** 2).mean()))


def rmse(ref, est) -> tuple:
    """Global RMSE and the per-pixel RMSE map (over bands)."""
    r, e = _pair(ref, est)
    sq = (r - e) ** 2
    return float(np.sqrt(sq.mean())), np.sqrt(sq.mean(axis=-1))


def mrae(ref, est, eps: float = NumericConst.EPS_MRAE) -> tuple:
    """Mean of |r - e| / max(r, eps) and its per-pixel map."""
    r, e = _pair(ref, est)
    rel = np.abs(r - e) / np.maximum(r, eps)
    return float(rel.mean()), rel.mean(axis=-1)


def psf_kernel_error(learned: NDArrayF, truth: NDArrayF) -> float:
    learned = np.asarray(learned, dtype=np.float64)
    truth = np.asarray(truth, dtype=np.float64)
    if learned.shape != truth.shape:
        raise ShapeError(f"Kernel shapes differ: {learned.shape} vs {truth.shape}")

    def normalise(k: NDArrayF) -> NDArrayF:
        total = k.sum()
        return k / total if total > 0 else np.zeros_like(k)

    return float(np.sqrt(((normalise(learned) - normalise(truth)) ** 2).mean()))


@dataclass
class MetricsReport:
    mpsnr: float
    msam: float
    ergas: float
    rmse: float
    mrae: float
    psnr_per_band: NDArrayF
    sam_excluded_pixels: int = 0
    maps: Dict[str, NDArrayF] = field(default_factory=dict)

    def scalars(self) -> Dict[str, float]:
        return {
            "mPSNR": self.mpsnr,
            "mSAM": self.msam,
            "ERGAS": self.ergas,
            "RMSE": self.rmse,
            "MRAE": self.mrae,
            "SAM_excluded_pixels": self.sam_excluded_pixels,
        }


def evaluate(ref, est, ratio: int) -> MetricsReport:
    r, e = _pair(ref, est)
    sam_result = sam(r, e)
    rmse_value, rmse_map = rmse(r, e)
    mrae_value, mrae_map = mrae(r, e)
    per_band = psnr_band(r, e)
    report = MetricsReport(
        mpsnr=float(per_band.mean()),
        msam=sam_result.mean_deg,
        ergas=ergas(r, e, ratio),
        rmse=rmse_value,
        mrae=mrae_value,
        psnr_per_band=per_band,
        sam_excluded_pixels=sam_result.excluded_pixels,
        maps={"rmse": rmse_map, "mrae": mrae_map, "sam": sam_result.map_deg},
    )
    logger.info(
        "mPSNR %.4f dB, mSAM %.4f deg, ERGAS %.4f, RMSE %.6f, MRAE %.6f",
        report.mpsnr, report.msam, report.ergas, report.rmse, report.mrae,
    )
    return report


def srf_weight_error(learned: List[NDArrayF], truth: List[NDArrayF]) -> float:
    """RMSE between per-band SRF weight vectors after normalising each to sum 1."""
    if len(learned) != len(truth):
        raise ShapeError(f"{len(learned)} learned SRF bands vs {len(truth)} true bands")
    diffs = []
    for band, (lw, tw) in enumerate(zip(learned, truth)):
        lw, tw = np.asarray(lw, dtype=np.float64), np.asarray(tw, dtype=np.float64)
        if lw.shape != tw.shape:
            raise ShapeError(f"MSI band {band}: {lw.size} learned weights vs {tw.size} true weights")
        lw = lw / lw.sum() if lw.sum() > 0 else np.zeros_like(lw)
        tw = tw / tw.sum() if tw.sum() > 0 else np.zeros_like(tw)
        diffs.append(lw - tw)
    return float(np.sqrt(np.mean(np.concatenate(diffs) ** 2)))
