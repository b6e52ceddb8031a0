"""Abundance sparsity / sum-to-one diagnostics and the endmember-count and weight studies."""

import logging
from dataclasses import dataclass, field
from typing import Dict, Iterable, Optional, Sequence

import numpy as np
import pandas as pd

from src.models.cube import NDArrayF, SpectralCoverage
from src.models.network import ForwardBundle
from src.schemas.train_config import TrainConfig
from src.services import trainer
from src.services.metrics import msam, mpsnr, psf_kernel_error
from src.utils.errors import ConfigurationError

logger = logging.getLogger(__name__)

HISTOGRAM_BINS = 20
SPARSE_THRESHOLD = 0.1
SWEEPABLE_WEIGHTS = ("alpha", "beta", "gamma", "mu", "nu")


@dataclass
class AbundanceDiagnostics:
    histogram: pd.DataFrame
    summary: pd.DataFrame
    sum_error_maps: Dict[str, NDArrayF] = field(default_factory=dict)


def abundance_diagnostics(bundle: ForwardBundle, bins: int = HISTOGRAM_BINS) -> AbundanceDiagnostics:
    hist_rows, summary_rows, maps = [], [], {}
    edges = np.linspace(0.0, 1.0, bins + 1)
    for name, cube in bundle.abundances().items():
        values = np.clip(cube.reshape(-1), 0.0, 1.0)
        counts, _ = np.histogram(values, bins=edges)
        for low, high, count in zip(edges[:-1], edges[1:], counts):
            hist_rows.append(
                {"cube": name, "bin_low": low, "bin_high": high, "count": int(count), "fraction": count / values.size}
            )
        sum_error = np.abs(1.0 - cube.sum(axis=-1))
        maps[name] = sum_error
        summary_rows.append(
            {
                "cube": name,
                "entries": int(cube.size),
                "fraction_below_0_1": float((cube < SPARSE_THRESHOLD).mean()),
                "mean_sum_error": float(sum_error.mean()),
                "min": float(cube.min()),
                "max": float(cube.max()),
            }
        )
    return AbundanceDiagnostics(
        histogram=pd.DataFrame(hist_rows),
        summary=pd.DataFrame(summary_rows),
        sum_error_maps=maps,
    )


def _score(result: trainer.TrainResult, reference: NDArrayF) -> Dict[str, float]:
    return {"mPSNR": mpsnr(reference, result.X_tilde), "mSAM": msam(reference, result.X_tilde)}


def sweep_endmembers(
    Z: NDArrayF,
    Y: NDArrayF,
    coverage: SpectralCoverage,
    reference: NDArrayF,
    base: TrainConfig,
    p_values: Iterable[int],
    repeats: int = 1,
) -> pd.DataFrame:
    """Train once per (p, seed) pair and score each fused cube against ``reference``."""
    rows = []
    for p in p_values:
        if p < 1:
            raise ConfigurationError(f"Endmember counts must be >= 1, got {p}")
        for r in range(repeats):
            cfg = base.model_copy(update={"p": p, "seed": base.seed + r})
            logger.info("Endmember sweep: p=%d, seed=%d", p, cfg.seed)
            result = trainer.train(Z, Y, cfg, coverage, reference=reference)
            rows.append({"p": p, "seed": cfg.seed, **_score(result, reference)})
    return pd.DataFrame(rows, columns=["p", "seed", "mPSNR", "mSAM"])


def sweep_weights(
    Z: NDArrayF,
    Y: NDArrayF,
    coverage: SpectralCoverage,
    reference: NDArrayF,
    base: TrainConfig,
    weight: str,
    values: Sequence[float],
    repeats: int = 1,
) -> pd.DataFrame:
    if weight not in SWEEPABLE_WEIGHTS:
        raise ConfigurationError(f"Unknown loss weight {weight!r}; choose one of {', '.join(SWEEPABLE_WEIGHTS)}")
    rows = []
    for value in values:
        if value < 0:
            raise ConfigurationError(f"Loss weights must be non-negative, got {weight}={value}")
        for r in range(repeats):
            weights = base.weights.model_copy(update={weight: float(value)})
            cfg = base.model_copy(update={"weights": weights, "seed": base.seed + r})
            logger.info("Weight sweep: %s=%g, seed=%d", weight, value, cfg.seed)
            result = trainer.train(Z, Y, cfg, coverage, reference=reference)
            rows.append({"weight": weight, "value": float(value), "seed": cfg.seed, **_score(result, reference)})
    return pd.DataFrame(rows, columns=["weight", "value", "seed", "mPSNR", "mSAM"])


def summarise_sweep(frame: pd.DataFrame, key: str) -> pd.DataFrame:
    return frame.groupby(key, as_index=False)[["mPSNR", "mSAM"]].mean()


def psf_report(learned: NDArrayF, truth: Optional[NDArrayF] = None) -> Dict[str, float]:
    total = learned.sum()
    report = {"psf_sum": float(total)}
    if truth is not None:
        report["psf_kernel_error"] = psf_kernel_error(learned, truth)
        logger.info("Learned PSF vs truth: RMSE %.5f after normalisation", report["psf_kernel_error"])
    return report
