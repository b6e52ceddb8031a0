from typing import List, Optional, Set

from pydantic import BaseModel, ConfigDict, Field, field_serializer, field_validator

from src.utils.constants import (
    AblationConst,
    ConstraintConst,
    ReductionConst,
    SceneDefaultsConst,
    TrainDefaultsConst,
)


class LossWeights(BaseModel):
    """Trade-off weights of the joint objective and the sparsity target."""
    alpha: float = Field(TrainDefaultsConst.ALPHA, ge=0, description="LrHSI reconstruction through the PSF bridge")
    beta: float = Field(TrainDefaultsConst.BETA, ge=0, description="HrMSI reconstruction")
    gamma: float = Field(TrainDefaultsConst.GAMMA, ge=0, description="LrMSI consistency")
    mu: float = Field(TrainDefaultsConst.MU, ge=0, description="Sum-to-one penalty")
    nu: float = Field(TrainDefaultsConst.NU, ge=0, description="KL sparsity penalty")
    a_sparse: float = Field(TrainDefaultsConst.SPARSITY_TARGET, gt=0, lt=1, description="KL sparsity target")

    model_config = ConfigDict(extra="forbid")


class AdamSettings(BaseModel):
    beta1: float = Field(TrainDefaultsConst.ADAM_BETA1, ge=0, lt=1)
    beta2: float = Field(TrainDefaultsConst.ADAM_BETA2, ge=0, lt=1)
    eps: float = Field(TrainDefaultsConst.ADAM_EPS, gt=0)

    model_config = ConfigDict(extra="forbid")


class TrainConfig(BaseModel):
    iterations: int = Field(TrainDefaultsConst.ITERATIONS, ge=1)
    lr0: float = Field(TrainDefaultsConst.LR0, gt=0)
    adam: AdamSettings = Field(default_factory=AdamSettings)
    weights: LossWeights = Field(default_factory=LossWeights)
    p: int = Field(TrainDefaultsConst.ENDMEMBERS, ge=1, description="Number of endmembers")
    hidden_widths: List[int] = Field(default_factory=lambda: list(TrainDefaultsConst.HIDDEN_WIDTHS))
    leaky_slope: float = Field(TrainDefaultsConst.LEAKY_SLOPE, ge=0)
    constraint_fn: ConstraintConst = ConstraintConst.CLAMP
    reduction: ReductionConst = ReductionConst.MEAN
    ablation: Set[AblationConst] = Field(default_factory=set)
    seed: int = Field(0, ge=0)
    reproducible: bool = False
    metrics_every: int = Field(TrainDefaultsConst.METRICS_EVERY, ge=1)
    log_every: int = Field(TrainDefaultsConst.LOG_EVERY, ge=1)

    model_config = ConfigDict(extra="forbid")

    @field_validator("ablation", mode="before")
    @classmethod
    def _parse_ablation(cls, v):
        if v is None:
            return set()
        if isinstance(v, (str, AblationConst)):
            v = [v]
        return {AblationConst.parse(item) for item in v}

    @field_validator("hidden_widths")
    @classmethod
    def _positive_widths(cls, v: List[int]) -> List[int]:
        if any(width < 1 for width in v):
            raise ValueError("hidden widths must be positive")
        return v

    @field_serializer("ablation")
    def _sorted_ablation(self, v: Set[AblationConst]) -> List[str]:
        return sorted(flag.value for flag in v)


class SceneConfig(BaseModel):
    """Synthetic ground-truth scene parameters."""
    size: int = Field(SceneDefaultsConst.SIZE, ge=SceneDefaultsConst.MIN_FIELD_SIZE)
    bands: int = Field(SceneDefaultsConst.BANDS, ge=2)
    p_true: int = Field(SceneDefaultsConst.ENDMEMBERS, ge=2)
    ratio: int = Field(SceneDefaultsConst.RATIO, ge=1)
    sigma: float = Field(SceneDefaultsConst.SIGMA, gt=0)
    msi_bands: int = Field(SceneDefaultsConst.MSI_BANDS, ge=1)
    wavelength_start_nm: float = SceneDefaultsConst.WAVELENGTH_START_NM
    wavelength_stop_nm: float = SceneDefaultsConst.WAVELENGTH_STOP_NM
    seed: int = Field(0, ge=0)

    model_config = ConfigDict(extra="forbid")

    @field_validator("wavelength_stop_nm")
    @classmethod
    def _increasing_range(cls, v: float, info) -> float:
        start = info.data.get("wavelength_start_nm")
        if start is not None and not v > start:
            raise ValueError("wavelength_stop_nm must exceed wavelength_start_nm")
        return v


class RunPaths(BaseModel):
    lrhsi: Optional[str] = None
    hrmsi: Optional[str] = None
    coverage: Optional[str] = None
    out: str = "out"
    reference: Optional[str] = Field(None, description="Ground-truth HrHSI cube")
    true_psf: Optional[str] = Field(None, description="Ground-truth PSF kernel CSV")
    true_srf: Optional[str] = Field(None, description="Ground-truth SRF weight table CSV")

    model_config = ConfigDict(extra="forbid")


class RunConfig(BaseModel):
    """On-disk union of the training configuration and the file paths of a run."""
    train: TrainConfig = Field(default_factory=TrainConfig)
    paths: RunPaths = Field(default_factory=RunPaths)
    threads: Optional[int] = Field(None, ge=1)

    model_config = ConfigDict(extra="forbid")
