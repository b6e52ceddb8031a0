from datetime import datetime, timezone
from typing import Any, Dict, List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from src.utils.constants import CubeFormatConst


class CubeHeader(BaseModel):
    """JSON sidecar describing a raw band-sequential cube file."""
    rows: int = Field(..., ge=1)
    cols: int = Field(..., ge=1)
    bands: int = Field(..., ge=1)
    dtype: Literal["f32le"] = Field(CubeFormatConst.DTYPE, description="Sample type on disk")
    interleave: Literal["bsq"] = Field(CubeFormatConst.INTERLEAVE, description="Band-sequential layout")
    wavelengths_nm: Optional[List[float]] = Field(None, description="Band centers")

    model_config = ConfigDict(extra="ignore")

    @model_validator(mode="after")
    def _check_wavelengths(self) -> "CubeHeader":
        if self.wavelengths_nm is not None and len(self.wavelengths_nm) != self.bands:
            raise ValueError(f"{len(self.wavelengths_nm)} wavelengths given for {self.bands} bands")
        return self

    @property
    def byte_count(self) -> int:
        return self.rows * self.cols * self.bands * CubeFormatConst.BYTES_PER_SAMPLE


class HeatmapScale(BaseModel):
    """Min-max scale used to quantise a float map into an 8-bit PGM."""
    source: str
    minimum: float
    maximum: float
    rows: int
    cols: int


class RunManifest(BaseModel):
    command: str = Field(..., description="Subcommand that produced the directory")
    created_at: datetime = Field(default_factory=lambda: datetime.now(timezone.utc))
    files: List[str] = Field(default_factory=list)
    shapes: Dict[str, List[int]] = Field(default_factory=dict)
    seed: Optional[int] = None
    details: Dict[str, Any] = Field(default_factory=dict)

    @field_validator("files")
    @classmethod
    def _unique_files(cls, v: List[str]) -> List[str]:
        return list(dict.fromkeys(v))
