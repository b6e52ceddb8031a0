import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

import numpy as np
import pandas as pd

from src.models.cube import NDArrayF
from src.schemas.cube import HeatmapScale, RunManifest
from src.utils.constants import FileConst
from src.utils.errors import ConfigurationError, ShapeError

logger = logging.getLogger(__name__)


class ExportRepository:
    """Writes run artefacts under one output directory and remembers what it wrote."""

    def __init__(self, root: Union[str, Path]):
        self.root = Path(root)
        self.written: List[str] = []

    def path_for(self, name: str) -> Path:
        self.root.mkdir(parents=True, exist_ok=True)
        path = self.root / name
        self.written.append(name)
        return path

    def register(self, *names: str) -> None:
        """Record files written by another repository into the same directory."""
        self.written.extend(names)

    def write_table(self, name: str, frame: pd.DataFrame) -> Path:
        path = self.path_for(name)
        frame.to_csv(path, index=False)
        return path

    def write_rows(self, name: str, rows: Sequence[Dict[str, Any]], columns: Optional[List[str]] = None) -> Path:
        return self.write_table(name, pd.DataFrame(list(rows), columns=columns))

    def write_matrix(self, name: str, matrix: NDArrayF, columns: Optional[List[str]] = None) -> Path:
        matrix = np.atleast_2d(np.asarray(matrix, dtype=np.float64))
        columns = columns or [f"c{j}" for j in range(matrix.shape[1])]
        return self.write_table(name, pd.DataFrame(matrix, columns=columns))

    def write_kernel(self, name: str, kernel: NDArrayF) -> Path:
        return self.write_matrix(name, kernel)

    @staticmethod
    def read_kernel(path: Union[str, Path]) -> NDArrayF:
        path = Path(path)
        if not path.exists():
            raise ConfigurationError(f"Kernel file not found: {path}")
        kernel = pd.read_csv(path).to_numpy(dtype=np.float64)
        if kernel.ndim != 2 or kernel.shape[0] != kernel.shape[1]:
            raise ShapeError(f"{path}: kernel must be square, got {kernel.shape}")
        return kernel

    def write_pgm(self, name: str, values: NDArrayF) -> Path:
        """8-bit binary PGM, min-max scaled, with the scale in ``<name>.scale.json``."""
        values = np.asarray(values, dtype=np.float64)
        if values.ndim != 2:
            raise ShapeError(f"Heatmaps must be 2-D, got shape {values.shape}")
        low, high = float(values.min()), float(values.max())
        if high > low:
            scaled = np.round((values - low) / (high - low) * 255.0)
        else:
            scaled = np.zeros_like(values)
        pixels = scaled.astype(np.uint8)
        rows, cols = pixels.shape
        path = self.path_for(name)
        with path.open("wb") as fh:
            fh.write(f"P5\n{cols} {rows}\n255\n".encode("ascii"))
            fh.write(pixels.tobytes())
        scale = HeatmapScale(source=name, minimum=low, maximum=high, rows=rows, cols=cols)
        self.write_json(f"{Path(name).stem}.scale.json", scale.model_dump())
        return path

    def write_raw_f32(self, name: str, values: NDArrayF) -> Path:
        """Row-major little-endian float32 dump; the shape lives in the PGM scale sidecar."""
        path = self.path_for(name)
        path.write_bytes(np.ascontiguousarray(values, dtype="<f4").tobytes())
        return path

    def write_heatmap(self, stem: str, values: NDArrayF) -> List[Path]:
        return [self.write_pgm(f"{stem}.pgm", values), self.write_raw_f32(f"{stem}.f32", values)]

    def write_json(self, name: str, payload: Dict[str, Any]) -> Path:
        path = self.path_for(name)
        path.write_text(json.dumps(payload, indent=2, default=str))
        return path

    def write_manifest(self, manifest: RunManifest) -> Path:
        manifest.files = list(dict.fromkeys([*self.written, FileConst.MANIFEST]))
        path = self.path_for(FileConst.MANIFEST)
        path.write_text(manifest.model_dump_json(indent=2))
        logger.info("Wrote %d files to %s", len(manifest.files), self.root)
        return path
