import logging
from pathlib import Path
from typing import Union

import numpy as np
from pydantic import ValidationError

from src.models.cube import ImageCube
from src.schemas.cube import CubeHeader
from src.utils.constants import FileConst
from src.utils.errors import CubeFormatError

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


class CubeRepository:
    """Raw little-endian float32 band-sequential cubes with a JSON sidecar.

    ``foo.cube`` holds bands x rows x cols samples, ``foo.json`` the ``CubeHeader``.
    In memory cubes are rows x cols x bands.
    """

    def __init__(self, root: PathLike = "."):
        self.root = Path(root)

    def _resolve(self, name: PathLike) -> Path:
        path = Path(name)
        if not path.is_absolute() and not path.exists():
            path = self.root / path
        if path.suffix != FileConst.CUBE_SUFFIX:
            path = path.with_name(path.name + FileConst.CUBE_SUFFIX)
        return path

    @staticmethod
    def sidecar_path(path: Path) -> Path:
        return path.with_suffix(FileConst.SIDECAR_SUFFIX)

    def save(self, name: PathLike, cube: ImageCube) -> Path:
        path = self._resolve(name)
        path.parent.mkdir(parents=True, exist_ok=True)
        header = CubeHeader(
            rows=cube.rows,
            cols=cube.cols,
            bands=cube.bands,
            wavelengths_nm=None if cube.wavelengths is None else [float(w) for w in cube.wavelengths],
        )
        bsq = np.ascontiguousarray(np.transpose(cube.data, (2, 0, 1)), dtype="<f4")
        path.write_bytes(bsq.tobytes())
        self.sidecar_path(path).write_text(header.model_dump_json(indent=2))
        logger.debug("Wrote %s (%dx%dx%d)", path, cube.rows, cube.cols, cube.bands)
        return path

    def read_header(self, name: PathLike) -> CubeHeader:
        path = self._resolve(name)
        sidecar = self.sidecar_path(path)
        if not sidecar.exists():
            raise CubeFormatError(f"Missing sidecar {sidecar} for cube {path}")
        try:
            return CubeHeader.model_validate_json(sidecar.read_text())
        except ValidationError as e:
            raise CubeFormatError(f"Invalid sidecar {sidecar}: {e.errors()[0]['msg']}")

    def load(self, name: PathLike, normalise: bool = False) -> ImageCube:
        """Read a cube; ``normalise`` min-max rescales data that falls outside [0, 1]."""
        path = self._resolve(name)
        if not path.exists():
            raise CubeFormatError(f"Cube file not found: {path}")
        header = self.read_header(path)
        size = path.stat().st_size
        if size != header.byte_count:
            raise CubeFormatError(
                f"{path}: expected {header.byte_count} bytes for "
                f"{header.rows}x{header.cols}x{header.bands} f32, found {size}"
            )
        bsq = np.fromfile(path, dtype="<f4").reshape(header.bands, header.rows, header.cols)
        data = np.transpose(bsq, (1, 2, 0)).astype(np.float64)
        if not np.all(np.isfinite(data)):
            raise CubeFormatError(f"{path}: cube contains non-finite samples")
        if normalise:
            low, high = data.min(), data.max()
            if low < 0.0 or high > 1.0:
                logger.info("Min-max normalising %s from [%.6g, %.6g]", path, low, high)
                data = (data - low) / (high - low) if high > low else np.zeros_like(data)
        try:
            return ImageCube(data, header.wavelengths_nm)
        except CubeFormatError as e:
            raise CubeFormatError(f"{path}: {e.message}")
