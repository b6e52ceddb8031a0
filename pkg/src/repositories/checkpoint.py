import logging
import struct
from collections import OrderedDict
from pathlib import Path
from typing import BinaryIO, Mapping, Union

import numpy as np

from src.models.cube import NDArrayF
from src.models.network import ModelParams
from src.utils.constants import FileConst
from src.utils.errors import CubeFormatError

logger = logging.getLogger(__name__)


class CheckpointRepository:
    """Named float64 arrays behind an 8-byte magic.

    Layout (little-endian): magic, uint32 count, then per array uint16 name
    length, UTF-8 name, uint8 ndim, uint64 dims, f64 data in C order.
    """

    def __init__(self, path: Union[str, Path]):
        self.path = Path(path)

    def save(self, arrays: Mapping[str, NDArrayF]) -> Path:
        self.path.parent.mkdir(parents=True, exist_ok=True)
        with self.path.open("wb") as fh:
            fh.write(FileConst.CHECKPOINT_MAGIC)
            fh.write(struct.pack("<I", len(arrays)))
            for name, value in arrays.items():
                value = np.ascontiguousarray(value, dtype="<f8")
                encoded = name.encode("utf-8")
                fh.write(struct.pack("<H", len(encoded)))
                fh.write(encoded)
                fh.write(struct.pack("<B", value.ndim))
                fh.write(struct.pack(f"<{value.ndim}Q", *value.shape))
                fh.write(value.tobytes())
        logger.info("Saved checkpoint with %d arrays to %s", len(arrays), self.path)
        return self.path

    def save_params(self, params: ModelParams) -> Path:
        return self.save(params.as_dict())

    @staticmethod
    def _read(fh: BinaryIO, n: int, what: str) -> bytes:
        chunk = fh.read(n)
        if len(chunk) != n:
            raise CubeFormatError(f"Truncated checkpoint while reading {what}")
        return chunk

    def load(self) -> "OrderedDict[str, NDArrayF]":
        if not self.path.exists():
            raise CubeFormatError(f"Checkpoint not found: {self.path}")
        arrays: "OrderedDict[str, NDArrayF]" = OrderedDict()
        with self.path.open("rb") as fh:
            magic = fh.read(len(FileConst.CHECKPOINT_MAGIC))
            if magic != FileConst.CHECKPOINT_MAGIC:
                raise CubeFormatError(f"{self.path} is not a checkpoint (bad magic {magic!r})")
            (count,) = struct.unpack("<I", self._read(fh, 4, "array count"))
            for _ in range(count):
                (name_len,) = struct.unpack("<H", self._read(fh, 2, "name length"))
                name = self._read(fh, name_len, "name").decode("utf-8")
                (ndim,) = struct.unpack("<B", self._read(fh, 1, f"{name} ndim"))
                shape = struct.unpack(f"<{ndim}Q", self._read(fh, 8 * ndim, f"{name} shape"))
                n = int(np.prod(shape, dtype=np.int64)) if ndim else 1
                data = np.frombuffer(self._read(fh, 8 * n, f"{name} data"), dtype="<f8")
                arrays[name] = data.reshape(shape).astype(np.float64)
            if fh.read(1):
                raise CubeFormatError(f"Trailing bytes after {count} arrays in {self.path}")
        return arrays

    def load_into(self, params: ModelParams) -> ModelParams:
        params.load_dict(self.load())
        return params
