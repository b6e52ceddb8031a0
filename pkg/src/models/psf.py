from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from src.models.cube import NDArrayF
from src.utils.constants import NumericConst
from src.utils.errors import ConfigurationError


@dataclass(frozen=True, eq=False)
class GaussianPsf:
    """Ground-truth k x k point spread function, k equal to the GSD ratio."""
    size: int
    sigma: float
    kernel: NDArrayF

    def __post_init__(self):
        kernel = np.array(self.kernel, dtype=np.float64, copy=True)
        if kernel.shape != (self.size, self.size):
            raise ConfigurationError(f"PSF kernel must be {self.size}x{self.size}, got {kernel.shape}")
        if (kernel < 0).any():
            raise ConfigurationError("PSF kernel entries must be non-negative")
        if abs(kernel.sum() - 1.0) > NumericConst.KERNEL_SUM_TOLERANCE:
            raise ConfigurationError(f"PSF kernel must sum to 1, sums to {kernel.sum():.15g}")
        kernel.setflags(write=False)
        object.__setattr__(self, "kernel", kernel)
