from .cube import ImageCube, SpectralCoverage
from .psf import GaussianPsf
from .network import (
    Conv1x1Stack,
    EndmemberLayer,
    ForwardBundle,
    ModelParams,
    PsfLayer,
    SrfLayer,
)

__all__ = [
    "ImageCube",
    "SpectralCoverage",
    "GaussianPsf",
    "Conv1x1Stack",
    "EndmemberLayer",
    "ForwardBundle",
    "ModelParams",
    "PsfLayer",
    "SrfLayer",
]
