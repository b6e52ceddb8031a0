from .cube import CubeRepository
from .checkpoint import CheckpointRepository
from .coverage import CoverageRepository
from .export import ExportRepository

__all__ = [
    "CubeRepository",
    "CheckpointRepository",
    "CoverageRepository",
    "ExportRepository",
]
