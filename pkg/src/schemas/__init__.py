from .train_config import (
    AdamSettings,
    LossWeights,
    RunConfig,
    RunPaths,
    SceneConfig,
    TrainConfig,
)
from .cube import CubeHeader, HeatmapScale, RunManifest

__all__ = [
    "AdamSettings",
    "LossWeights",
    "RunConfig",
    "RunPaths",
    "SceneConfig",
    "TrainConfig",
    "CubeHeader",
    "HeatmapScale",
    "RunManifest",
]
