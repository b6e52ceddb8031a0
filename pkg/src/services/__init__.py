from .trainer import FusionTrainer, TrainResult
from .metrics import MetricsReport
from .scene import SyntheticScene

__all__ = [
    "FusionTrainer",
    "TrainResult",
    "MetricsReport",
    "SyntheticScene",
]
