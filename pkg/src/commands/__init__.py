from .simulate import simulate
from .fuse import fuse
from .evaluate import evaluate
from .grad_check import grad_check
from .sweep import sweep_endmembers, sweep_weights

__all__ = [
    "simulate",
    "fuse",
    "evaluate",
    "grad_check",
    "sweep_endmembers",
    "sweep_weights",
]
