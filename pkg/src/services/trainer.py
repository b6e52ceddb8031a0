import contextlib
import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Mapping, Optional

import numpy as np
import pandas as pd
from threadpoolctl import threadpool_limits

from src.models.cube import ImageCube, NDArrayF, SpectralCoverage
from src.models.network import ModelParams
from src.schemas.train_config import AdamSettings, TrainConfig
from src.services import fusion_net, ops
from src.services.grad_engine import GradTape, LossEvaluation, backward
from src.services.losses import joint_loss_nodes
from src.services.metrics import mpsnr, msam
from src.utils.constants import CsvColumnsConst, ParamGroupConst
from src.utils.errors import ConfigurationError, DivergenceError, ShapeError

logger = logging.getLogger(__name__)


@dataclass
class AdamState:
    """First and second moments per parameter name plus the shared step counter."""
    m: Dict[str, NDArrayF] = field(default_factory=dict)
    v: Dict[str, NDArrayF] = field(default_factory=dict)
    t: int = 0

    @classmethod
    def zeros(cls, params: Mapping[str, NDArrayF]) -> "AdamState":
        return cls(
            m={name: np.zeros_like(value, dtype=np.float64) for name, value in params.items()},
            v={name: np.zeros_like(value, dtype=np.float64) for name, value in params.items()},
        )


def lr_at(iteration: int, cfg: TrainConfig) -> float:
    """Linear decay from lr0 at iteration 0 to 0 at ``cfg.iterations``."""
    if not 0 <= iteration <= cfg.iterations:
        raise ConfigurationError(f"Iteration {iteration} outside [0, {cfg.iterations}]")
    return cfg.lr0 * (1.0 - iteration / cfg.iterations)


def adam_step(
    params: Mapping[str, NDArrayF],
    grads: Mapping[str, NDArrayF],
    state: AdamState,
    lr: float,
    settings: AdamSettings = AdamSettings(),
    iteration: int = 0,
) -> Dict[str, NDArrayF]:
    """One bias-corrected Adam update; returns new arrays and advances ``state``.

    Raises ``DivergenceError`` naming the first parameter with a non-finite gradient.
    """
    for name, g in grads.items():
        if name not in params:
            raise ShapeError(f"Gradient for unknown parameter {name}")
        if np.shape(g) != np.shape(params[name]):
            raise ShapeError(f"Gradient for {name} has shape {np.shape(g)}, parameter {np.shape(params[name])}")
        if not np.all(np.isfinite(g)):
            raise DivergenceError(iteration, f"gradient of {name}")

    state.t += 1
    b1, b2 = settings.beta1, settings.beta2
    correction1 = 1.0 - b1 ** state.t
    correction2 = 1.0 - b2 ** state.t
    updated: Dict[str, NDArrayF] = {}
    for name, value in params.items():
        g = grads.get(name)
        if g is None:
            updated[name] = value
            continue
        m = state.m.setdefault(name, np.zeros_like(value, dtype=np.float64))
        v = state.v.setdefault(name, np.zeros_like(value, dtype=np.float64))
        m = b1 * m + (1.0 - b1) * g
        v = b2 * v + (1.0 - b2) * g * g
        state.m[name], state.v[name] = m, v
        m_hat = m / correction1
        v_hat = v / correction2
        updated[name] = value - lr * m_hat / (np.sqrt(v_hat) + settings.eps)
    return updated


def project_boxes(params: ModelParams) -> ModelParams:
    """Clip E, the PSF kernel and the SRF weights into [0, 1]; encoders are untouched."""
    params.endmembers.E = np.clip(params.endmembers.E, 0.0, 1.0)
    params.psf.kernel = np.clip(params.psf.kernel, 0.0, 1.0)
    params.srf.weights = np.clip(params.srf.weights, 0.0, 1.0) * params.srf.mask
    return params


def boxes_respected(params: ModelParams) -> bool:
    arrays = params.as_dict()
    return all(
        arrays[group.value].min() >= 0.0 and arrays[group.value].max() <= 1.0
        for group in ParamGroupConst.constrained()
    )


def softmax_abundance_variant(logits: NDArrayF) -> NDArrayF:
    """Channelwise softmax used in place of the final clamp when ``constraint_fn`` is softmax."""
    return ops.softmax_values(logits)


@dataclass
class TrainResult:
    params: ModelParams
    X_tilde: NDArrayF
    log: pd.DataFrame
    final_breakdown: Dict[str, float] = field(default_factory=dict)


def _data(x) -> NDArrayF:
    return x.data if isinstance(x, ImageCube) else np.asarray(x, dtype=np.float64)


class FusionTrainer:
    """Owns one ``ModelParams`` instance and runs the full-batch training loop."""

    def __init__(
        self,
        Z,
        Y,
        cfg: TrainConfig,
        coverage: SpectralCoverage,
        reference=None,
        params: Optional[ModelParams] = None,
        debug_checks: bool = False,
    ):
        self.Z = _data(Z)
        self.Y = _data(Y)
        self.cfg = cfg
        self.coverage = coverage
        self.reference = None if reference is None else _data(reference)
        self.debug_checks = debug_checks or logger.isEnabledFor(logging.DEBUG)
        self.ratio = fusion_net.gsd_ratio(self.Z.shape, self.Y.shape)
        if self.reference is not None and self.reference.shape[:2] != self.Y.shape[:2]:
            raise ShapeError(
                f"Reference is {self.reference.shape[0]}x{self.reference.shape[1]}, "
                f"HrMSI is {self.Y.shape[0]}x{self.Y.shape[1]}"
            )
        rng = np.random.default_rng(cfg.seed)
        self.params = params if params is not None else fusion_net.init_params(
            self.Z, self.Y, coverage, cfg.p, rng, cfg.hidden_widths, cfg.leaky_slope
        )
        self.state = AdamState.zeros(self.params.as_dict())
        self.rows: List[dict] = []

    def evaluate(self, want_grad: bool = True):
        tape = GradTape()
        graph = fusion_net.forward_graph(tape, self.Z, self.Y, self.params, self.cfg.constraint_fn)
        total, breakdown = joint_loss_nodes(
            graph, self.Z, self.Y, self.cfg.weights, self.cfg.ablation, self.cfg.reduction
        )
        grads = backward(total, tape, expected=self.params.as_dict()) if want_grad else None
        return graph, total, breakdown, grads

    def step(self, iteration: int) -> dict:
        lr = lr_at(iteration, self.cfg)
        graph, total, breakdown, grads = self.evaluate()
        if not np.isfinite(total.value):
            logger.error("Joint loss became %s at iteration %d", total.value, iteration)
            raise DivergenceError(iteration, "joint loss")

        updated = adam_step(self.params.as_dict(), grads, self.state, lr, self.cfg.adam, iteration)
        self.params.load_dict(updated)
        project_boxes(self.params)
        if self.debug_checks and not boxes_respected(self.params):
            raise AssertionError(f"Constrained weights left [0, 1] after iteration {iteration}")

        row = {"iter": iteration, "lr": lr, **breakdown}
        if self.reference is not None and (
            iteration % self.cfg.metrics_every == 0 or iteration == self.cfg.iterations - 1
        ):
            row["mPSNR"] = mpsnr(self.reference, graph.X_tilde.value)
            row["mSAM"] = msam(self.reference, graph.X_tilde.value)
        return row

    def run(self, callback: Optional[Callable[[dict], None]] = None) -> TrainResult:
        logger.info(
            "Training %d iterations: p=%d, ratio=%d, constraint=%s, ablation=%s, lr0=%g",
            self.cfg.iterations, self.cfg.p, self.ratio, self.cfg.constraint_fn.value,
            sorted(a.value for a in self.cfg.ablation) or "none", self.cfg.lr0,
        )
        # one BLAS thread keeps every matrix product in a fixed summation order
        limits = threadpool_limits(limits=1) if self.cfg.reproducible else contextlib.nullcontext()
        with limits:
            for iteration in range(self.cfg.iterations):
                row = self.step(iteration)
                self.rows.append(row)
                if callback is not None:
                    callback(row)
                if iteration % self.cfg.log_every == 0 or iteration == self.cfg.iterations - 1:
                    extra = f", mPSNR {row['mPSNR']:.3f} dB" if "mPSNR" in row else ""
                    logger.info("iter %d: lr %.3e, L_total %.6f%s", iteration, row["lr"], row["L_total"], extra)
            graph, _, final_breakdown, _ = self.evaluate(want_grad=False)

        for band in fusion_net.degenerate_srf_bands(self.params):
            logger.warning("Learned SRF weights of MSI band %d collapsed to zero", band)

        return TrainResult(
            params=self.params,
            X_tilde=graph.X_tilde.value,
            log=self.log_frame(),
            final_breakdown=final_breakdown,
        )

    def log_frame(self) -> pd.DataFrame:
        columns = list(CsvColumnsConst.TRAINING_LOG)
        if self.reference is not None:
            columns += CsvColumnsConst.TRAINING_METRICS
        return pd.DataFrame(self.rows, columns=columns)


def train(
    Z,
    Y,
    cfg: TrainConfig,
    coverage: SpectralCoverage,
    reference=None,
) -> TrainResult:
    return FusionTrainer(Z, Y, cfg, coverage, reference=reference).run()


def grad_check_loss_fn(
    Z: NDArrayF,
    Y: NDArrayF,
    template: ModelParams,
    cfg: TrainConfig,
) -> Callable[[Mapping[str, NDArrayF], bool], LossEvaluation]:
    """Joint loss as a function of named parameter arrays, for ``fd_check``."""
    def loss_fn(values: Mapping[str, NDArrayF], want_grad: bool) -> LossEvaluation:
        params = template.copy()
        params.load_dict(values)
        tape = GradTape()
        graph = fusion_net.forward_graph(tape, Z, Y, params, cfg.constraint_fn)
        total, _ = joint_loss_nodes(graph, Z, Y, cfg.weights, cfg.ablation, cfg.reduction)
        grads = backward(total, tape, expected=values) if want_grad else None
        return LossEvaluation(value=float(total.value), gradients=grads, kink_signature=tape.kink_signature())

    return loss_fn

