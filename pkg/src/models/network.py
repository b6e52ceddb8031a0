from __future__ import annotations

from collections import OrderedDict
from dataclasses import dataclass
from typing import Dict, List

import numpy as np

from src.models.cube import NDArrayF, SpectralCoverage
from src.utils.constants import NumericConst, ParamGroupConst
from src.utils.errors import ShapeError


@dataclass
class Conv1x1Stack:
    """Chain of per-pixel affine layers with leaky activations between them."""
    layer_widths: List[int]
    weights: List[NDArrayF]
    biases: List[NDArrayF]
    slope: float = 0.02
    output_clamp: bool = True

    def __post_init__(self):
        if len(self.layer_widths) < 2:
            raise ShapeError("A 1x1 stack needs at least an input and an output width")
        if len(self.weights) != len(self.layer_widths) - 1 or len(self.biases) != len(self.weights):
            raise ShapeError("One weight matrix and one bias per layer transition are required")
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            expected = (self.layer_widths[i], self.layer_widths[i + 1])
            if w.shape != expected or b.shape != (expected[1],):
                raise ShapeError(f"Layer {i}: expected weight {expected}, got {w.shape} / bias {b.shape}")

    @classmethod
    def initialise(
        cls,
        widths: List[int],
        rng: np.random.Generator,
        slope: float = 0.02,
        output_bias: float = 0.0,
        output_scale: float = 1.0,
    ) -> "Conv1x1Stack":
        """Uniform weights in +/- sqrt(1/fan_in), zero biases.

        The last layer's weights are multiplied by ``output_scale`` and its bias set to ``output_bias``.
        """
        weights, biases = [], []
        last = len(widths) - 2
        for i, (fan_in, fan_out) in enumerate(zip(widths[:-1], widths[1:])):
            bound = np.sqrt(1.0 / fan_in)
            w = rng.uniform(-bound, bound, size=(fan_in, fan_out))
            weights.append(w * output_scale if i == last else w)
            biases.append(np.full(fan_out, output_bias if i == last else 0.0))
        return cls(layer_widths=list(widths), weights=weights, biases=biases, slope=slope)

    @property
    def in_width(self) -> int:
        return self.layer_widths[0]

    @property
    def out_width(self) -> int:
        return self.layer_widths[-1]


@dataclass
class EndmemberLayer:
    """Shared bias-free decoder; row j of ``E`` is endmember j."""
    E: NDArrayF

    @property
    def p(self) -> int:
        return int(self.E.shape[0])

    @property
    def bands(self) -> int:
        return int(self.E.shape[1])


@dataclass
class PsfLayer:
    """Learnable k x k stride-k kernel applied to every channel."""
    kernel: NDArrayF

    @property
    def k(self) -> int:
        return int(self.kernel.shape[0])


@dataclass
class SrfLayer:
    """Learnable spectral response restricted to the known coverage.

    ``weights`` is the dense (HSI x MSI) matrix; entries outside the coverage
    mask are held at zero and never receive gradient.
    """
    coverage: SpectralCoverage
    weights: NDArrayF
    eps_norm: float = NumericConst.EPS_NORM

    def __post_init__(self):
        expected = (self.coverage.n_hsi, self.coverage.n_msi)
        if self.weights.shape != expected:
            raise ShapeError(f"SRF weights must be {expected}, got {self.weights.shape}")
        self.weights = self.weights * self.coverage.mask()

    @property
    def mask(self) -> np.ndarray:
        return self.coverage.mask()

    def band_weights(self) -> list:
        return self.coverage.band_weights(self.weights)


@dataclass
class ModelParams:
    enc_lr: Conv1x1Stack
    enc_hr: Conv1x1Stack
    endmembers: EndmemberLayer
    psf: PsfLayer
    srf: SrfLayer

    def as_dict(self) -> "OrderedDict[str, NDArrayF]":
        """Named views of every trainable array, in a fixed order."""
        out: "OrderedDict[str, NDArrayF]" = OrderedDict()
        for prefix, stack in ((ParamGroupConst.ENC_LR.value, self.enc_lr), (ParamGroupConst.ENC_HR.value, self.enc_hr)):
            for i, (w, b) in enumerate(zip(stack.weights, stack.biases)):
                out[f"{prefix}.W{i}"] = w
                out[f"{prefix}.b{i}"] = b
        out[ParamGroupConst.ENDMEMBERS.value] = self.endmembers.E
        out[ParamGroupConst.PSF.value] = self.psf.kernel
        out[ParamGroupConst.SRF.value] = self.srf.weights
        return out

    def load_dict(self, values: Dict[str, NDArrayF]) -> None:
        """Replace arrays by name; shapes must match."""
        current = self.as_dict()
        for name, value in values.items():
            if name not in current:
                raise ShapeError(f"Unknown parameter {name}")
            value = np.asarray(value, dtype=np.float64)
            if value.shape != current[name].shape:
                raise ShapeError(f"Parameter {name}: expected shape {current[name].shape}, got {value.shape}")
        for name, value in values.items():
            self._assign(name, np.array(value, dtype=np.float64))

    def _assign(self, name: str, value: NDArrayF) -> None:
        if name == ParamGroupConst.ENDMEMBERS.value:
            self.endmembers.E = value
        elif name == ParamGroupConst.PSF.value:
            self.psf.kernel = value
        elif name == ParamGroupConst.SRF.value:
            self.srf.weights = value * self.srf.mask
        else:
            prefix, slot = name.split(".", 1)
            stack = self.enc_lr if prefix == ParamGroupConst.ENC_LR.value else self.enc_hr
            target = stack.weights if slot.startswith("W") else stack.biases
            target[int(slot[1:])] = value

    def masks(self) -> Dict[str, np.ndarray]:
        return {ParamGroupConst.SRF.value: self.srf.mask}

    def copy(self) -> "ModelParams":
        clone = ModelParams(
            enc_lr=Conv1x1Stack(
                list(self.enc_lr.layer_widths),
                [w.copy() for w in self.enc_lr.weights],
                [b.copy() for b in self.enc_lr.biases],
                self.enc_lr.slope,
                self.enc_lr.output_clamp,
            ),
            enc_hr=Conv1x1Stack(
                list(self.enc_hr.layer_widths),
                [w.copy() for w in self.enc_hr.weights],
                [b.copy() for b in self.enc_hr.biases],
                self.enc_hr.slope,
                self.enc_hr.output_clamp,
            ),
            endmembers=EndmemberLayer(self.endmembers.E.copy()),
            psf=PsfLayer(self.psf.kernel.copy()),
            srf=SrfLayer(self.srf.coverage, self.srf.weights.copy(), self.srf.eps_norm),
        )
        return clone


@dataclass
class ForwardBundle:
    """Every tensor produced by one pass through the three coupled autoencoders."""
    A_h_a: NDArrayF
    Z_tilde_a: NDArrayF
    A: NDArrayF
    X_tilde: NDArrayF
    Y_tilde: NDArrayF
    A_h_b: NDArrayF
    Z_tilde_b: NDArrayF
    Y_lr_a: NDArrayF
    Y_lr_b: NDArrayF

    def abundances(self) -> Dict[str, NDArrayF]:
        return {"A": self.A, "A_h_a": self.A_h_a, "A_h_b": self.A_h_b}
