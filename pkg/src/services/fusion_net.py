"""Forward pass of the three coupled autoencoders (LrHSI, HrMSI and LrMSI paths)."""

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from src.models.cube import ImageCube, NDArrayF, SpectralCoverage
from src.models.network import (
    Conv1x1Stack,
    EndmemberLayer,
    ForwardBundle,
    ModelParams,
    PsfLayer,
    SrfLayer,
)
from src.services import ops
from src.services.grad_engine import GradTape, Node
from src.utils.constants import ConstraintConst, NumericConst, ParamGroupConst, TrainDefaultsConst
from src.utils.errors import ShapeError

logger = logging.getLogger(__name__)


@dataclass
class ForwardGraph:
    """Tape nodes of one forward pass, kept so losses can be attached to them."""
    tape: GradTape
    A_h_a: Node
    Z_tilde_a: Node
    A: Node
    X_tilde: Node
    Y_tilde: Node
    A_h_b: Node
    Z_tilde_b: Node
    Y_lr_a: Node
    Y_lr_b: Node

    def bundle(self) -> ForwardBundle:
        return ForwardBundle(
            A_h_a=self.A_h_a.value,
            Z_tilde_a=self.Z_tilde_a.value,
            A=self.A.value,
            X_tilde=self.X_tilde.value,
            Y_tilde=self.Y_tilde.value,
            A_h_b=self.A_h_b.value,
            Z_tilde_b=self.Z_tilde_b.value,
            Y_lr_a=self.Y_lr_a.value,
            Y_lr_b=self.Y_lr_b.value,
        )


def gsd_ratio(lr_shape: Sequence[int], hr_shape: Sequence[int]) -> int:
    """Integer spatial ratio between a low- and a high-resolution image."""
    rows_lr, cols_lr = lr_shape[0], lr_shape[1]
    rows_hr, cols_hr = hr_shape[0], hr_shape[1]
    if rows_hr % rows_lr or cols_hr % cols_lr:
        raise ShapeError(
            f"Non-integer GSD ratio between {rows_lr}x{cols_lr} and {rows_hr}x{cols_hr}"
        )
    ratio_r, ratio_c = rows_hr // rows_lr, cols_hr // cols_lr
    if ratio_r != ratio_c:
        raise ShapeError(f"Anisotropic GSD ratio {ratio_r} x {ratio_c} is not supported")
    return ratio_r


# ---------------------------------------------------------------------------
# Tape-level building blocks
# ---------------------------------------------------------------------------


def _stack_nodes(tape: GradTape, prefix: str, stack: Conv1x1Stack, x: Node, constraint: ConstraintConst) -> Node:
    if x.shape[-1] != stack.in_width:
        raise ShapeError(f"{prefix}: input has {x.shape[-1]} bands, encoder expects {stack.in_width}")
    last = len(stack.weights) - 1
    for i, (w, b) in enumerate(zip(stack.weights, stack.biases)):
        x = ops.dense(tape, x, tape.param(f"{prefix}.W{i}", w), tape.param(f"{prefix}.b{i}", b))
        if i < last:
            x = ops.leaky(tape, x, stack.slope)
    if constraint == ConstraintConst.SOFTMAX:
        return ops.softmax(tape, x)
    if stack.output_clamp:
        return ops.clamp(tape, x)
    return x


def _decode_nodes(tape: GradTape, a: Node, E: Node) -> Node:
    if a.shape[-1] != E.shape[0]:
        raise ShapeError(f"Abundances have {a.shape[-1]} channels, decoder holds {E.shape[0]} endmembers")
    return ops.clamp(tape, ops.dense(tape, a, E))


def _srf_nodes(tape: GradTape, x: Node, srf: SrfLayer, w: Node) -> Node:
    if x.shape[-1] != srf.coverage.n_hsi:
        raise ShapeError(f"SRF expects {srf.coverage.n_hsi} HSI bands, got {x.shape[-1]}")
    return ops.srf(tape, x, w, srf.mask, srf.eps_norm)


def _annotate(path: str, error: ShapeError) -> ShapeError:
    return ShapeError(f"{path}: {error.message}")


def forward_graph(
    tape: GradTape,
    Z: NDArrayF,
    Y: NDArrayF,
    params: ModelParams,
    constraint: ConstraintConst = ConstraintConst.CLAMP,
) -> ForwardGraph:
    """Run every path once, recording on ``tape``.

    E, the PSF kernel and the SRF weights each enter the tape as a single
    node, so both decoders share one endmember storage.
    """
    z = tape.constant(Z)
    y = tape.constant(Y)
    E = tape.param(ParamGroupConst.ENDMEMBERS.value, params.endmembers.E)
    K = tape.param(ParamGroupConst.PSF.value, params.psf.kernel)
    W = tape.param(ParamGroupConst.SRF.value, params.srf.weights)

    try:
        A_h_a = _stack_nodes(tape, ParamGroupConst.ENC_LR.value, params.enc_lr, z, constraint)
        Z_tilde_a = _decode_nodes(tape, A_h_a, E)
    except ShapeError as e:
        raise _annotate("LrHSI autoencoder", e)
    try:
        A = _stack_nodes(tape, ParamGroupConst.ENC_HR.value, params.enc_hr, y, constraint)
        X_tilde = _decode_nodes(tape, A, E)
        Y_tilde = _srf_nodes(tape, X_tilde, params.srf, W)
    except ShapeError as e:
        raise _annotate("HrMSI autoencoder", e)
    try:
        A_h_b = ops.block_conv(tape, A, K)
        Z_tilde_b = _decode_nodes(tape, A_h_b, E)
    except ShapeError as e:
        raise _annotate("PSF bridge", e)
    try:
        Y_lr_a = ops.block_conv(tape, y, K)
        Y_lr_b = _srf_nodes(tape, z, params.srf, W)
    except ShapeError as e:
        raise _annotate("LrMSI autoencoder", e)

    return ForwardGraph(
        tape=tape,
        A_h_a=A_h_a,
        Z_tilde_a=Z_tilde_a,
        A=A,
        X_tilde=X_tilde,
        Y_tilde=Y_tilde,
        A_h_b=A_h_b,
        Z_tilde_b=Z_tilde_b,
        Y_lr_a=Y_lr_a,
        Y_lr_b=Y_lr_b,
    )


# ---------------------------------------------------------------------------
# Value-level operations
# ---------------------------------------------------------------------------


def _data(x) -> NDArrayF:
    return x.data if isinstance(x, ImageCube) else np.asarray(x, dtype=np.float64)


def run_stack(x, enc: Conv1x1Stack, constraint: ConstraintConst = ConstraintConst.CLAMP) -> NDArrayF:
    tape = GradTape()
    return _stack_nodes(tape, "encoder", enc, tape.constant(_data(x)), constraint).value


def encode_lr(Z, enc: Conv1x1Stack, constraint: ConstraintConst = ConstraintConst.CLAMP) -> NDArrayF:
    """LrHSI encoder: m x n x L cube to m x n x p abundances."""
    return run_stack(Z, enc, constraint)


def encode_hr(Y, enc: Conv1x1Stack, constraint: ConstraintConst = ConstraintConst.CLAMP) -> NDArrayF:
    """HrMSI encoder: M x N x l image to M x N x p abundances."""
    return run_stack(Y, enc, constraint)


def decode_shared(A, E: EndmemberLayer) -> NDArrayF:
    tape = GradTape()
    return _decode_nodes(tape, tape.constant(_data(A)), tape.constant(E.E)).value


def psf_forward(cube_in, psf: PsfLayer) -> NDArrayF:
    tape = GradTape()
    return ops.block_conv(tape, tape.constant(_data(cube_in)), tape.constant(psf.kernel)).value


def srf_forward(X_tilde, srf: SrfLayer) -> NDArrayF:
    tape = GradTape()
    return _srf_nodes(tape, tape.constant(_data(X_tilde)), srf, tape.constant(srf.weights)).value


def forward_all(
    Z,
    Y,
    params: ModelParams,
    constraint: ConstraintConst = ConstraintConst.CLAMP,
) -> ForwardBundle:
    Z, Y = _data(Z), _data(Y)
    ratio = gsd_ratio(Z.shape, Y.shape)
    if ratio != params.psf.k:
        raise ShapeError(f"GSD ratio {ratio} does not match the PSF kernel size {params.psf.k}")
    return forward_graph(GradTape(), Z, Y, params, constraint).bundle()


# ---------------------------------------------------------------------------
# Initialisation
# ---------------------------------------------------------------------------


def init_params(
    Z: NDArrayF,
    Y: NDArrayF,
    coverage: SpectralCoverage,
    p: int,
    rng: np.random.Generator,
    hidden_widths: Sequence[int] = TrainDefaultsConst.HIDDEN_WIDTHS,
    slope: float = TrainDefaultsConst.LEAKY_SLOPE,
    eps_norm: float = NumericConst.EPS_NORM,
) -> ModelParams:
    """Encoders uniform in +/- sqrt(1/fan_in), E from p random LrHSI pixels,
    PSF uniform 1/k^2, SRF weights 1 inside the coverage.

    Both encoders start with every abundance near 1/p: the output layer has
    bias 1/p and weights scaled by 1/p, so no channel begins below the clamp.
    """
    Z, Y = _data(Z), _data(Y)
    k = gsd_ratio(Z.shape, Y.shape)
    L, l = Z.shape[-1], Y.shape[-1]
    if coverage.n_hsi != L or coverage.n_msi != l:
        raise ShapeError(
            f"Coverage maps {coverage.n_hsi} -> {coverage.n_msi} bands, inputs have {L} -> {l}"
        )
    if p < 1:
        raise ShapeError(f"Endmember count must be >= 1, got {p}")

    enc_lr = Conv1x1Stack.initialise([L, *hidden_widths, p], rng, slope, output_bias=1.0 / p, output_scale=1.0 / p)
    enc_hr = Conv1x1Stack.initialise([l, *hidden_widths, p], rng, slope, output_bias=1.0 / p, output_scale=1.0 / p)
    pixels = Z.reshape(-1, L)
    picks = rng.choice(pixels.shape[0], size=p, replace=p > pixels.shape[0])
    E = np.clip(pixels[picks].copy(), 0.0, 1.0)
    kernel = np.full((k, k), 1.0 / (k * k))
    srf = SrfLayer(coverage, np.ones((L, l)), eps_norm)
    logger.debug("Initialised parameters: p=%d, k=%d, encoder widths %s / %s", p, k, enc_lr.layer_widths, enc_hr.layer_widths)
    return ModelParams(enc_lr=enc_lr, enc_hr=enc_hr, endmembers=EndmemberLayer(E), psf=PsfLayer(kernel), srf=srf)


def learned_psf_normalised(params: ModelParams) -> NDArrayF:
    total = params.psf.kernel.sum()
    if total <= 0:
        return np.zeros_like(params.psf.kernel)
    return params.psf.kernel / total


def degenerate_srf_bands(params: ModelParams) -> Sequence[int]:
    return [int(i) for i in np.flatnonzero(params.srf.weights.sum(axis=0) <= 0)]
