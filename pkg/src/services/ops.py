"""Primitive ops of the fusion graph, each recorded on a ``GradTape`` with its adjoint.

Image-shaped values are (rows, cols, channels) float64 arrays; losses are 0-d arrays.
"""

from typing import Optional, Sequence, Tuple

import numpy as np

from src.services.degradation import block_conv as _block_conv, to_blocks
from src.services.grad_engine import GradTape, Node
from src.utils.constants import ReductionConst


def _flat(x: np.ndarray) -> np.ndarray:
    return x.reshape(-1, x.shape[-1])


def dense(tape: GradTape, x: Node, w: Node, b: Optional[Node] = None) -> Node:
    """Per-pixel affine map (a 1x1 convolution)."""
    xv, wv = x.value, w.value
    out = xv @ wv
    if b is not None:
        out = out + b.value

    def adjoint(g):
        gx = g @ wv.T if x.requires_grad else None
        gw = _flat(xv).T @ _flat(g)
        gb = _flat(g).sum(axis=0) if b is not None else None
        return (gx, gw, gb)

    parents = (x, w) if b is None else (x, w, b)
    return tape.record("dense", out, parents, adjoint)


def leaky(tape: GradTape, x: Node, slope: float) -> Node:
    positive = x.value > 0
    out = np.where(positive, x.value, slope * x.value)
    local = np.where(positive, 1.0, slope)
    return tape.record("leaky", out, (x,), lambda g: (g * local,), region=positive)


def clamp(tape: GradTape, x: Node) -> Node:
    """clamp01 with pass-through gradient on (0, 1) and zero elsewhere."""
    xv = x.value
    out = np.clip(xv, 0.0, 1.0)
    inside = (xv > 0.0) & (xv < 1.0)
    region = np.where(xv <= 0.0, 0, np.where(xv >= 1.0, 2, 1))
    return tape.record("clamp", out, (x,), lambda g: (g * inside,), region=region)


def softmax_values(logits: np.ndarray) -> np.ndarray:
    """Channelwise softmax over the last axis, shifted by the channel maximum."""
    logits = np.asarray(logits, dtype=np.float64)
    e = np.exp(logits - logits.max(axis=-1, keepdims=True))
    return e / e.sum(axis=-1, keepdims=True)


def softmax(tape: GradTape, x: Node) -> Node:
    s = softmax_values(x.value)

    def adjoint(g):
        return (s * (g - (g * s).sum(axis=-1, keepdims=True)),)

    return tape.record("softmax", s, (x,), adjoint)


def block_conv(tape: GradTape, x: Node, kernel: Node) -> Node:
    """Learnable stride-k k x k convolution shared by every channel."""
    kv = kernel.value
    k = kv.shape[0]
    out = _block_conv(x.value, kv)

    def adjoint(g):
        rows, cols, ch = x.value.shape
        gx = np.einsum("ijc,kl->ikjlc", g, kv).reshape(rows, cols, ch) if x.requires_grad else None
        gk = np.einsum("ikjlc,ijc->kl", to_blocks(x.value, k), g)
        return (gx, gk)

    return tape.record("block_conv", out, (x, kernel), adjoint)


def srf(tape: GradTape, x: Node, weights: Node, mask: np.ndarray, eps: float) -> Node:
    """Masked weighted band sum divided by the weight total plus ``eps``."""
    w_eff = weights.value * mask
    s = w_eff.sum(axis=0) + eps
    numer = x.value @ w_eff
    out = numer / s

    def adjoint(g):
        gx = (g / s) @ w_eff.T if x.requires_grad else None
        gf, nf, xf = _flat(g), _flat(numer), _flat(x.value)
        gw = (xf.T @ gf) / s - (gf * nf).sum(axis=0) / s ** 2
        return (gx, gw * mask)

    return tape.record("srf", out, (x, weights), adjoint)


def sub(tape: GradTape, a: Node, b: Node) -> Node:
    return tape.record("sub", a.value - b.value, (a, b), lambda g: (g, -g))


def _normaliser(count: int, reduction: ReductionConst) -> float:
    return float(count) if reduction == ReductionConst.MEAN else 1.0


def l1(tape: GradTape, r: Node, reduction: ReductionConst = ReductionConst.MEAN) -> Node:
    """Mean (or sum) of |r|; subgradient sign(r) with sign(0) = 0."""
    n = _normaliser(r.value.size, reduction)
    sign = np.sign(r.value)
    out = np.array(np.abs(r.value).sum() / n)
    return tape.record("l1", out, (r,), lambda g: (g * sign / n,), region=sign)


def sum2one(tape: GradTape, a: Node, reduction: ReductionConst = ReductionConst.MEAN) -> Node:
    """Per-pixel |1 - sum_i a_i| reduced over pixels."""
    residual = 1.0 - a.value.sum(axis=-1)
    n = _normaliser(residual.size, reduction)
    sign = np.sign(residual)
    out = np.array(np.abs(residual).sum() / n)

    def adjoint(g):
        return (np.broadcast_to((-g * sign / n)[..., None], a.value.shape).copy(),)

    return tape.record("sum2one", out, (a,), adjoint, region=sign)


def kl_sparse(
    tape: GradTape,
    a: Node,
    target: float,
    eps: float,
    reduction: ReductionConst = ReductionConst.MEAN,
) -> Node:
    """Bernoulli KL(target || a) summed over every entry, after clipping a into [eps, 1 - eps]."""
    av = a.value
    squashed = np.clip(av, eps, 1.0 - eps)
    inside = (av > eps) & (av < 1.0 - eps)
    n = _normaliser(av.size, reduction)
    terms = target * np.log(target / squashed) + (1.0 - target) * np.log((1.0 - target) / (1.0 - squashed))
    out = np.array(terms.sum() / n)
    local = (-target / squashed + (1.0 - target) / (1.0 - squashed)) * inside / n
    return tape.record("kl_sparse", out, (a,), lambda g: (g * local,), region=inside)


def weighted_sum(tape: GradTape, terms: Sequence[Tuple[float, Node]]) -> Node:
    """sum_i c_i * t_i over scalar nodes, in the given order."""
    total = np.array(0.0)
    for coef, node in terms:
        total = total + coef * node.value
    coefs = [c for c, _ in terms]
    return tape.record(
        "weighted_sum",
        total,
        tuple(node for _, node in terms),
        lambda g: tuple(c * g for c in coefs),
    )
