"""Reconstruction, sum-to-one and sparsity losses and their weighted joint objective."""

from typing import Dict, Set, Tuple

import numpy as np

from src.models.cube import NDArrayF
from src.models.network import ForwardBundle
from src.schemas.train_config import LossWeights
from src.services import ops
from src.services.fusion_net import ForwardGraph
from src.services.grad_engine import GradTape, Node
from src.utils.constants import AblationConst, LossTermConst, NumericConst, ReductionConst
from src.utils.errors import ShapeError


def _check_same(name: str, a: NDArrayF, b: NDArrayF) -> None:
    if np.shape(a) != np.shape(b):
        raise ShapeError(f"{name}: shape {np.shape(a)} does not match {np.shape(b)}")


def _l1_residual(tape: GradTape, a: Node, b: Node, reduction: ReductionConst) -> Node:
    return ops.l1(tape, ops.sub(tape, a, b), reduction)


def term_coefficients(w: LossWeights, ablation: Set[AblationConst] = frozenset()) -> Dict[str, float]:
    """Weight of every loss term after ablation; a dropped branch gets weight 0."""
    return {
        LossTermConst.ZA.value: 0.0 if AblationConst.DROP_ZA in ablation else 1.0,
        LossTermConst.ZB.value: 0.0 if AblationConst.DROP_ZB in ablation else w.alpha,
        LossTermConst.Y.value: 0.0 if AblationConst.DROP_Y in ablation else w.beta,
        LossTermConst.YLR.value: 0.0 if AblationConst.DROP_YLR in ablation else w.gamma,
        LossTermConst.SUM2ONE.value: w.mu,
        LossTermConst.SPARSE.value: w.nu,
    }


def bridge_active(w: LossWeights, ablation: Set[AblationConst] = frozenset()) -> bool:
    return term_coefficients(w, ablation)[LossTermConst.ZB.value] != 0.0


def joint_loss_nodes(
    graph: ForwardGraph,
    Z: NDArrayF,
    Y: NDArrayF,
    w: LossWeights,
    ablation: Set[AblationConst] = frozenset(),
    reduction: ReductionConst = ReductionConst.MEAN,
    eps_kl: float = NumericConst.EPS_KL,
) -> Tuple[Node, Dict[str, float]]:
    """Attach the joint objective to ``graph``'s tape.

    Returns the total node and the unweighted value of every term. Whenever
    the Z_b coefficient is 0 (alpha = 0 or ``drop_Zb``) A_h_b also leaves the
    sum-to-one penalty, so the PSF bridge path receives no gradient.
    """
    tape = graph.tape
    z, y = tape.constant(Z), tape.constant(Y)
    _check_same("Z vs Z_tilde_a", Z, graph.Z_tilde_a.value)
    _check_same("Y vs Y_tilde", Y, graph.Y_tilde.value)
    _check_same("Y_lr_a vs Y_lr_b", graph.Y_lr_a.value, graph.Y_lr_b.value)
    coefs = term_coefficients(w, ablation)

    l_za = _l1_residual(tape, z, graph.Z_tilde_a, reduction)
    l_zb = _l1_residual(tape, z, graph.Z_tilde_b, reduction)
    l_y = _l1_residual(tape, y, graph.Y_tilde, reduction)
    l_ylr = _l1_residual(tape, graph.Y_lr_a, graph.Y_lr_b, reduction)

    s2o_cubes = [graph.A, graph.A_h_a]
    if bridge_active(w, ablation):
        s2o_cubes.append(graph.A_h_b)
    s2o_parts = [ops.sum2one(tape, cube, reduction) for cube in s2o_cubes]
    l_s2o = ops.weighted_sum(tape, [(1.0, part) for part in s2o_parts])

    sparse_parts = [ops.kl_sparse(tape, cube, w.a_sparse, eps_kl, reduction) for cube in (graph.A, graph.A_h_a)]
    l_sparse = ops.weighted_sum(tape, [(1.0, part) for part in sparse_parts])

    nodes = {
        LossTermConst.ZA.value: l_za,
        LossTermConst.ZB.value: l_zb,
        LossTermConst.Y.value: l_y,
        LossTermConst.YLR.value: l_ylr,
        LossTermConst.SUM2ONE.value: l_s2o,
        LossTermConst.SPARSE.value: l_sparse,
    }
    total = ops.weighted_sum(tape, [(coefs[name], node) for name, node in nodes.items() if coefs[name] != 0.0])

    breakdown = {name: float(node.value) for name, node in nodes.items()}
    breakdown[LossTermConst.TOTAL.value] = float(total.value)
    return total, breakdown


# ---------------------------------------------------------------------------
# Value-level API
# ---------------------------------------------------------------------------


def l_base(
    bundle: ForwardBundle,
    Z: NDArrayF,
    Y: NDArrayF,
    w: LossWeights,
    reduction: ReductionConst = ReductionConst.MEAN,
) -> float:
    tape = GradTape()
    c = tape.constant
    _check_same("Z vs Z_tilde_a", Z, bundle.Z_tilde_a)
    _check_same("Z vs Z_tilde_b", Z, bundle.Z_tilde_b)
    _check_same("Y vs Y_tilde", Y, bundle.Y_tilde)
    _check_same("Y_lr_a vs Y_lr_b", bundle.Y_lr_a, bundle.Y_lr_b)
    terms = [
        (1.0, _l1_residual(tape, c(Z), c(bundle.Z_tilde_a), reduction)),
        (w.alpha, _l1_residual(tape, c(Z), c(bundle.Z_tilde_b), reduction)),
        (w.beta, _l1_residual(tape, c(Y), c(bundle.Y_tilde), reduction)),
        (w.gamma, _l1_residual(tape, c(bundle.Y_lr_a), c(bundle.Y_lr_b), reduction)),
    ]
    return float(ops.weighted_sum(tape, terms).value)


def l_sum2one(
    A: NDArrayF,
    A_h_a: NDArrayF,
    A_h_b: NDArrayF,
    reduction: ReductionConst = ReductionConst.MEAN,
) -> float:
    tape = GradTape()
    return float(sum(ops.sum2one(tape, tape.constant(cube), reduction).value for cube in (A, A_h_a, A_h_b)))


def l_sparse(
    A: NDArrayF,
    A_h_a: NDArrayF,
    a: float,
    reduction: ReductionConst = ReductionConst.MEAN,
    eps_kl: float = NumericConst.EPS_KL,
) -> float:
    if not 0.0 < a < 1.0:
        raise ValueError(f"Sparsity target must lie in (0, 1), got {a}")
    tape = GradTape()
    return float(sum(ops.kl_sparse(tape, tape.constant(cube), a, eps_kl, reduction).value for cube in (A, A_h_a)))


def l_joint(
    bundle: ForwardBundle,
    Z: NDArrayF,
    Y: NDArrayF,
    w: LossWeights,
    reduction: ReductionConst = ReductionConst.MEAN,
) -> Tuple[float, Dict[str, float]]:
    """L = l_base + mu * l_sum2one + nu * l_sparse, with the per-term breakdown."""
    tape = GradTape()
    c = tape.constant
    breakdown = {
        LossTermConst.ZA.value: float(_l1_residual(tape, c(Z), c(bundle.Z_tilde_a), reduction).value),
        LossTermConst.ZB.value: float(_l1_residual(tape, c(Z), c(bundle.Z_tilde_b), reduction).value),
        LossTermConst.Y.value: float(_l1_residual(tape, c(Y), c(bundle.Y_tilde), reduction).value),
        LossTermConst.YLR.value: float(_l1_residual(tape, c(bundle.Y_lr_a), c(bundle.Y_lr_b), reduction).value),
        LossTermConst.SUM2ONE.value: l_sum2one(bundle.A, bundle.A_h_a, bundle.A_h_b, reduction),
        LossTermConst.SPARSE.value: l_sparse(bundle.A, bundle.A_h_a, w.a_sparse, reduction),
    }
    total = l_base(bundle, Z, Y, w, reduction) + w.mu * breakdown[LossTermConst.SUM2ONE.value] + w.nu * breakdown[LossTermConst.SPARSE.value]
    breakdown[LossTermConst.TOTAL.value] = total
    return total, breakdown
