"""Tape-based reverse mode over the closed op vocabulary of the fusion network,
plus a central finite-difference checker.
"""

import hashlib
import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from src.models.cube import NDArrayF

logger = logging.getLogger(__name__)

Adjoint = Callable[[NDArrayF], Sequence[Optional[NDArrayF]]]


class Node:
    """A value produced during one forward evaluation."""
    __slots__ = ("value", "grad", "name", "requires_grad")

    def __init__(self, value, name: Optional[str] = None, requires_grad: bool = False):
        self.value = value
        self.grad = None
        self.name = name
        self.requires_grad = requires_grad

    @property
    def shape(self) -> tuple:
        return np.shape(self.value)

    def __repr__(self) -> str:
        return f"Node(name={self.name!r}, shape={self.shape}, requires_grad={self.requires_grad})"


@dataclass
class _Record:
    op: str
    out: Node
    parents: Tuple[Node, ...]
    adjoint: Adjoint


class GradTape:
    """Records primitive ops in execution order together with their adjoints.

    Ops whose parents are all constants are not recorded. ``region`` arrays
    passed by non-smooth ops (clamp, leaky, abs, clip) form the kink
    signature used by the finite-difference checker.
    """

    def __init__(self):
        self.records: List[_Record] = []
        self.params: Dict[str, Node] = {}
        self._regions: List[np.ndarray] = []

    def param(self, name: str, value: NDArrayF) -> Node:
        if name in self.params:
            return self.params[name]
        node = Node(value, name=name, requires_grad=True)
        self.params[name] = node
        return node

    @staticmethod
    def constant(value) -> Node:
        return Node(np.asarray(value, dtype=np.float64))

    def record(
        self,
        op: str,
        value,
        parents: Sequence[Node],
        adjoint: Adjoint,
        region: Optional[np.ndarray] = None,
    ) -> Node:
        if region is not None:
            self._regions.append(np.asarray(region, dtype=np.int8))
        requires_grad = any(p.requires_grad for p in parents)
        out = Node(value, requires_grad=requires_grad)
        if requires_grad:
            self.records.append(_Record(op, out, tuple(parents), adjoint))
        return out

    def kink_signature(self) -> str:
        digest = hashlib.sha1()
        for region in self._regions:
            digest.update(str(region.shape).encode())
            digest.update(region.tobytes())
        return digest.hexdigest()

    def __len__(self) -> int:
        return len(self.records)


def backward(
    loss: Node,
    tape: GradTape,
    expected: Optional[Mapping[str, NDArrayF]] = None,
) -> Dict[str, NDArrayF]:
    """Exact adjoints of a scalar ``loss`` for every parameter on the tape.

    Records are replayed once each, newest first. Parameters in ``expected``
    that never made it onto the tape get a zero gradient and a warning.
    Parameter values are never modified.
    """
    grads: Dict[str, NDArrayF] = {}
    if loss.requires_grad:
        loss.grad = np.ones_like(np.asarray(loss.value, dtype=np.float64))
        for rec in reversed(tape.records):
            g_out = rec.out.grad
            if g_out is None:
                continue
            parent_grads = rec.adjoint(g_out)
            for parent, g in zip(rec.parents, parent_grads):
                if g is None or not parent.requires_grad:
                    continue
                parent.grad = g if parent.grad is None else parent.grad + g

    for name, node in tape.params.items():
        grads[name] = (
            np.zeros_like(node.value, dtype=np.float64) if node.grad is None else node.grad
        )

    if expected is not None:
        for name, value in expected.items():
            if name not in grads:
                logger.warning("Parameter %s is absent from the tape; using a zero gradient", name)
                grads[name] = np.zeros_like(np.asarray(value, dtype=np.float64))
    return grads


# ---------------------------------------------------------------------------
# Finite-difference checker
# ---------------------------------------------------------------------------


@dataclass
class LossEvaluation:
    value: float
    gradients: Optional[Dict[str, NDArrayF]] = None
    kink_signature: str = ""


@dataclass
class GroupCheck:
    group: str
    sampled: int = 0
    kink_skipped: int = 0
    max_rel_error: float = 0.0
    passed: bool = False
    worst_coordinate: Optional[str] = None


@dataclass
class FdCheckReport:
    tolerance: float
    step: float
    groups: List[GroupCheck] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return bool(self.groups) and all(g.passed for g in self.groups)

    def rows(self) -> List[dict]:
        return [
            {
                "group": g.group,
                "sampled": g.sampled,
                "kink_skipped": g.kink_skipped,
                "max_rel_error": g.max_rel_error,
                "passed": g.passed,
            }
            for g in self.groups
        ]


def param_group(name: str) -> str:
    return name.split(".", 1)[0]


def fd_check(
    params: Mapping[str, NDArrayF],
    loss_fn: Callable[[Mapping[str, NDArrayF], bool], LossEvaluation],
    h: float = 1e-5,
    tolerance: float = 1e-4,
    samples_per_group: int = 64,
    seed: int = 0,
    rel_floor: float = 1e-5,
    masks: Optional[Mapping[str, np.ndarray]] = None,
) -> FdCheckReport:
    """Compare analytic gradients with central differences on sampled coordinates.

    ``loss_fn(params, want_grad)`` must evaluate the loss in float64. A
    coordinate whose +/-h perturbations change the kink signature is not
    differentiable there and is counted as kink-skipped. ``masks`` restricts
    sampling to trainable entries (for example the SRF coverage).
    """
    rng = np.random.default_rng(seed)
    base = {name: np.array(value, dtype=np.float64) for name, value in params.items()}
    reference = loss_fn(base, True)
    analytic = reference.gradients or {}

    groups: Dict[str, List[Tuple[str, int]]] = {}
    for name, value in base.items():
        flat = np.arange(value.size)
        if masks is not None and name in masks:
            flat = np.flatnonzero(np.asarray(masks[name]).reshape(-1))
        groups.setdefault(param_group(name), []).extend((name, int(i)) for i in flat)

    report = FdCheckReport(tolerance=tolerance, step=h)
    for group, coords in groups.items():
        check = GroupCheck(group=group)
        take = min(samples_per_group, len(coords))
        chosen = rng.choice(len(coords), size=take, replace=False) if take else []
        for pick in chosen:
            name, index = coords[int(pick)]
            original = base[name].reshape(-1)[index]

            base[name].reshape(-1)[index] = original + h
            plus = loss_fn(base, False)
            base[name].reshape(-1)[index] = original - h
            minus = loss_fn(base, False)
            base[name].reshape(-1)[index] = original

            if plus.kink_signature != reference.kink_signature or minus.kink_signature != reference.kink_signature:
                check.kink_skipped += 1
                continue

            numeric = (plus.value - minus.value) / (2.0 * h)
            exact = float(analytic.get(name, np.zeros_like(base[name])).reshape(-1)[index])
            rel = abs(exact - numeric) / max(abs(exact), abs(numeric), rel_floor)
            check.sampled += 1
            if rel > check.max_rel_error:
                check.max_rel_error = rel
                check.worst_coordinate = f"{name}[{index}]"
        check.passed = check.sampled > 0 and check.max_rel_error <= tolerance
        if not check.passed:
            logger.warning(
                "Gradient check failed for group %s: max rel error %.3e (worst %s, %d kink-skipped)",
                group, check.max_rel_error, check.worst_coordinate, check.kink_skipped,
            )
        report.groups.append(check)
    return report
