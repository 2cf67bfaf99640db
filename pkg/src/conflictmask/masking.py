"""Importance-aware soft masks and the masked parameter update.

Each task owns a soft mask in [0, 1]^d. A value of exactly 1 marks the
parameter as harmonious for that task; any value below 1 marks it as
(softly) suppressed. The forward pass uses the derived binary mask
(1 only where soft == 1), while the parameter update discounts each
task's gradient by its soft mask before averaging, so suppressed
parameters still receive limited, importance-scaled updates.

Parameter importance is the squared mask-discounted gradient, min-max
normalized per task.
"""

import csv
from dataclasses import dataclass

import numpy as np

from .vecmath import as_vector, elementwise_mul


@dataclass
class TaskMask:
    """Per-task soft mask plus its derived binary forward mask."""

    soft: np.ndarray

    def __post_init__(self):
        self.soft = as_vector(self.soft)
        # NaN fails both range comparisons, so check finiteness explicitly
        if not np.isfinite(self.soft).all() or ((self.soft < 0.0) | (self.soft > 1.0)).any():
            raise ValueError("soft mask entries must lie in [0, 1]")

    @property
    def dim(self) -> int:
        return self.soft.shape[0]

    @property
    def binary(self) -> np.ndarray:
        # Exact equality on purpose: harmonious entries are assigned the
        # literal constant 1.0, so the comparison is well defined.
        return (self.soft == 1.0).astype(np.float64)

    @property
    def sparsity(self) -> float:
        """Fraction of parameters with mask value below 1."""
        return float(np.mean(self.soft < 1.0))

    def copy(self) -> "TaskMask":
        return TaskMask(self.soft.copy())


def all_ones_mask(dim: int) -> TaskMask:
    return TaskMask(np.ones(dim))


@dataclass
class FisherInfo:
    """Raw and min-max normalized per-parameter importance for one task."""

    raw: np.ndarray
    normalized: np.ndarray


def fisher_information(grad: np.ndarray, mask: TaskMask) -> FisherInfo:
    """Importance estimate: squared soft-masked gradient, then min-max.

    When all raw values coincide (max == min) the normalization is
    undefined; every coordinate is assigned 0.5 as a symmetric tie-break
    so downstream soft-mask assignment neither fully suppresses nor fully
    retains uninformative parameters.
    """
    raw = elementwise_mul(grad, mask.soft) ** 2
    lo = float(raw.min())
    hi = float(raw.max())
    if hi > lo:
        normalized = (raw - lo) / (hi - lo)
    else:
        normalized = np.full_like(raw, 0.5)
    return FisherInfo(raw=raw, normalized=normalized)


def soft_mask_values(fisher: FisherInfo, conflict_idx) -> TaskMask:
    """Build a full soft mask: 1 where harmonious, normalized importance
    on the conflicting coordinates."""
    conflict_idx = np.asarray(conflict_idx, dtype=np.intp)
    soft = np.ones_like(fisher.normalized)
    if conflict_idx.size:
        soft[conflict_idx] = fisher.normalized[conflict_idx]
    return TaskMask(soft)


def masked_forward(theta: np.ndarray, mask: TaskMask) -> np.ndarray:
    """Parameter point seen by the task: theta with non-harmonious
    coordinates zeroed."""
    return elementwise_mul(theta, mask.binary)


def masked_sgd_step(theta: np.ndarray, grads, masks, lr: float) -> np.ndarray:
    """One shared-parameter step: theta - lr * mean_i(grad_i * soft_i).

    Each task's gradient (evaluated at that task's binary-masked point)
    is discounted by its own soft mask, then the discounted gradients are
    averaged over tasks. Accumulation runs in task order so reruns are
    bit-identical.
    """
    theta = as_vector(theta)
    grads = list(grads)
    masks = list(masks)
    if not grads:
        raise ValueError("masked_sgd_step needs at least one task gradient")
    if len(grads) != len(masks):
        raise ValueError("grads and masks must pair up one per task")
    if lr <= 0:
        raise ValueError("learning rate must be > 0")
    acc = elementwise_mul(grads[0], masks[0].soft)
    for g, m in zip(grads[1:], masks[1:]):
        acc = acc + elementwise_mul(g, m.soft)
    update = acc / len(grads)
    return theta - lr * update


def write_mask_csv(mask: TaskMask, path) -> None:
    """Dump one task's soft mask as (param_index, soft_value) rows."""
    with open(path, "w", newline="\n") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["param_index", "soft_value"])
        for j, v in enumerate(mask.soft):
            writer.writerow([j, format(float(v), ".17g")])
