"""Reference strategies: plain averaged SGD and fixed-sparsity hard masks.

The hard-mask baseline keeps a constant number of zeroed parameters per
task and periodically swaps the worst-scoring active parameters against
the best-scoring masked ones, scored by gradient agreement plus weighted
importance. It is the score-and-swap analog of binary-mask approaches
with uniform sparsity.
"""

from dataclasses import dataclass

import numpy as np

from .vecmath import as_vector, elementwise_mul


def agreement_score(grad: np.ndarray, grad_mean: np.ndarray) -> np.ndarray:
    """Elementwise gradient alignment with the task average."""
    return elementwise_mul(grad, grad_mean)


@dataclass
class HardMaskState:
    """One task's binary mask under the fixed-sparsity contract."""

    mask: np.ndarray  # entries in {0.0, 1.0}
    swap_count: int  # parameters removed and recovered per update

    def __post_init__(self):
        self.mask = as_vector(self.mask)
        if not np.isin(self.mask, (0.0, 1.0)).all():
            raise ValueError("hard mask entries must be 0 or 1")
        if self.swap_count < 0:
            raise ValueError("swap_count must be >= 0")

    @property
    def zero_count(self) -> int:
        return int(np.sum(self.mask == 0.0))


def hard_mask_update(state: HardMaskState, agreement: np.ndarray,
                     fisher_raw: np.ndarray, lam: float) -> HardMaskState:
    """Swap the k lowest-scoring active parameters with the k
    highest-scoring masked ones.

    Scores are agreement + lam * importance. k is clamped to the number
    of available candidates on the smaller side, and the same clamped k
    is used for both removal and recovery, so the zero count never
    changes. Ties resolve toward the lowest parameter index.
    """
    scores = as_vector(agreement) + lam * as_vector(fisher_raw)
    if scores.shape[0] != state.mask.shape[0]:
        raise ValueError("score length does not match mask length")
    active = np.flatnonzero(state.mask == 1.0)
    masked = np.flatnonzero(state.mask == 0.0)
    k = min(state.swap_count, active.size, masked.size)
    if k == 0:
        return HardMaskState(state.mask.copy(), state.swap_count)
    # stable argsort keeps the lowest index first among equal scores
    drop = active[np.argsort(scores[active], kind="stable")[:k]]
    restore = masked[np.argsort(-scores[masked], kind="stable")[:k]]
    mask = state.mask.copy()
    mask[drop] = 0.0
    mask[restore] = 1.0
    return HardMaskState(mask, state.swap_count)


def nomask_step(theta: np.ndarray, grads, lr: float) -> np.ndarray:
    """Plain multi-task SGD: theta - lr * mean of the task gradients."""
    theta = as_vector(theta)
    grads = list(grads)
    if not grads:
        raise ValueError("nomask_step needs at least one task gradient")
    if lr <= 0:
        raise ValueError("learning rate must be > 0")
    acc = as_vector(grads[0])
    for g in grads[1:]:
        acc = acc + as_vector(g)
    return theta - lr * (acc / len(grads))
