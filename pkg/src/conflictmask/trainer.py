"""Training loop: masked parameter steps with periodic mask updates.

One step evaluates every task's gradient at that task's binary-masked
point and applies a single shared-parameter update. Every
``mask_interval`` steps the masks themselves are revised first, either
by adaptive thresholding (strategy "soco"), by fixed-sparsity
score-and-swap (strategy "hard"), or never (strategy "none").

All randomness flows from the run seed, so identical configs reproduce
identical records bit for bit.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .adaptive import (
    AdaptiveMaskConfig,
    ScoreReport,
    apply_mask_update,
    beta_schedule,
    conflict_score,
    harmony_gate,
    harmony_score,
    select,
)
from .baselines import HardMaskState, agreement_score, hard_mask_update, nomask_step
from .masking import TaskMask, fisher_information, masked_sgd_step
from .vecmath import Rng
from .workloads import TaskSuite, conflict_flags, task_gradients

STRATEGIES = ("soco", "hard", "none")


class TrainingAborted(RuntimeError):
    """Raised when a non-finite loss or parameter shows up mid-run."""

    def __init__(self, step: int, task_id: int, coordinate: int, what: str):
        self.step = step
        self.task_id = task_id
        self.coordinate = coordinate
        super().__init__(
            f"non-finite {what} at step {step}, task {task_id}, coordinate {coordinate}"
        )


@dataclass
class TrainConfig:
    strategy: str = "soco"
    epochs: int = 300
    lr: float = 0.2
    mask_interval: int = 10
    init_sparsity: float = 0.2
    hard_sparsity: float = 0.2
    hard_swap_frac: float = 0.01
    seed: int = 0
    adaptive: AdaptiveMaskConfig = field(default_factory=AdaptiveMaskConfig)
    success_frac: float = 0.05
    top_fraction: float = 0.3
    keep_update_snapshots: bool = False

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise ValueError(f"strategy must be one of {STRATEGIES}, got {self.strategy!r}")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.lr <= 0:
            raise ValueError("lr must be > 0")
        if self.mask_interval < 1:
            raise ValueError("mask_interval must be >= 1")
        for name in ("init_sparsity", "hard_sparsity"):
            v = getattr(self, name)
            if not (0.0 <= v < 1.0):
                raise ValueError(f"{name} must lie in [0, 1)")
        if not (0.0 <= self.hard_swap_frac <= 1.0):
            raise ValueError("hard_swap_frac must lie in [0, 1]")
        if self.success_frac <= 0:
            raise ValueError("success_frac must be > 0")
        if not (0.0 < self.top_fraction <= 1.0):
            raise ValueError("top_fraction must lie in (0, 1]")


@dataclass
class MaskUpdateEvent:
    """Diagnostics captured for one (update step, task) pair."""

    step: int
    task_id: int
    beta: float | None
    conflict_threshold: float | None
    harmony_threshold: float | None
    n_conflict: int
    n_recover: int
    sparsity: float
    conflict_ratio: float
    wrongly_masked: int


@dataclass
class UpdateSnapshot:
    """Raw state around one mask update, kept only when requested."""

    step: int
    theta: np.ndarray
    soft_before: np.ndarray  # (n_tasks, dim)
    soft_after: np.ndarray


@dataclass
class RunRecord:
    strategy: str
    losses: np.ndarray  # (epochs, n_tasks), loss at each step's evaluation point
    updates: list
    initial_losses: np.ndarray
    final_losses: np.ndarray
    success: list
    final_theta: np.ndarray
    final_masks: list | None
    snapshots: list

    @property
    def success_rate(self) -> float:
        return float(np.mean([1.0 if s else 0.0 for s in self.success]))


def init_masks(dim: int, n_tasks: int, sparsity: float, rng: Rng) -> list[TaskMask]:
    """Per task, zero a uniformly random floor(sparsity * dim)-subset."""
    if not (0.0 <= sparsity < 1.0):
        raise ValueError("sparsity must lie in [0, 1)")
    count = int(math.floor(sparsity * dim + 1e-9))
    masks = []
    for _ in range(n_tasks):
        soft = np.ones(dim)
        if count:
            soft[np.sort(rng.choice_without_replacement(dim, count))] = 0.0
        masks.append(TaskMask(soft))
    return masks


def top_importance_indices(fisher_raw: np.ndarray, top_fraction: float) -> np.ndarray:
    """Indices of the top-fraction most important parameters (ties go to
    the lowest index)."""
    d = fisher_raw.shape[0]
    k = int(round(top_fraction * d))
    if k == 0:
        return np.empty(0, dtype=np.intp)
    return np.argsort(-fisher_raw, kind="stable")[:k]


def wrongly_masked_important(fishers_raw, masks, top_fraction: float = 0.3) -> list[int]:
    """Per task, how many top-importance parameters carry a mask below 1."""
    if not (0.0 < top_fraction <= 1.0):
        raise ValueError("top_fraction must lie in (0, 1]")
    counts = []
    for raw, mask in zip(fishers_raw, masks):
        top = top_importance_indices(np.asarray(raw, dtype=np.float64), top_fraction)
        counts.append(int(np.sum(mask.soft[top] < 1.0)))
    return counts


def _check_finite(value: np.ndarray | float, step: int, task_id: int, what: str):
    arr = np.atleast_1d(np.asarray(value, dtype=np.float64))
    if not np.isfinite(arr).all():
        coord = int(np.flatnonzero(~np.isfinite(arr))[0])
        raise TrainingAborted(step, task_id, coord, what)


def train(suite: TaskSuite, cfg: TrainConfig) -> RunRecord:
    d = suite.dim
    n = suite.n_tasks
    rng = Rng(cfg.seed)

    if suite.config.kind == "mlp":
        theta = rng.child(0).normal(0.0, 0.3, d)
    else:
        theta = np.zeros(d)

    hard_states = None
    if cfg.strategy == "soco":
        masks = init_masks(d, n, cfg.init_sparsity, rng.child(1))
    elif cfg.strategy == "hard":
        masks = init_masks(d, n, cfg.hard_sparsity, rng.child(1))
        swap_count = int(math.floor(cfg.hard_swap_frac * d + 1e-9))
        hard_states = [HardMaskState(m.soft.copy(), swap_count) for m in masks]
    else:
        masks = None

    adaptive_cfg = AdaptiveMaskConfig(
        lam=cfg.adaptive.lam,
        alpha=cfg.adaptive.alpha,
        q1=cfg.adaptive.q1,
        q3=cfg.adaptive.q3,
        beta_left_max=cfg.adaptive.beta_left_max,
        beta_right_max=cfg.adaptive.beta_right_max,
        beta_min=cfg.adaptive.beta_min,
        total_steps=cfg.epochs,
        mask_interval=cfg.mask_interval,
    )

    def task_loss(i: int) -> float:
        point = theta if masks is None else theta * masks[i].binary
        return suite.tasks[i].loss(point)

    initial_losses = np.array([task_loss(i) for i in range(n)])
    for i, v in enumerate(initial_losses):
        _check_finite(v, 0, i, "initial loss")

    losses = np.zeros((cfg.epochs, n))
    updates: list[MaskUpdateEvent] = []
    snapshots: list[UpdateSnapshot] = []

    for t in range(1, cfg.epochs + 1):
        if masks is not None and t % cfg.mask_interval == 0:
            grads = task_gradients(suite, theta, masks)
            for i, g in enumerate(grads):
                _check_finite(g, t, i, "gradient")
            grad_mean = grads[0].copy()
            for g in grads[1:]:
                grad_mean += g
            grad_mean /= n
            fishers = [fisher_information(grads[i], masks[i]) for i in range(n)]
            soft_before = np.stack([m.soft for m in masks]) if cfg.keep_update_snapshots else None

            if cfg.strategy == "soco":
                beta = beta_schedule(adaptive_cfg, t)
                for i in range(n):
                    gate = harmony_gate(grads[i], grad_mean, adaptive_cfg.alpha)
                    report = ScoreReport(
                        conflict=conflict_score(grads[i], grad_mean, fishers[i].raw, adaptive_cfg.lam),
                        harmony=harmony_score(grads[i], grad_mean, gate),
                        gate=gate,
                    )
                    sel = select(report, adaptive_cfg, beta)
                    masks[i] = apply_mask_update(masks[i], sel, fishers[i])
                    updates.append(MaskUpdateEvent(
                        step=t,
                        task_id=i,
                        beta=beta,
                        conflict_threshold=sel.conflict_threshold,
                        harmony_threshold=sel.harmony_threshold,
                        n_conflict=int(sel.conflict_idx.size),
                        n_recover=int(sel.recover_idx.size),
                        sparsity=masks[i].sparsity,
                        conflict_ratio=float(conflict_flags(grads[i], grad_mean).sum() / d),
                        wrongly_masked=wrongly_masked_important(
                            [fishers[i].raw], [masks[i]], cfg.top_fraction)[0],
                    ))
            else:  # hard
                for i in range(n):
                    agree = agreement_score(grads[i], grad_mean)
                    hard_states[i] = hard_mask_update(
                        hard_states[i], agree, fishers[i].raw, adaptive_cfg.lam
                    )
                    swapped = int(np.sum(hard_states[i].mask != masks[i].soft) // 2)
                    masks[i] = TaskMask(hard_states[i].mask.copy())
                    updates.append(MaskUpdateEvent(
                        step=t,
                        task_id=i,
                        beta=None,
                        conflict_threshold=None,
                        harmony_threshold=None,
                        n_conflict=swapped,
                        n_recover=swapped,
                        sparsity=masks[i].sparsity,
                        conflict_ratio=float(conflict_flags(grads[i], grad_mean).sum() / d),
                        wrongly_masked=wrongly_masked_important(
                            [fishers[i].raw], [masks[i]], cfg.top_fraction)[0],
                    ))

            if cfg.keep_update_snapshots:
                snapshots.append(UpdateSnapshot(
                    step=t,
                    theta=theta.copy(),
                    soft_before=soft_before,
                    soft_after=np.stack([m.soft for m in masks]),
                ))

        for i in range(n):
            losses[t - 1, i] = task_loss(i)
            _check_finite(losses[t - 1, i], t, i, "loss")

        step_grads = task_gradients(suite, theta, masks)
        for i, g in enumerate(step_grads):
            _check_finite(g, t, i, "gradient")
        if masks is None:
            theta = nomask_step(theta, step_grads, cfg.lr)
        else:
            theta = masked_sgd_step(theta, step_grads, masks, cfg.lr)
        _check_finite(theta, t, -1, "theta")

    final_losses = np.array([task_loss(i) for i in range(n)])
    success = [bool(final_losses[i] <= cfg.success_frac * initial_losses[i]) for i in range(n)]
    return RunRecord(
        strategy=cfg.strategy,
        losses=losses,
        updates=updates,
        initial_losses=initial_losses,
        final_losses=final_losses,
        success=success,
        final_theta=theta,
        final_masks=masks,
        snapshots=snapshots,
    )
