"""Synthetic multi-task suites with designed per-parameter conflict.

Quadratic suites plant conflict coordinatewise: every coordinate has a
shared base direction and magnitude, and each task flips the sign of its
own designated subset against that base with a strictly smaller
magnitude. Per-coordinate flips are capped to a minority of tasks, which
guarantees that at theta = 0 the task-average gradient keeps the base
direction at every coordinate, so a coordinate is measurably conflicting
for exactly the tasks it was planted for. The degenerate request of two
tasks at ratio 1.0 each is served by an exactly mirrored pair instead.

MLP suites draw an independent random teacher network per task;
conflict there is emergent rather than planted, so they carry no
ground-truth conflict sets.
"""

import hashlib
from dataclasses import dataclass

import numpy as np

from .models import MlpTask, QuadraticTask, mlp_param_count, random_mlp_params
from .vecmath import Rng, as_vector

MLP_LAYER_SIZES = (8, 16, 16, 4)
MLP_SAMPLES_PER_TASK = 32

# magnitude bands used by the quadratic construction; conflict targets are
# kept well below harmony targets so the per-coordinate minority cap in
# max_flips_per_coordinate() keeps the average gradient on the base sign
_HARMONY_MAG = (1.0, 2.0)
_CONFLICT_MAG = (0.1, 0.3)
_CURVATURE = (0.8, 1.2)


@dataclass
class SuiteConfig:
    n_tasks: int
    dim: int
    conflict_ratios: tuple[float, ...]
    seed: int
    kind: str = "quadratic"  # "quadratic" | "mlp"

    def __post_init__(self):
        self.conflict_ratios = tuple(float(r) for r in self.conflict_ratios)
        if self.n_tasks < 1:
            raise ValueError("n_tasks must be >= 1")
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        if len(self.conflict_ratios) != self.n_tasks:
            raise ValueError(
                f"conflict_ratios has {len(self.conflict_ratios)} entries "
                f"for {self.n_tasks} tasks"
            )
        for r in self.conflict_ratios:
            if not (0.0 <= r <= 1.0):
                raise ValueError(f"conflict ratio {r} outside [0, 1]")
        if self.kind not in ("quadratic", "mlp"):
            raise ValueError(f"unknown suite kind {self.kind!r}")


@dataclass
class TaskSuite:
    config: SuiteConfig
    tasks: list
    conflict_sets: list | None  # per-task planted index arrays; None for mlp

    @property
    def n_tasks(self) -> int:
        return len(self.tasks)

    @property
    def dim(self) -> int:
        if self.config.kind == "mlp":
            return mlp_param_count(MLP_LAYER_SIZES)
        return self.config.dim

    def manifest_text(self) -> str:
        lines = [
            f"{i}\t{format(r, '.17g')}\t{self.config.seed}"
            for i, r in enumerate(self.config.conflict_ratios)
        ]
        return "\n".join(lines) + "\n"

    def manifest_sha256(self) -> str:
        return hashlib.sha256(self.manifest_text().encode()).hexdigest()


def max_flips_per_coordinate(n_tasks: int) -> int:
    """Largest per-coordinate count of sign-flipped tasks that still
    leaves the task-average gradient pointing the base direction.

    Harmonious curvature*magnitude is >= 0.8 and conflicting
    curvature*magnitude is <= 0.36, so the average keeps its sign while
    0.8*(N-K) > 0.36*K. The cap K < 4N/7 is deliberately stricter, which
    keeps a sign margin even at the band edges.
    """
    return (4 * n_tasks - 1) // 7


def _planted_counts(cfg: SuiteConfig) -> list[int]:
    return [int(np.floor(r * cfg.dim + 0.5)) for r in cfg.conflict_ratios]


def generate_suite(cfg: SuiteConfig) -> TaskSuite:
    """Deterministically build the suite described by ``cfg``."""
    if cfg.kind == "mlp":
        return _generate_mlp_suite(cfg)
    if cfg.n_tasks == 2 and cfg.conflict_ratios == (1.0, 1.0):
        return _generate_mirrored_pair(cfg)
    return _generate_quadratic_suite(cfg)


def _generate_mirrored_pair(cfg: SuiteConfig) -> TaskSuite:
    rng = Rng(cfg.seed)
    d = cfg.dim
    sigma = rng.signs(d)
    mags = rng.uniform(*_HARMONY_MAG, d)
    curv = rng.uniform(*_CURVATURE, d)
    target = sigma * mags
    tasks = [
        QuadraticTask(target=target, curvature=curv.copy()),
        QuadraticTask(target=-target, curvature=curv.copy()),
    ]
    everything = np.arange(d)
    return TaskSuite(config=cfg, tasks=tasks, conflict_sets=[everything, everything.copy()])


def _assign_conflict_sets(cfg: SuiteConfig, rng: Rng) -> list[np.ndarray]:
    d = cfg.dim
    cap = max_flips_per_coordinate(cfg.n_tasks)
    counts = _planted_counts(cfg)
    if sum(counts) > cap * d:
        raise ValueError(
            f"requested conflict ratios are infeasible: {sum(counts)} flips "
            f"exceed the {cap}-per-coordinate budget ({cap * d} total) "
            f"for {cfg.n_tasks} tasks of dim {d}"
        )
    per_coord = np.zeros(d, dtype=np.int64)
    sets: list[np.ndarray] = [np.empty(0, dtype=np.int64)] * cfg.n_tasks
    # largest requests first, each spread over the least-loaded coordinates
    order = sorted(range(cfg.n_tasks), key=lambda i: (-counts[i], i))
    for i in order:
        k = counts[i]
        if k == 0:
            continue
        tie = rng.uniform(0.0, 1.0, d)
        ranked = np.lexsort((tie, per_coord))
        eligible = ranked[per_coord[ranked] < cap]
        if eligible.size < k:
            raise ValueError(
                f"could not place {k} conflicting coordinates for task {i}; "
                f"lower the conflict ratios or raise dim"
            )
        chosen = np.sort(eligible[:k])
        per_coord[chosen] += 1
        sets[i] = chosen
    return sets


def _generate_quadratic_suite(cfg: SuiteConfig) -> TaskSuite:
    rng = Rng(cfg.seed)
    d = cfg.dim
    sigma = rng.signs(d)
    base_mags = rng.uniform(*_HARMONY_MAG, d)  # shared harmonious targets
    sets = _assign_conflict_sets(cfg, rng)
    tasks = []
    for i in range(cfg.n_tasks):
        curv = rng.uniform(*_CURVATURE, d)
        target = sigma * base_mags
        idx = sets[i]
        if idx.size:
            target[idx] = -sigma[idx] * rng.uniform(*_CONFLICT_MAG, idx.size)
        tasks.append(QuadraticTask(target=target, curvature=curv))
    return TaskSuite(config=cfg, tasks=tasks, conflict_sets=sets)


def _generate_mlp_suite(cfg: SuiteConfig) -> TaskSuite:
    rng = Rng(cfg.seed)
    tasks = []
    for _ in range(cfg.n_tasks):
        inputs = rng.normal(0.0, 1.0, MLP_SAMPLES_PER_TASK * MLP_LAYER_SIZES[0]).reshape(
            MLP_SAMPLES_PER_TASK, MLP_LAYER_SIZES[0]
        )
        teacher = random_mlp_params(MLP_LAYER_SIZES, rng, scale=0.8)
        probe = MlpTask(MLP_LAYER_SIZES, inputs, np.zeros((MLP_SAMPLES_PER_TASK, MLP_LAYER_SIZES[-1])))
        targets = probe.predict(teacher)
        tasks.append(MlpTask(MLP_LAYER_SIZES, inputs, targets))
    return TaskSuite(config=cfg, tasks=tasks, conflict_sets=None)


def task_gradients(suite: TaskSuite, theta: np.ndarray, masks=None) -> list[np.ndarray]:
    """Per-task gradients, each evaluated at that task's binary-masked
    point (or at raw theta when masks is None)."""
    theta = as_vector(theta)
    grads = []
    for i, task in enumerate(suite.tasks):
        point = theta if masks is None else theta * masks[i].binary
        grads.append(task.gradient(point))
    return grads


def conflict_flags(grad: np.ndarray, grad_mean: np.ndarray) -> np.ndarray:
    """Boolean mask of conflicting coordinates for one task.

    A coordinate conflicts when the task gradient opposes the task-average
    gradient, or when the task still pulls on a coordinate whose average
    gradient is exactly zero (fully canceled directions count as
    conflict, never as harmony).
    """
    prod = grad * grad_mean
    return (prod < 0.0) | ((grad_mean == 0.0) & (grad != 0.0))


def measure_conflict_ratio(suite: TaskSuite, theta: np.ndarray, masks=None) -> np.ndarray:
    """Fraction of conflicting coordinates per task at ``theta``."""
    grads = task_gradients(suite, theta, masks)
    grad_mean = sum(grads) / len(grads)
    d = grads[0].shape[0]
    return np.array([conflict_flags(g, grad_mean).sum() / d for g in grads])
