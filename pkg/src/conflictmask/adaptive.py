"""Task-adaptive mask updates: scoring, thresholds, and scheduling.

Every mask update round scores each parameter of each task twice:

* a conflict score, gradient agreement with the task-average gradient
  plus an importance bonus (lower = more conflicting);
* a harmony score, the same agreement term but gated so that aligned
  gradients with extreme magnitude imbalance are not rewarded.

Per-task thresholds come from interpolated quantiles of the score
distribution widened by a share of the interquartile range; the share
follows a piecewise asymmetric cosine schedule over training, so
selection is permissive early, aggressive mid-training, and frozen
near the end. Selected conflicting parameters have their mask set to
their normalized importance; selected harmonious parameters are
restored to 1.
"""

import math
from dataclasses import dataclass

import numpy as np

from .masking import FisherInfo, TaskMask
from .vecmath import as_vector, check_finite, elementwise_mul, sort_ascending


@dataclass
class AdaptiveMaskConfig:
    """Hyperparameters for scoring, thresholding, and scheduling.

    ``lam`` weighs importance against agreement in the conflict score;
    ``alpha`` is the tolerated gradient-magnitude ratio before the
    harmony gate starts suppressing; ``q1``/``q3`` are the quantile
    anchors; the ``beta_*`` trio bounds the threshold-widening schedule.
    """

    lam: float = 1.0
    alpha: float = 20.0
    q1: float = 0.05
    q3: float = 0.95
    beta_left_max: float = 20.0
    beta_right_max: float = 30.0
    beta_min: float = 5.0
    total_steps: int = 1
    mask_interval: int = 1

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError("lam must be >= 0")
        if self.alpha <= 0:
            raise ValueError("alpha must be > 0")
        if not (0.0 < self.q1 < self.q3 < 1.0):
            raise ValueError("need 0 < q1 < q3 < 1")
        if self.beta_min > min(self.beta_left_max, self.beta_right_max):
            raise ValueError("beta_min must not exceed either beta max")
        for name in ("lam", "alpha", "q1", "q3", "beta_left_max", "beta_right_max", "beta_min"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if self.total_steps < 1:
            raise ValueError("total_steps must be >= 1")
        if self.mask_interval < 1:
            raise ValueError("mask_interval must be >= 1")


@dataclass
class ScoreReport:
    """Per-parameter conflict and harmony scores for one task."""

    conflict: np.ndarray
    harmony: np.ndarray
    gate: np.ndarray


@dataclass
class SelectionResult:
    """Outcome of one thresholding round for one task."""

    conflict_idx: np.ndarray
    recover_idx: np.ndarray
    conflict_threshold: float
    harmony_threshold: float
    beta: float


def conflict_score(grad: np.ndarray, grad_mean: np.ndarray, fisher_raw: np.ndarray,
                   lam: float) -> np.ndarray:
    """Agreement with the average gradient plus lam * raw importance.

    Lower values indicate stronger conflict. The importance bonus keeps
    parameters that are both conflicting and important from being the
    first ones masked.
    """
    if lam < 0:
        raise ValueError("lam must be >= 0")
    return elementwise_mul(grad, grad_mean) + lam * as_vector(fisher_raw)


def harmony_gate(grad: np.ndarray, grad_mean: np.ndarray, alpha: float) -> np.ndarray:
    """Magnitude-imbalance gate in [0, 1].

    gate_j = max(0, (alpha*|mean_j| - |grad_j|) / (alpha*|mean_j|)), i.e.
    1 when the task gradient vanishes, 0 once it exceeds alpha times the
    average magnitude. Coordinates with zero average gradient get a
    neutral 1.0; they can never carry a positive agreement product, so
    the gate is never applied there.
    """
    if alpha <= 0:
        raise ValueError("alpha must be > 0")
    grad = as_vector(grad)
    grad_mean = as_vector(grad_mean)
    gate = np.ones_like(grad_mean)
    nz = grad_mean != 0.0
    denom = alpha * np.abs(grad_mean[nz])
    gate[nz] = np.maximum(0.0, (denom - np.abs(grad[nz])) / denom)
    return gate


def harmony_score(grad: np.ndarray, grad_mean: np.ndarray, gate: np.ndarray) -> np.ndarray:
    """Gated agreement: positive products are scaled by the gate,
    nonpositive products pass through unchanged."""
    prod = elementwise_mul(grad, grad_mean)
    gate = as_vector(gate)
    return np.where(prod > 0.0, prod * gate, prod)


def quantile(x_sorted: np.ndarray, q: float) -> float:
    """Interpolated quantile with 1-based position k = q * n.

    Integer k picks the k-th smallest element; otherwise the value is
    linearly interpolated between the floor(k)-th and ceil(k)-th order
    statistics. Positions are clamped to [1, n] so small q on short
    vectors degrades to the minimum rather than indexing out of range.
    """
    x_sorted = as_vector(x_sorted)
    n = x_sorted.shape[0]
    if n == 0:
        raise ValueError("quantile of empty vector")
    if not (0.0 < q < 1.0):
        raise ValueError("q must lie strictly between 0 and 1")
    if np.isnan(x_sorted).any():
        raise ValueError("quantile input contains NaN")
    if n > 1 and (np.diff(x_sorted) < 0).any():
        raise ValueError("input must be sorted ascending")
    k = q * n
    lo = min(max(int(math.floor(k)), 1), n)
    hi = min(max(int(math.ceil(k)), 1), n)
    if lo == hi:
        return float(x_sorted[lo - 1])
    gamma = k - math.floor(k)
    return float((1.0 - gamma) * x_sorted[lo - 1] + gamma * x_sorted[hi - 1])


def iqr_threshold(scores: np.ndarray, q1: float, q3: float, beta: float, side: str) -> float:
    """Dynamic outlier threshold from the score distribution.

    The conflict side returns Q_q1 - beta * IQR (scores below it are
    flagged), the harmony side Q_q3 + beta * IQR (scores above it are
    flagged), with IQR = Q_q3 - Q_q1.
    """
    ordered = sort_ascending(scores)
    lo = quantile(ordered, q1)
    hi = quantile(ordered, q3)
    iqr = hi - lo
    if side == "conflict":
        return lo - beta * iqr
    if side == "harmony":
        return hi + beta * iqr
    raise ValueError(f"side must be 'conflict' or 'harmony', got {side!r}")


def cosine_anneal(eta_max: float, eta_min: float, t: int, total: int) -> float:
    """Full-period cosine: eta_max at t=0, eta_min at t=total/2, back to
    eta_max at t=total."""
    if total <= 0:
        raise ValueError("total must be > 0")
    if not (0 <= t <= total):
        raise ValueError(f"t={t} outside [0, {total}]")
    if eta_min > eta_max:
        raise ValueError("eta_min must not exceed eta_max")
    return eta_min + 0.5 * (eta_max - eta_min) * (1.0 + math.cos(2.0 * math.pi * (t / total)))


def beta_schedule(cfg: AdaptiveMaskConfig, t: int) -> float:
    """Piecewise asymmetric cosine schedule for the threshold width.

    The first half anneals from beta_left_max down to beta_min, the
    second half rises from beta_min to beta_right_max; both halves meet
    at beta_min so the schedule is continuous at the midpoint.
    """
    total = cfg.total_steps
    if t <= total / 2:
        return cosine_anneal(cfg.beta_left_max, cfg.beta_min, t, total)
    return cosine_anneal(cfg.beta_right_max, cfg.beta_min, t, total)


def select(scores: ScoreReport, cfg: AdaptiveMaskConfig, beta: float) -> SelectionResult:
    """Threshold both score vectors and pick the two index sets.

    Conflicting: conflict score strictly below its threshold. Recoverable:
    harmony score strictly above its threshold, minus anything already
    selected as conflicting (conflict classification wins, keeping the
    later mask update inside [0, 1]).
    """
    check_finite(scores.conflict, "conflict scores")
    check_finite(scores.harmony, "harmony scores")
    th_c = iqr_threshold(scores.conflict, cfg.q1, cfg.q3, beta, "conflict")
    th_h = iqr_threshold(scores.harmony, cfg.q1, cfg.q3, beta, "harmony")
    conflict_idx = np.flatnonzero(scores.conflict < th_c)
    recover_idx = np.setdiff1d(np.flatnonzero(scores.harmony > th_h), conflict_idx)
    return SelectionResult(
        conflict_idx=conflict_idx,
        recover_idx=recover_idx,
        conflict_threshold=th_c,
        harmony_threshold=th_h,
        beta=beta,
    )


def apply_mask_update(mask: TaskMask, sel: SelectionResult, fisher: FisherInfo) -> TaskMask:
    """Commit one selection round to a task mask.

    Conflicting coordinates take their normalized importance, recovered
    coordinates are restored to exactly 1, everything else is left
    bit-identical.
    """
    if np.intersect1d(sel.conflict_idx, sel.recover_idx).size:
        raise ValueError("conflict and recovery sets must be disjoint")
    soft = mask.soft.copy()
    if sel.conflict_idx.size:
        soft[sel.conflict_idx] = fisher.normalized[sel.conflict_idx]
    if sel.recover_idx.size:
        soft[sel.recover_idx] = 1.0
    return TaskMask(soft)
