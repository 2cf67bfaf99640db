"""Conflict-aware soft parameter masking for multi-task optimization."""

from .adaptive import (
    AdaptiveMaskConfig,
    ScoreReport,
    SelectionResult,
    apply_mask_update,
    beta_schedule,
    conflict_score,
    cosine_anneal,
    harmony_gate,
    harmony_score,
    iqr_threshold,
    quantile,
    select,
)
from .baselines import HardMaskState, agreement_score, hard_mask_update, nomask_step
from .config import ConfigError, ExperimentConfig, load_config
from .experiment import ExperimentResult, compare_summaries, run_experiment
from .masking import (
    FisherInfo,
    TaskMask,
    fisher_information,
    masked_forward,
    masked_sgd_step,
    soft_mask_values,
)
from .models import MlpTask, ModelSpec, QuadraticTask
from .trainer import (
    RunRecord,
    TrainConfig,
    TrainingAborted,
    init_masks,
    train,
    wrongly_masked_important,
)
from .vecmath import Rng
from .workloads import SuiteConfig, TaskSuite, generate_suite, measure_conflict_ratio

__version__ = "0.1.0"
