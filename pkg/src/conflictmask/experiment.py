"""End-to-end experiment runs and cross-run comparison.

A run builds one suite from the config seed, trains every requested
strategy on that same suite, and renders three deterministic artifacts:
metrics.csv (per-step losses plus per-update mask diagnostics),
summary.json (effective config echo, suite manifest hash, per-strategy
aggregates), and suite.manifest (one line per task).
"""

from dataclasses import dataclass

import numpy as np

from .adaptive import AdaptiveMaskConfig
from .config import ExperimentConfig
from .formats import metrics_csv_text, to_json
from .trainer import RunRecord, TrainConfig, train
from .workloads import SuiteConfig, generate_suite


@dataclass
class ExperimentResult:
    metrics_csv: str
    summary: dict
    summary_json: str
    manifest: str


def train_config_for(cfg: ExperimentConfig, strategy: str) -> TrainConfig:
    return TrainConfig(
        strategy=strategy,
        epochs=cfg.epochs,
        lr=cfg.lr,
        mask_interval=cfg.mask_interval,
        init_sparsity=cfg.init_sparsity,
        hard_sparsity=cfg.hard_sparsity,
        hard_swap_frac=cfg.hard_swap_frac,
        seed=cfg.seed,
        adaptive=AdaptiveMaskConfig(
            lam=cfg.lam,
            alpha=cfg.alpha,
            q1=cfg.q1,
            q3=cfg.q3,
            beta_left_max=cfg.beta_left_max,
            beta_right_max=cfg.beta_right_max,
            beta_min=cfg.beta_min,
            total_steps=cfg.epochs,
            mask_interval=cfg.mask_interval,
        ),
        success_frac=cfg.success_frac,
    )


def suite_config_for(cfg: ExperimentConfig) -> SuiteConfig:
    return SuiteConfig(
        n_tasks=cfg.n_tasks,
        dim=cfg.dim,
        conflict_ratios=tuple(cfg.conflict_ratios),
        seed=cfg.seed,
        kind=cfg.model,
    )


def metrics_rows(record: RunRecord, strategy: str) -> list:
    """Flatten one run into metrics.csv rows.

    Loss is present for every (step, task); the mask-diagnostic columns
    are filled only on mask-update steps and left empty elsewhere.
    """
    by_step_task = {(ev.step, ev.task_id): ev for ev in record.updates}
    epochs, n_tasks = record.losses.shape
    rows = []
    for t in range(1, epochs + 1):
        for i in range(n_tasks):
            ev = by_step_task.get((t, i))
            rows.append((
                t,
                i,
                float(record.losses[t - 1, i]),
                ev.sparsity if ev else None,
                ev.beta if ev else None,
                ev.n_conflict if ev else None,
                ev.n_recover if ev else None,
                ev.conflict_ratio if ev else None,
                ev.wrongly_masked if ev else None,
                strategy,
            ))
    return rows


def summary_block(record: RunRecord) -> dict:
    per_task = [
        {
            "task_id": i,
            "initial_loss": float(record.initial_losses[i]),
            "final_loss": float(record.final_losses[i]),
            "success": bool(record.success[i]),
        }
        for i in range(len(record.success))
    ]
    return {
        "per_task": per_task,
        "success_rate": record.success_rate,
        "mean_final_loss": float(np.mean(record.final_losses)),
        "n_mask_updates": len({ev.step for ev in record.updates}),
    }


def run_experiment(cfg: ExperimentConfig) -> ExperimentResult:
    suite = generate_suite(suite_config_for(cfg))
    manifest = suite.manifest_text()
    rows = []
    blocks = {}
    for strategy in cfg.strategies():
        record = train(suite, train_config_for(cfg, strategy))
        rows.extend(metrics_rows(record, strategy))
        blocks[strategy] = summary_block(record)
    summary = {
        "config": cfg.effective_dict(),
        "dim_effective": suite.dim,
        "suite_manifest_sha256": suite.manifest_sha256(),
        "strategies": blocks,
    }
    return ExperimentResult(
        metrics_csv=metrics_csv_text(rows),
        summary=summary,
        summary_json=to_json(summary),
        manifest=manifest,
    )


class SummarySchemaError(ValueError):
    pass


def _check_summary(summary: dict, label: str):
    if not isinstance(summary, dict):
        raise SummarySchemaError(f"{label}: summary is not an object")
    config = summary.get("config")
    if not isinstance(config, dict) or "seed" not in config:
        raise SummarySchemaError(f"{label}: missing config block with a seed")
    strategies = summary.get("strategies")
    if not isinstance(strategies, dict):
        raise SummarySchemaError(f"{label}: missing strategies block")
    for name, block in strategies.items():
        if not isinstance(block, dict) or "per_task" not in block:
            raise SummarySchemaError(f"{label}: strategy '{name}' lacks a per_task list")
        for need in ("success_rate", "mean_final_loss"):
            if block["per_task"] and need not in block:
                raise SummarySchemaError(f"{label}: strategy '{name}' lacks '{need}'")


def compare_summaries(summaries) -> tuple[str, list]:
    """Aggregate >= 2 run summaries into a strategy comparison table.

    Returns the rendered table and a list of warnings (one per empty
    strategy block that had to be skipped).
    """
    summaries = list(summaries)
    if len(summaries) < 2:
        raise SummarySchemaError("compare needs at least 2 summaries")
    for idx, s in enumerate(summaries):
        _check_summary(s, f"summary #{idx}")

    warnings = []
    order = []
    per_strategy: dict = {}
    for idx, s in enumerate(summaries):
        seed = s["config"]["seed"]
        for name, block in s["strategies"].items():
            if not block["per_task"]:
                warnings.append(f"summary #{idx}: strategy '{name}' has no tasks; row omitted")
                continue
            if name not in per_strategy:
                per_strategy[name] = []
                order.append(name)
            per_strategy[name].append((idx, seed, block))

    lines = []
    header = f"{'strategy':<10} {'runs':>4} {'mean_success_rate':>18} {'mean_final_loss':>16}"
    lines.append(header)
    lines.append("-" * len(header))
    for name in order:
        entries = per_strategy[name]
        succ = float(np.mean([b["success_rate"] for _, _, b in entries]))
        loss = float(np.mean([b["mean_final_loss"] for _, _, b in entries]))
        lines.append(f"{name:<10} {len(entries):>4} {succ:>18.6g} {loss:>16.6g}")
    lines.append("")
    lines.append("per-seed breakdown:")
    sub = f"{'strategy':<10} {'seed':>6} {'success_rate':>13} {'mean_final_loss':>16}"
    lines.append(sub)
    lines.append("-" * len(sub))
    for name in order:
        for _, seed, block in sorted(per_strategy[name], key=lambda e: (e[1], e[0])):
            lines.append(
                f"{name:<10} {seed:>6} {block['success_rate']:>13.6g} "
                f"{block['mean_final_loss']:>16.6g}"
            )
    return "\n".join(lines) + "\n", warnings
