import hashlib

import numpy as np
import pytest

from conflictmask.masking import TaskMask
from conflictmask.workloads import (
    MLP_LAYER_SIZES,
    SuiteConfig,
    generate_suite,
    max_flips_per_coordinate,
    measure_conflict_ratio,
    task_gradients,
)
from oracles import conflict_fraction_oracle


def test_config_validation():
    with pytest.raises(ValueError, match="outside"):
        SuiteConfig(2, 10, (0.5, 1.5), seed=0)
    with pytest.raises(ValueError, match="entries"):
        SuiteConfig(3, 10, (0.1, 0.2), seed=0)
    with pytest.raises(ValueError, match="kind"):
        SuiteConfig(1, 10, (0.0,), seed=0, kind="transformer")


def test_zero_ratio_suite_has_no_conflict():
    suite = generate_suite(SuiteConfig(2, 10, (0.0, 0.0), seed=1))
    grads = task_gradients(suite, np.zeros(10))
    mean = (grads[0] + grads[1]) / 2
    for g in grads:
        assert (g * mean >= 0).all()
    assert np.array_equal(measure_conflict_ratio(suite, np.zeros(10)), [0.0, 0.0])


def test_mirrored_pair_fully_conflicts():
    suite = generate_suite(SuiteConfig(2, 10, (1.0, 1.0), seed=2))
    g1, g2 = task_gradients(suite, np.zeros(10))
    assert (g1 * g2 <= 0).all()
    assert np.array_equal(suite.tasks[0].target, -suite.tasks[1].target)
    assert np.array_equal(measure_conflict_ratio(suite, np.zeros(10)), [1.0, 1.0])


def test_single_task_has_zero_conflict_ratio():
    suite = generate_suite(SuiteConfig(1, 12, (0.0,), seed=3))
    assert np.array_equal(measure_conflict_ratio(suite, np.zeros(12)), [0.0])


def test_planted_fractions_match_targets():
    ratios = (0.10, 0.15, 0.20, 0.20, 0.25, 0.30, 0.40, 0.45)
    suite = generate_suite(SuiteConfig(8, 256, ratios, seed=4))
    measured = measure_conflict_ratio(suite, np.zeros(256))
    for got, want in zip(measured, ratios):
        assert abs(got - want) <= 0.05
    # the construction is exact up to integer rounding
    for s, want in zip(suite.conflict_sets, ratios):
        assert abs(s.size / 256 - want) <= 0.02


def test_measured_conflict_equals_planted_sets():
    suite = generate_suite(SuiteConfig(5, 64, (0.1, 0.2, 0.3, 0.1, 0.4), seed=5))
    grads = task_gradients(suite, np.zeros(64))
    mean = sum(grads) / len(grads)
    for i, g in enumerate(grads):
        flagged = np.flatnonzero((g * mean < 0) | ((mean == 0) & (g != 0)))
        assert np.array_equal(flagged, suite.conflict_sets[i])


def test_measure_matches_brute_force_recount():
    suite = generate_suite(SuiteConfig(8, 40, (0.1, 0.2, 0.3, 0.15, 0.25, 0.05, 0.35, 0.4), seed=6))
    rng = np.random.default_rng(0)
    theta = rng.normal(0, 1, 40)
    masks = [TaskMask((rng.uniform(0, 1, 40) < 0.8).astype(float)) for _ in range(8)]
    got = measure_conflict_ratio(suite, theta, masks)
    grads = task_gradients(suite, theta, masks)
    mean = sum(grads) / len(grads)
    assert np.array_equal(got, conflict_fraction_oracle(grads, mean))


def test_suite_generation_is_deterministic():
    cfg = SuiteConfig(4, 32, (0.1, 0.2, 0.3, 0.4), seed=7)
    a = generate_suite(cfg)
    b = generate_suite(cfg)
    for ta, tb in zip(a.tasks, b.tasks):
        assert np.array_equal(ta.target, tb.target)
        assert np.array_equal(ta.curvature, tb.curvature)
    for sa, sb in zip(a.conflict_sets, b.conflict_sets):
        assert np.array_equal(sa, sb)


def test_infeasible_ratios_rejected():
    # 3 tasks allow at most 1 flip per coordinate; ratios sum past that
    assert max_flips_per_coordinate(3) == 1
    with pytest.raises(ValueError, match="infeasible"):
        generate_suite(SuiteConfig(3, 20, (0.9, 0.9, 0.9), seed=8))


def test_positive_ratio_needs_multiple_tasks():
    assert max_flips_per_coordinate(1) == 0
    with pytest.raises(ValueError, match="infeasible"):
        generate_suite(SuiteConfig(1, 10, (0.5,), seed=9))


def test_manifest_lines_and_hash():
    suite = generate_suite(SuiteConfig(2, 8, (0.25, 0.5), seed=10))
    text = suite.manifest_text()
    lines = text.splitlines()
    assert lines[0] == "0\t0.25\t10"
    assert lines[1] == "1\t0.5\t10"
    assert suite.manifest_sha256() == hashlib.sha256(text.encode()).hexdigest()


def test_mlp_suite_shapes_and_determinism():
    cfg = SuiteConfig(3, 1, (0.1, 0.2, 0.3), seed=11, kind="mlp")
    suite = generate_suite(cfg)
    assert suite.conflict_sets is None
    assert len(suite.tasks) == 3
    assert suite.dim == suite.tasks[0].dim
    assert suite.tasks[0].layer_sizes == MLP_LAYER_SIZES
    again = generate_suite(cfg)
    for a, b in zip(suite.tasks, again.tasks):
        assert np.array_equal(a.inputs, b.inputs)
        assert np.array_equal(a.targets, b.targets)
    # tasks differ from each other
    assert not np.array_equal(suite.tasks[0].targets, suite.tasks[1].targets)
