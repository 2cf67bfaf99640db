import csv

import numpy as np
import pytest

from conflictmask.masking import (
    TaskMask,
    all_ones_mask,
    fisher_information,
    masked_forward,
    masked_sgd_step,
    soft_mask_values,
    write_mask_csv,
)


def test_mask_rejects_out_of_range():
    with pytest.raises(ValueError, match=r"\[0, 1\]"):
        TaskMask(np.array([0.5, 1.2]))


def test_binary_requires_exact_one():
    # anything below 1.0, even by one ulp, stays out of the forward mask
    below_one = np.nextafter(1.0, 0.0)
    mask = TaskMask(np.array([1.0, 0.7, 0.0, below_one]))
    assert np.array_equal(mask.binary, [1.0, 0.0, 0.0, 0.0])


def test_sparsity_counts_below_one():
    assert TaskMask(np.array([1.0, 0.7, 0.0, 1.0])).sparsity == 0.5


def test_fisher_squares_and_normalizes():
    fi = fisher_information(np.array([2.0, -3.0]), TaskMask(np.array([1.0, 1.0])))
    assert np.array_equal(fi.raw, [4.0, 9.0])
    assert np.array_equal(fi.normalized, [0.0, 1.0])


def test_fisher_masked_coordinate_contributes_zero():
    fi = fisher_information(np.array([2.0, -3.0]), TaskMask(np.array([1.0, 0.0])))
    assert np.array_equal(fi.raw, [4.0, 0.0])
    assert np.array_equal(fi.normalized, [1.0, 0.0])


def test_fisher_degenerate_gives_half():
    fi = fisher_information(np.array([1.0, 1.0, 1.0]), all_ones_mask(3))
    assert np.array_equal(fi.raw, [1.0, 1.0, 1.0])
    assert np.array_equal(fi.normalized, [0.5, 0.5, 0.5])


def test_soft_mask_values_all_conflicting():
    fi = fisher_information(np.array([2.0, -3.0, 0.0]), all_ones_mask(3))
    assert np.array_equal(fi.raw, [4.0, 9.0, 0.0])
    got = soft_mask_values(fi, np.array([0, 1, 2]))
    assert np.array_equal(got.soft, [4.0 / 9.0, 1.0, 0.0])


def test_soft_mask_values_empty_set_is_all_ones():
    fi = fisher_information(np.array([2.0, -3.0]), all_ones_mask(2))
    assert np.array_equal(soft_mask_values(fi, np.array([], dtype=int)).soft, [1.0, 1.0])


def test_soft_mask_values_degenerate_half():
    fi = fisher_information(np.array([2.0, 2.0]), all_ones_mask(2))
    assert np.array_equal(soft_mask_values(fi, np.array([0])).soft, [0.5, 1.0])


def test_masked_forward():
    theta = np.array([1.0, 2.0, 3.0])
    assert np.array_equal(masked_forward(theta, TaskMask(np.array([1.0, 0.7, 1.0]))), [1.0, 0.0, 3.0])
    assert np.array_equal(masked_forward(theta, all_ones_mask(3)), theta)
    assert np.array_equal(masked_forward(theta, TaskMask(np.zeros(3))), np.zeros(3))


def test_masked_forward_matches_soft_pattern_randomized():
    rng = np.random.default_rng(4)
    for _ in range(50):
        d = int(rng.integers(1, 40))
        soft = rng.uniform(0, 1, d)
        soft[rng.uniform(0, 1, d) < 0.3] = 1.0
        theta = rng.normal(0, 1, d)
        out = masked_forward(theta, TaskMask(soft))
        assert np.array_equal(out[soft == 1.0], theta[soft == 1.0])
        assert (out[soft != 1.0] == 0.0).all()


def test_masked_sgd_step_single_task():
    theta = masked_sgd_step(
        np.array([1.0, 1.0]),
        [np.array([1.0, 1.0])],
        [TaskMask(np.array([1.0, 0.5]))],
        lr=0.1,
    )
    assert np.array_equal(theta, [0.9, 0.95])


def test_masked_sgd_step_zero_soft_freezes_coordinate():
    rng = np.random.default_rng(11)
    theta = rng.normal(0, 1, 6)
    masks = [TaskMask(np.array([0.0, 1.0, 0.5, 0.0, 1.0, 0.3])) for _ in range(3)]
    start = theta.copy()
    for _ in range(200):
        grads = [rng.normal(0, 5, 6) for _ in range(3)]
        theta = masked_sgd_step(theta, grads, masks, lr=0.05)
    assert theta[0] == start[0] and theta[3] == start[3]
    assert not np.array_equal(theta, start)


def test_masked_sgd_step_opposed_gradients_cancel():
    theta = masked_sgd_step(
        np.array([0.0]),
        [np.array([2.0]), np.array([-2.0])],
        [all_ones_mask(1), all_ones_mask(1)],
        lr=0.7,
    )
    assert np.array_equal(theta, [0.0])


def test_masked_sgd_step_requires_tasks():
    with pytest.raises(ValueError, match="at least one"):
        masked_sgd_step(np.zeros(2), [], [], lr=0.1)


def test_mask_csv_dump(tmp_path):
    path = tmp_path / "mask.csv"
    write_mask_csv(TaskMask(np.array([1.0, 0.25])), path)
    with open(path) as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["param_index", "soft_value"]
    assert rows[1] == ["0", "1"]
    assert rows[2] == ["1", "0.25"]
