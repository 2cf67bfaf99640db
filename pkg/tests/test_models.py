import numpy as np
import pytest

from conflictmask.models import MlpTask, ModelSpec, QuadraticTask, random_mlp_params
from conflictmask.vecmath import Rng
from oracles import central_diff_gradient, max_rel_err, mlp_loss_oracle


def make_mlp_task(seed=0, layers=(4, 8, 3), n_samples=16):
    rng = Rng(seed)
    x = rng.normal(0, 1, n_samples * layers[0]).reshape(n_samples, layers[0])
    teacher = random_mlp_params(layers, rng, 0.8)
    probe = MlpTask(layers, x, np.zeros((n_samples, layers[-1])))
    return MlpTask(layers, x, probe.predict(teacher))


def test_quadratic_loss_zero_at_target():
    task = QuadraticTask(target=[1.0, -2.0], curvature=[3.0, 0.5])
    assert task.loss(np.array([1.0, -2.0])) == 0.0


def test_quadratic_loss_value():
    task = QuadraticTask(target=[0.0, 0.0], curvature=[1.0, 1.0])
    assert task.loss(np.array([2.0, 0.0])) == 2.0


def test_quadratic_gradient_analytic():
    task = QuadraticTask(target=[1.0], curvature=[2.0])
    assert np.array_equal(task.gradient(np.array([3.0])), [4.0])


def test_quadratic_gradient_matches_formula_exactly():
    rng = Rng(3)
    a = rng.uniform(0.5, 2.0, 20)
    t = rng.normal(0, 1, 20)
    theta = rng.normal(0, 1, 20)
    task = QuadraticTask(target=t, curvature=a)
    assert np.array_equal(task.gradient(theta), a * (theta - t))


def test_opposed_quadratics_have_opposite_gradients_at_origin():
    t = np.array([1.0, -2.0, 0.5])
    a = np.array([1.0, 2.0, 3.0])
    g1 = QuadraticTask(t, a).gradient(np.zeros(3))
    g2 = QuadraticTask(-t, a).gradient(np.zeros(3))
    assert np.array_equal(g1, -g2)


def test_quadratic_dimension_mismatch():
    task = QuadraticTask(target=[1.0, 2.0], curvature=[1.0, 1.0])
    with pytest.raises(ValueError, match="length"):
        task.loss(np.zeros(3))


def test_model_spec_validates_mlp_dim():
    ModelSpec("mlp", 67, (4, 8, 3))  # 4*8+8 + 8*3+3
    with pytest.raises(ValueError, match="does not match"):
        ModelSpec("mlp", 66, (4, 8, 3))


def test_mlp_loss_matches_straight_line_oracle():
    task = make_mlp_task(seed=11)
    theta = Rng(5).normal(0, 0.5, task.dim)
    expected = mlp_loss_oracle(task.layer_sizes, theta, task.inputs, task.targets)
    assert abs(task.loss(theta) - expected) < 1e-12


def test_mlp_gradient_matches_central_differences():
    task = make_mlp_task(seed=21)
    rng = Rng(6)
    for _ in range(20):
        theta = rng.normal(0, 0.5, task.dim)
        numeric = central_diff_gradient(task.loss, theta, h=1e-5)
        assert max_rel_err(task.gradient(theta), numeric) < 1e-5


def test_loss_decreases_under_small_gradient_step():
    quad = QuadraticTask(target=[1.0, -1.0, 2.0], curvature=[1.0, 2.0, 0.5])
    mlp = make_mlp_task(seed=8)
    for task, theta in ((quad, np.zeros(3)), (mlp, Rng(9).normal(0, 0.5, mlp.dim))):
        before = task.loss(theta)
        after = task.loss(theta - 1e-3 * task.gradient(theta))
        assert after < before


def test_mlp_rejects_bad_shapes():
    with pytest.raises(ValueError, match="sample count"):
        MlpTask((2, 3, 1), np.zeros((4, 2)), np.zeros((5, 1)))
    with pytest.raises(ValueError, match="input width"):
        MlpTask((2, 3, 1), np.zeros((4, 3)), np.zeros((4, 1)))
