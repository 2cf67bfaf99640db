"""Differentiable task models over a flat shared parameter vector.

Two concrete task kinds are provided, both exposing ``loss(theta)`` and
``gradient(theta)`` at an arbitrary parameter point:

* :class:`QuadraticTask` -- a diagonal quadratic bowl with closed-form
  gradient, used to build synthetic suites with provable conflict
  structure.
* :class:`MlpTask` -- a small tanh MLP regressor trained with mean
  squared error, with hand-written backpropagation.

Gradients are always evaluated at whatever point the caller passes in;
the training loop passes the binary-masked point, never raw theta.
"""

from dataclasses import dataclass

import numpy as np

from .vecmath import Rng, as_vector, check_finite


@dataclass
class ModelSpec:
    """Architecture descriptor. ``dim`` is the flat parameter count."""

    kind: str  # "quadratic" | "mlp"
    dim: int
    layer_sizes: tuple[int, ...] = ()  # mlp only, e.g. (8, 16, 16, 4)

    def __post_init__(self):
        if self.kind not in ("quadratic", "mlp"):
            raise ValueError(f"unknown model kind {self.kind!r}")
        if self.kind == "mlp":
            implied = mlp_param_count(self.layer_sizes)
            if self.dim != implied:
                raise ValueError(
                    f"dim {self.dim} does not match layer sizes {self.layer_sizes} "
                    f"(implied {implied})"
                )
        elif self.dim < 1:
            raise ValueError("dim must be >= 1")


def mlp_param_count(layer_sizes: tuple[int, ...]) -> int:
    if len(layer_sizes) < 2:
        raise ValueError("mlp needs at least input and output sizes")
    return sum(
        layer_sizes[i] * layer_sizes[i + 1] + layer_sizes[i + 1]
        for i in range(len(layer_sizes) - 1)
    )


@dataclass
class QuadraticTask:
    """Loss 0.5 * sum_j curvature_j * (theta_j - target_j)^2.

    Curvature entries must be strictly positive, so the loss is zero
    exactly at ``target`` and the gradient is curvature * (theta - target).
    """

    target: np.ndarray
    curvature: np.ndarray

    def __post_init__(self):
        self.target = as_vector(self.target)
        self.curvature = as_vector(self.curvature)
        if self.target.shape != self.curvature.shape:
            raise ValueError("target and curvature must have equal length")
        if not (self.curvature > 0).all():
            raise ValueError("curvature entries must be > 0")

    @property
    def dim(self) -> int:
        return self.target.shape[0]

    def loss(self, theta: np.ndarray) -> float:
        theta = self._check(theta)
        diff = theta - self.target
        return float(0.5 * np.sum(self.curvature * diff * diff))

    def gradient(self, theta: np.ndarray) -> np.ndarray:
        theta = self._check(theta)
        return self.curvature * (theta - self.target)

    def _check(self, theta) -> np.ndarray:
        theta = as_vector(theta)
        if theta.shape[0] != self.dim:
            raise ValueError(f"theta length {theta.shape[0]}, expected {self.dim}")
        return theta


@dataclass
class MlpTask:
    """MSE regression on a fixed sample set through a tanh MLP.

    ``layer_sizes`` is (in, hidden..., out). Parameters unflatten in layer
    order as weight matrix (row-major, in x out) followed by bias. The loss
    is the mean over samples and output coordinates of the squared error,
    which keeps finite-difference checks well scaled.
    """

    layer_sizes: tuple[int, ...]
    inputs: np.ndarray  # (n_samples, in)
    targets: np.ndarray  # (n_samples, out)

    def __post_init__(self):
        self.layer_sizes = tuple(int(s) for s in self.layer_sizes)
        self.inputs = np.asarray(self.inputs, dtype=np.float64)
        self.targets = np.asarray(self.targets, dtype=np.float64)
        if self.inputs.ndim != 2 or self.targets.ndim != 2:
            raise ValueError("inputs and targets must be 2-D sample matrices")
        if self.inputs.shape[0] != self.targets.shape[0]:
            raise ValueError("inputs and targets must have the same sample count")
        if self.inputs.shape[1] != self.layer_sizes[0]:
            raise ValueError("input width does not match layer_sizes[0]")
        if self.targets.shape[1] != self.layer_sizes[-1]:
            raise ValueError("target width does not match layer_sizes[-1]")

    @property
    def dim(self) -> int:
        return mlp_param_count(self.layer_sizes)

    def unflatten(self, theta: np.ndarray) -> list[tuple[np.ndarray, np.ndarray]]:
        theta = self._check(theta)
        layers = []
        pos = 0
        for n_in, n_out in zip(self.layer_sizes[:-1], self.layer_sizes[1:]):
            w = theta[pos : pos + n_in * n_out].reshape(n_in, n_out)
            pos += n_in * n_out
            b = theta[pos : pos + n_out]
            pos += n_out
            layers.append((w, b))
        return layers

    def _forward(self, theta: np.ndarray):
        layers = self.unflatten(theta)
        activations = [self.inputs]
        h = self.inputs
        for i, (w, b) in enumerate(layers):
            z = h @ w + b
            h = np.tanh(z) if i < len(layers) - 1 else z  # linear output layer
            activations.append(h)
        return layers, activations

    def predict(self, theta: np.ndarray) -> np.ndarray:
        _, acts = self._forward(theta)
        return acts[-1]

    def loss(self, theta: np.ndarray) -> float:
        _, acts = self._forward(theta)
        err = acts[-1] - self.targets
        return float(np.mean(err * err))

    def gradient(self, theta: np.ndarray) -> np.ndarray:
        layers, acts = self._forward(theta)
        n_samples, n_out = self.targets.shape
        # d(mean squared error)/d(output)
        delta = 2.0 * (acts[-1] - self.targets) / (n_samples * n_out)
        grads_w = [None] * len(layers)
        grads_b = [None] * len(layers)
        for i in range(len(layers) - 1, -1, -1):
            w, _ = layers[i]
            grads_w[i] = acts[i].T @ delta
            grads_b[i] = delta.sum(axis=0)
            if i > 0:
                # acts[i] is tanh(z_i) for hidden layers, so tanh' = 1 - acts^2
                delta = (delta @ w.T) * (1.0 - acts[i] * acts[i])
        flat = np.concatenate([np.concatenate([w.ravel(), b]) for w, b in zip(grads_w, grads_b)])
        return check_finite(flat, "mlp gradient")

    def _check(self, theta) -> np.ndarray:
        theta = as_vector(theta)
        if theta.shape[0] != self.dim:
            raise ValueError(f"theta length {theta.shape[0]}, expected {self.dim}")
        return theta


def random_mlp_params(layer_sizes: tuple[int, ...], rng: Rng, scale: float = 0.5) -> np.ndarray:
    """Flat random parameter vector for the given architecture."""
    return rng.normal(0.0, scale, mlp_param_count(tuple(layer_sizes)))
