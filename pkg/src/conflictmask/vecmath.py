"""Dense float64 vector helpers and seeded randomness.

Vectors throughout this package are plain 1-D ``numpy.float64`` arrays.
The helpers here enforce the small set of contracts the rest of the
library relies on (equal lengths, no NaN ahead of sorting, nonempty
reductions) and provide a reproducible random stream whose output is
bit-identical across runs and platforms for a given seed.
"""

import numpy as np


def as_vector(values) -> np.ndarray:
    """Coerce input to a 1-D float64 array."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError(f"expected a 1-D vector, got shape {arr.shape}")
    return arr


def check_finite(v: np.ndarray, name: str = "vector") -> np.ndarray:
    """Raise if any entry is NaN or infinite."""
    if not np.isfinite(v).all():
        bad = int(np.flatnonzero(~np.isfinite(v))[0])
        raise ValueError(f"{name} has non-finite entry at index {bad}")
    return v


def elementwise_mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Coordinatewise product of two equal-length vectors."""
    a = as_vector(a)
    b = as_vector(b)
    if a.shape[0] != b.shape[0]:
        raise ValueError(f"length mismatch: {a.shape[0]} vs {b.shape[0]}")
    return a * b


def sort_ascending(a) -> np.ndarray:
    """Return a nondecreasing copy of ``a``. NaN entries are rejected."""
    a = as_vector(a)
    if np.isnan(a).any():
        bad = int(np.flatnonzero(np.isnan(a))[0])
        raise ValueError(f"cannot sort: NaN at index {bad}")
    return np.sort(a, kind="stable")


def minmax(a) -> tuple[float, float]:
    """Exact (min, max) of a nonempty vector."""
    a = as_vector(a)
    if a.shape[0] == 0:
        raise ValueError("minmax of empty vector")
    return float(a.min()), float(a.max())


class Rng:
    """Seeded random stream (PCG64).

    Identical seeds produce bit-identical draw sequences. Instances are
    single-owner: concurrent workers should each hold their own child
    stream obtained via :meth:`child`, which derives an independent but
    fully deterministic stream from (seed, key).
    """

    def __init__(self, seed: int):
        self.seed = int(seed)
        self._gen = np.random.Generator(np.random.PCG64(np.random.SeedSequence(self.seed)))

    def child(self, key: int) -> "Rng":
        """Derive an independent deterministic substream."""
        rng = Rng.__new__(Rng)
        rng.seed = self.seed
        seq = np.random.SeedSequence(entropy=self.seed, spawn_key=(int(key),))
        rng._gen = np.random.Generator(np.random.PCG64(seq))
        return rng

    def uniform(self, low: float, high: float, size: int) -> np.ndarray:
        return self._gen.uniform(low, high, size)

    def normal(self, loc: float, scale: float, size: int) -> np.ndarray:
        return self._gen.normal(loc, scale, size)

    def integers(self, low: int, high: int, size: int | None = None):
        return self._gen.integers(low, high, size=size)

    def choice_without_replacement(self, pool, k: int) -> np.ndarray:
        """Choose ``k`` distinct elements from ``pool`` (array or int range)."""
        return self._gen.choice(pool, size=k, replace=False)

    def permutation(self, n: int) -> np.ndarray:
        return self._gen.permutation(n)

    def signs(self, size: int) -> np.ndarray:
        """Random vector of +/-1.0."""
        return np.where(self._gen.integers(0, 2, size=size) == 1, 1.0, -1.0)
