"""Dense arithmetic helpers and the seedable random source.

Matrices are plain ``float64`` numpy arrays. :class:`RngStream` wraps a
PCG64 bit generator seeded through :class:`numpy.random.SeedSequence`;
sub-streams are derived from ``(seed, key)`` so that simulation run ``i``
draws the same numbers no matter how many other runs exist or in which
order they execute. Normal variates use numpy's ziggurat sampler.
"""

from __future__ import annotations

import numpy as np

from .errors import NumericError, ParameterError, ShapeError

__all__ = ["as_matrix", "matmul", "RngStream", "sample_normal", "sample_uniform"]


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    """Return ``a`` as a finite 2-D float64 array."""
    m = np.asarray(a, dtype=np.float64)
    if m.ndim != 2:
        raise ShapeError(f"{name} must be 2-D, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise NumericError(f"{name} contains non-finite entries")
    return m


def matmul(a, b) -> np.ndarray:
    a = as_matrix(a, "a")
    b = as_matrix(b, "b")
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"cannot multiply {a.shape} by {b.shape}")
    out = a @ b
    if not np.all(np.isfinite(out)):
        raise NumericError("matrix product overflowed")
    return out


class RngStream:
    """Deterministic random stream with order-independent sub-streams."""

    def __init__(self, seed: int = 0, _spawn_key: tuple[int, ...] = ()):
        if seed < 0:
            raise ParameterError("seed must be non-negative")
        self.seed = int(seed)
        self.spawn_key = tuple(_spawn_key)
        ss = np.random.SeedSequence(self.seed, spawn_key=self.spawn_key)
        self._gen = np.random.Generator(np.random.PCG64(ss))

    def substream(self, key: int) -> "RngStream":
        """Child stream identified by ``key``; independent of parent draws."""
        return RngStream(self.seed, self.spawn_key + (int(key),))

    @property
    def generator(self) -> np.random.Generator:
        return self._gen

    def normal(self, mean: float, std: float, size) -> np.ndarray:
        if not std > 0:
            raise ParameterError(f"std must be positive, got {std}")
        return self._gen.normal(mean, std, size)

    def uniform(self, lo: float, hi: float, size) -> np.ndarray:
        if not lo < hi:
            raise ParameterError(f"need lo < hi, got [{lo}, {hi})")
        return self._gen.uniform(lo, hi, size)

    def permutation(self, n: int) -> np.ndarray:
        return self._gen.permutation(n)


def sample_normal(rng: RngStream, mean: float, std: float, n: int) -> np.ndarray:
    """``n`` i.i.d. draws from Normal(mean, std**2)."""
    if n < 1:
        raise ParameterError("n must be >= 1")
    return rng.normal(mean, std, n)


def sample_uniform(rng: RngStream, lo: float, hi: float, n: int) -> np.ndarray:
    """``n`` i.i.d. draws from Uniform[lo, hi)."""
    if n < 1:
        raise ParameterError("n must be >= 1")
    return rng.uniform(lo, hi, n)
