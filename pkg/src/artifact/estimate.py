"""Numerical estimates carrying an error bar and the settings that produced them."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class Estimate:
    """``error`` is a quadrature bound or a Monte Carlo standard error."""

    value: float
    error: float
    method: str
    samples: int | None = None
    extra: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if not self.error >= 0:
            raise ValueError("error bars are non-negative")

    def to_dict(self) -> dict:
        out = {"value": self.value, "error": self.error, "method": self.method}
        if self.samples is not None:
            out["samples"] = self.samples
        out.update(self.extra)
        return out


def philox(seed: int, *stream: int) -> np.random.Generator:
    """Counter-based generator for the stream ``(seed, *stream)``."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, *stream])))


def shard_stats(values: np.ndarray) -> tuple[int, float, float]:
    """``(count, mean, sum of squared deviations)`` of one shard."""
    values = np.asarray(values, dtype=float)
    mean = float(values.mean())
    return values.size, mean, float(np.sum((values - mean) ** 2))


def combine_shards(parts: list[tuple[int, float, float]]) -> tuple[float, float, int]:
    """Merge shard statistics in order; returns (mean, standard error, count)."""
    n, mean, m2 = 0, 0.0, 0.0
    for nb, mb, m2b in parts:
        tot = n + nb
        delta = mb - mean
        mean += delta * nb / tot
        m2 += m2b + delta * delta * n * nb / tot
        n = tot
    var = m2 / (n - 1) if n > 1 else 0.0
    return mean, math.sqrt(var / n), n


def shard_sizes(samples: int, batch: int) -> list[int]:
    full, rest = divmod(samples, batch)
    return [batch] * full + ([rest] if rest else [])
