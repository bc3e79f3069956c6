"""Integrator settings shared by the numerical modules."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

from .errors import ContractViolation


@dataclass(frozen=True)
class QuadratureConfig:
    """Deterministic quadrature settings.

    ``cutoff`` truncates semi-infinite integrals; when left unset it is
    chosen so that ``exp(-cutoff) < abs_tol / 10``. ``max_order`` bounds the
    per-dimension order of the product rules and ``max_points`` bounds the
    number of integrand evaluations in one refinement level.
    """

    abs_tol: float = 1e-8
    rel_tol: float = 1e-10
    max_subdivisions: int = 200
    cutoff: float | None = None
    max_order: int = 16
    max_points: int = 50_000_000

    def __post_init__(self):
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise ContractViolation("quadrature tolerances must be positive")
        if self.max_subdivisions < 1 or self.max_order < 2 or self.max_points < 1:
            raise ContractViolation("quadrature limits must be positive")
        if self.cutoff is not None and self.cutoff <= 0:
            raise ContractViolation("cutoff must be positive")

    @property
    def semi_infinite_cutoff(self) -> float:
        if self.cutoff is not None:
            return self.cutoff
        return math.log(10.0 / self.abs_tol)

    def to_dict(self) -> dict:
        return {"kind": "quadrature", **asdict(self)}


@dataclass(frozen=True)
class McConfig:
    """Monte Carlo settings; identical seeds give identical estimates."""

    seed: int = 0
    samples: int = 100_000
    batch: int = 20_000

    def __post_init__(self):
        if not 0 <= self.seed < 2**64:
            raise ContractViolation("seed must fit in 64 unsigned bits")
        if self.samples < 1 or self.batch < 1:
            raise ContractViolation("sample counts must be positive")

    def to_dict(self) -> dict:
        return {"kind": "mc", **asdict(self)}
