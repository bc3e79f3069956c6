"""Reference values for the partition function and exact series comparison.

Nothing here uses the intermediate field: ``Z`` is computed directly from
the complex matrix integral, so every other module can be judged against it.
At ``N = 1`` the integral over one complex variable reduces to
``Z = int_0^inf exp(-t - lam t^2) dt`` with ``t = |phi|^2``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np
from scipy import integrate, special

from .config import McConfig, QuadratureConfig
from .errors import AccuracyError, ContractViolation
from .estimate import Estimate, combine_shards, philox, shard_sizes, shard_stats
from .series import SeriesInN

__all__ = [
    "McConfig",
    "QuadratureConfig",
    "z_reference",
    "log_z_reference",
    "z_closed_form_n1",
    "compare_series",
    "SeriesComparison",
]

MC_MAX_N = 3
STREAM_TAG = 1  # keeps oracle draws apart from the streams used by lve


def z_closed_form_n1(lam: float) -> float:
    """``exp(1/(4 lam)) sqrt(pi/(4 lam)) erfc(1/(2 sqrt(lam)))`` at N = 1."""
    if lam == 0:
        return 1.0
    r = 1.0 / (2.0 * math.sqrt(lam))
    # erfcx(r) = exp(r^2) erfc(r) keeps large r finite
    return math.sqrt(math.pi) * r * float(special.erfcx(r))


def _radial(lam: float, cfg: QuadratureConfig) -> Estimate:
    T = cfg.semi_infinite_cutoff
    val, err = integrate.quad(
        lambda t: math.exp(-t - lam * t * t),
        0.0,
        T,
        epsabs=cfg.abs_tol / 10,
        epsrel=cfg.rel_tol,
        limit=cfg.max_subdivisions,
    )
    tail = math.exp(-T)
    total = err + tail
    if total > max(cfg.abs_tol, cfg.rel_tol * abs(val)):
        raise AccuracyError("radial quadrature missed its tolerance", val, total)
    return Estimate(val, total, "radial-quadrature", extra={"cutoff": T})


def _mc_shard(args) -> tuple[int, float, float]:
    lam, N, seed, shard, size = args
    rng = philox(seed, STREAM_TAG, shard)
    # <conj(Phi_ij) Phi_kl> = d_ik d_jl: real and imaginary parts of variance 1/2
    re = rng.standard_normal((size, N, N))
    im = rng.standard_normal((size, N, N))
    phi = (re + 1j * im) / math.sqrt(2.0)
    m = np.conj(np.swapaxes(phi, 1, 2)) @ phi
    tr = np.sum(np.abs(m) ** 2, axis=(1, 2))
    return shard_stats(np.exp(-(lam / N) * tr))


def _mc(lam: float, N: int, cfg: McConfig, map_fn: Callable) -> Estimate:
    if N > MC_MAX_N:
        raise ContractViolation(f"Monte Carlo reference limited to N <= {MC_MAX_N}")
    tasks = [(lam, N, cfg.seed, k, size) for k, size in enumerate(shard_sizes(cfg.samples, cfg.batch))]
    mean, se, n = combine_shards(list(map_fn(_mc_shard, tasks)))
    return Estimate(mean, se, "monte-carlo", samples=n, extra={"seed": cfg.seed})


def z_reference(
    lam: float,
    N: int,
    cfg: QuadratureConfig | McConfig = QuadratureConfig(),
    map_fn: Callable = map,
) -> Estimate:
    """``Z(lam, N)`` from the direct matrix integral.

    Quadrature needs ``N = 1``; Monte Carlo averages the interaction weight
    over exact Gaussian samples for ``N <= 3``.
    """
    if not isinstance(N, int) or N < 1:
        raise ContractViolation("N must be a positive integer")
    lam = float(lam)
    if not lam >= 0 or math.isinf(lam):
        raise ContractViolation("lambda must be finite and non-negative")
    if lam == 0:
        return Estimate(1.0, 0.0, "exact")
    if isinstance(cfg, QuadratureConfig):
        if N != 1:
            raise ContractViolation("quadrature reference only at N = 1")
        return _radial(lam, cfg)
    if isinstance(cfg, McConfig):
        return _mc(lam, N, cfg, map_fn)
    raise ContractViolation(f"unsupported integrator {type(cfg).__name__}")


def log_z_reference(lam: float, N: int, cfg=QuadratureConfig(), map_fn: Callable = map) -> Estimate:
    est = z_reference(lam, N, cfg, map_fn)
    if est.value <= 0:
        raise AccuracyError("reference Z is not positive", est.value, est.error)
    return Estimate(math.log(est.value), est.error / est.value, est.method, est.samples, est.extra)


# series comparison ---------------------------------------------------------

def _frac(v: Fraction) -> str:
    return f"{v.numerator}/{v.denominator}"


@dataclass(frozen=True)
class SeriesComparison:
    max_order: int
    rows: list[tuple[int, int, Fraction, Fraction]] = field(default_factory=list)

    @property
    def mismatches(self) -> list[tuple[int, int, Fraction, Fraction]]:
        return [r for r in self.rows if r[2] != r[3]]

    @property
    def equal(self) -> bool:
        return not self.mismatches

    @property
    def first_divergence(self) -> tuple[int, int, Fraction, Fraction] | None:
        bad = self.mismatches
        return bad[0] if bad else None

    def table(self) -> str:
        lines = [f"{'order':>5}  {'N^p':>5}  {'a':>16}  {'b':>16}  match"]
        for k, p, a, b in self.rows:
            lines.append(f"{k:>5}  {p:>5}  {str(a):>16}  {str(b):>16}  {'yes' if a == b else 'NO'}")
        if self.equal:
            lines.append(f"equal through order {self.max_order}")
        else:
            k, p, a, b = self.first_divergence
            lines.append(f"first divergence at order {k}, N^{p}: {a} vs {b}")
        return "\n".join(lines)

    def to_dict(self) -> dict:
        first = self.first_divergence
        return {
            "max_order": self.max_order,
            "equal": self.equal,
            "first_divergence": None
            if first is None
            else {"order": first[0], "N_power": first[1], "a": _frac(first[2]), "b": _frac(first[3])},
            "rows": [
                {"order": k, "N_power": p, "a": _frac(a), "b": _frac(b)} for k, p, a, b in self.rows
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def compare_series(a: SeriesInN, b: SeriesInN, max_order: int) -> SeriesComparison:
    """Exact comparison per (order, power of N); rows run by order then power."""
    if max_order > min(a.max_order, b.max_order):
        raise ContractViolation("both series must reach max_order")
    rows = []
    for k in range(max_order + 1):
        powers = sorted(set(a[k].powers()) | set(b[k].powers()), reverse=True)
        for p in powers:
            rows.append((k, p, a[k][p], b[k][p]))
    return SeriesComparison(max_order, rows)
