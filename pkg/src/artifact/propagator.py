"""Matrix-base propagators of the four classes of noncommutative quartic models.

Only the two self-dual classes have a closed diagonal matrix-base form,
``1/(m+n+A)`` and ``1/(m+A)``. The ordinary and covariant kernels are known
only as approximate continuum expressions, kept here as descriptive
metadata and never evaluated.
"""

from __future__ import annotations

import csv
import enum
import io
import json
from dataclasses import dataclass

from .errors import ContractViolation, DomainError


class PropagatorClass(str, enum.Enum):
    ORDINARY = "Ordinary"
    SELF_DUAL = "SelfDual"
    COVARIANT = "Covariant"
    SELF_DUAL_COVARIANT = "SelfDualCovariant"

    @classmethod
    def parse(cls, name: str) -> "PropagatorClass":
        key = name.replace("-", "").replace("_", "").lower()
        for c in cls:
            if c.value.lower() == key:
                return c
        raise ContractViolation(f"unknown propagator class {name!r}")


CONTINUUM_FORM = {
    PropagatorClass.ORDINARY: "(p^2 + Omega^2 xt^2 + A)^-1, approximate",
    PropagatorClass.SELF_DUAL: "G_{m,n} = (m + n + A)^-1",
    PropagatorClass.COVARIANT: "(p^2 + Omega^2 xt^2 + 2 Omega xt^p)^-1, approximate",
    PropagatorClass.SELF_DUAL_COVARIANT: "G_{m,n} = (m + A)^-1",
}


@dataclass(frozen=True)
class PropagatorSpec:
    cls: PropagatorClass
    omega: float
    A: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "cls", PropagatorClass(self.cls))
        if self.A < 0:
            raise DomainError("A must be non-negative")
        if not 0 <= self.omega <= 1:
            raise DomainError("Omega must lie in [0, 1]")
        if self.cls in (PropagatorClass.SELF_DUAL, PropagatorClass.SELF_DUAL_COVARIANT):
            if self.omega != 1:
                raise DomainError(f"{self.cls.value} models sit at Omega = 1")
        elif not 0 < self.omega < 1:
            raise DomainError(f"{self.cls.value} models need 0 < Omega < 1")

    def to_dict(self) -> dict:
        return {"class": self.cls.value, "omega": self.omega, "A": self.A, "form": CONTINUUM_FORM[self.cls]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def classify(omega: float, covariant: bool) -> PropagatorClass:
    """Map the harmonic frequency and covariance flag to a model class."""
    if not 0 < omega <= 1:
        raise DomainError(f"Omega={omega} outside (0, 1]")
    if omega == 1:
        return PropagatorClass.SELF_DUAL_COVARIANT if covariant else PropagatorClass.SELF_DUAL
    return PropagatorClass.COVARIANT if covariant else PropagatorClass.ORDINARY


def kernel_value(spec: PropagatorSpec, m: int, n: int) -> float:
    if m < 0 or n < 0:
        raise DomainError("matrix indices are non-negative")
    if spec.cls is PropagatorClass.SELF_DUAL:
        denom = m + n + spec.A
    elif spec.cls is PropagatorClass.SELF_DUAL_COVARIANT:
        denom = m + spec.A
    else:
        raise NotImplementedError(
            f"{spec.cls.value} has no closed matrix-base kernel; only an approximate continuum form "
            f"{CONTINUUM_FORM[spec.cls]!r} is available"
        )
    if denom == 0:
        raise DomainError(f"kernel pole at m={m}, n={n}, A={spec.A}")
    return 1.0 / denom


def kernel_table(spec: PropagatorSpec, size: int) -> list[list[float]]:
    return [[kernel_value(spec, m, n) for n in range(size)] for m in range(size)]


def kernel_csv(spec: PropagatorSpec, size: int) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["m", "n", "G"])
    for m in range(size):
        for n in range(size):
            writer.writerow([m, n, repr(kernel_value(spec, m, n))])
    return buf.getvalue()
