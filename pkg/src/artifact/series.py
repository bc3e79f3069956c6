"""Exact Laurent polynomials in N and power series in the coupling.

Coefficients are :class:`fractions.Fraction`; floats are rejected at the
door so no rounding can creep into the perturbative bookkeeping.
"""

from __future__ import annotations

import csv
import io
import json
from fractions import Fraction
from numbers import Rational
from typing import Iterable, Mapping

from .errors import ContractViolation


def _exact(c) -> Fraction:
    if isinstance(c, bool) or not isinstance(c, (int, Rational, str)):
        raise ContractViolation(f"exact coefficient required, got {type(c).__name__}")
    return Fraction(c)


class PolynomialInN:
    """Finite map ``power -> Fraction``; negative powers are allowed."""

    __slots__ = ("_c",)

    def __init__(self, coeffs: Mapping[int, object] | None = None):
        c = {}
        for p, v in (coeffs or {}).items():
            if not isinstance(p, int) or isinstance(p, bool):
                raise ContractViolation("powers of N must be integers")
            v = _exact(v)
            if v:
                c[p] = c.get(p, Fraction(0)) + v
        self._c = {p: v for p, v in sorted(c.items()) if v}

    @classmethod
    def constant(cls, c) -> "PolynomialInN":
        return cls({0: c})

    @classmethod
    def monomial(cls, power: int, c=1) -> "PolynomialInN":
        return cls({power: c})

    @property
    def coeffs(self) -> dict[int, Fraction]:
        return dict(self._c)

    def powers(self) -> list[int]:
        return list(self._c)

    def __getitem__(self, power: int) -> Fraction:
        return self._c.get(power, Fraction(0))

    def is_zero(self) -> bool:
        return not self._c

    def __bool__(self):
        return bool(self._c)

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = PolynomialInN.constant(other)
        if not isinstance(other, PolynomialInN):
            return NotImplemented
        return self._c == other._c

    def __hash__(self):
        return hash(tuple(self._c.items()))

    def _coerce(self, other) -> "PolynomialInN":
        if isinstance(other, PolynomialInN):
            return other
        return PolynomialInN.constant(other)

    def __add__(self, other):
        other = self._coerce(other)
        out = dict(self._c)
        for p, v in other._c.items():
            out[p] = out.get(p, Fraction(0)) + v
        return PolynomialInN(out)

    __radd__ = __add__

    def __neg__(self):
        return PolynomialInN({p: -v for p, v in self._c.items()})

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        other = self._coerce(other)
        out: dict[int, Fraction] = {}
        for p, v in self._c.items():
            for q, u in other._c.items():
                out[p + q] = out.get(p + q, Fraction(0)) + v * u
        return PolynomialInN(out)

    __rmul__ = __mul__

    def scale(self, c) -> "PolynomialInN":
        c = _exact(c)
        return PolynomialInN({p: v * c for p, v in self._c.items()})

    def shift(self, k: int) -> "PolynomialInN":
        """Multiply by ``N**k``."""
        return PolynomialInN({p + k: v for p, v in self._c.items()})

    def evaluate(self, N) -> Fraction | float:
        if isinstance(N, (int, Fraction)):
            N = Fraction(N)
            if N == 0 and any(p < 0 for p in self._c):
                raise ZeroDivisionError("negative power of N at N = 0")
            return sum((v * N**p for p, v in self._c.items()), Fraction(0))
        return float(sum(float(v) * float(N) ** p for p, v in self._c.items()))

    def pretty(self) -> str:
        if not self._c:
            return "0"
        parts = []
        for p, v in sorted(self._c.items(), reverse=True):
            mag = abs(v)
            sign = "-" if v < 0 else "+"
            coef = str(mag)
            if p == 0:
                body = coef
            else:
                mono = "N" if p == 1 else f"N^{p}"
                body = mono if mag == 1 else f"{coef}·{mono}"
            parts.append((sign, body))
        first_sign, first = parts[0]
        text = ("-" if first_sign == "-" else "") + first
        for sign, body in parts[1:]:
            text += f" {sign} {body}"
        return text

    def __repr__(self):
        return f"PolynomialInN({self.pretty()})"

    def to_dict(self) -> dict[str, str]:
        return {str(p): f"{v.numerator}/{v.denominator}" for p, v in self._c.items()}

    @classmethod
    def from_dict(cls, d: Mapping[str, str]) -> "PolynomialInN":
        return cls({int(p): Fraction(v) for p, v in d.items()})


class SeriesInN:
    """Truncated power series ``sum_k c_k lambda^k`` with ``c_k`` a PolynomialInN."""

    def __init__(self, coeffs: Mapping[int, PolynomialInN] | Iterable[PolynomialInN], max_order: int | None = None):
        if not isinstance(coeffs, Mapping):
            coeffs = dict(enumerate(coeffs))
        if any(k < 0 for k in coeffs):
            raise ContractViolation("series orders are non-negative")
        top = max(coeffs, default=0)
        self.max_order = top if max_order is None else max_order
        if top > self.max_order:
            raise ContractViolation("coefficient beyond the declared truncation order")
        self._c = {k: coeffs.get(k, PolynomialInN()) for k in range(self.max_order + 1)}
        for k, v in self._c.items():
            if not isinstance(v, PolynomialInN):
                self._c[k] = PolynomialInN.constant(v)

    def __getitem__(self, k: int) -> PolynomialInN:
        if k > self.max_order:
            raise ContractViolation(f"order {k} beyond truncation {self.max_order}")
        return self._c[k]

    def orders(self) -> range:
        return range(self.max_order + 1)

    def __eq__(self, other):
        if not isinstance(other, SeriesInN):
            return NotImplemented
        return self.max_order == other.max_order and self._c == other._c

    def truncate(self, order: int) -> "SeriesInN":
        if order > self.max_order:
            raise ContractViolation("cannot extend a truncated series")
        return SeriesInN({k: self._c[k] for k in range(order + 1)}, order)

    def __add__(self, other: "SeriesInN") -> "SeriesInN":
        m = min(self.max_order, other.max_order)
        return SeriesInN({k: self._c[k] + other._c[k] for k in range(m + 1)}, m)

    def __sub__(self, other: "SeriesInN") -> "SeriesInN":
        m = min(self.max_order, other.max_order)
        return SeriesInN({k: self._c[k] - other._c[k] for k in range(m + 1)}, m)

    def __mul__(self, other: "SeriesInN") -> "SeriesInN":
        m = min(self.max_order, other.max_order)
        out = {}
        for k in range(m + 1):
            acc = PolynomialInN()
            for j in range(k + 1):
                acc = acc + self._c[j] * other._c[k - j]
            out[k] = acc
        return SeriesInN(out, m)

    def exp(self) -> "SeriesInN":
        """exp of a series with vanishing constant term."""
        if self._c[0]:
            raise ContractViolation("exp needs a zero constant term")
        # e' = s' e  =>  k e_k = sum_j j s_j e_{k-j}
        e = {0: PolynomialInN.constant(1)}
        for k in range(1, self.max_order + 1):
            acc = PolynomialInN()
            for j in range(1, k + 1):
                acc = acc + (self._c[j] * e[k - j]).scale(j)
            e[k] = acc.scale(Fraction(1, k))
        return SeriesInN(e, self.max_order)

    def log(self) -> "SeriesInN":
        """log of a series with constant term exactly 1."""
        if self._c[0] != PolynomialInN.constant(1):
            raise ContractViolation("log needs constant term 1")
        # s' = z'/z  =>  k s_k = k z_k - sum_{j<k} j s_j z_{k-j}
        s = {0: PolynomialInN()}
        for k in range(1, self.max_order + 1):
            acc = self._c[k].scale(k)
            for j in range(1, k):
                acc = acc - (s[j] * self._c[k - j]).scale(j)
            s[k] = acc.scale(Fraction(1, k))
        return SeriesInN(s, self.max_order)

    def evaluate(self, lam, N):
        """Value of the truncated series at coupling ``lam`` and size ``N``."""
        if isinstance(lam, (int, Fraction)) and isinstance(N, (int, Fraction)):
            return sum((self._c[k].evaluate(N) * Fraction(lam) ** k for k in self.orders()), Fraction(0))
        return float(sum(float(self._c[k].evaluate(float(N))) * float(lam) ** k for k in self.orders()))

    def at_N(self, N: int) -> list[Fraction]:
        return [self._c[k].evaluate(Fraction(N)) for k in self.orders()]

    def pretty(self) -> str:
        return "\n".join(f"order {k}: {self._c[k].pretty()}" for k in self.orders())

    def __repr__(self):
        return f"SeriesInN(max_order={self.max_order}, {[self._c[k].pretty() for k in self.orders()]})"

    def to_dict(self) -> dict:
        return {
            "max_order": self.max_order,
            "coefficients": {str(k): self._c[k].to_dict() for k in self.orders()},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d: Mapping) -> "SeriesInN":
        coeffs = {int(k): PolynomialInN.from_dict(v) for k, v in d["coefficients"].items()}
        return cls(coeffs, int(d["max_order"]))

    @classmethod
    def from_json(cls, text: str) -> "SeriesInN":
        return cls.from_dict(json.loads(text))

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["order", "N_power", "coefficient"])
        for k in self.orders():
            for p, v in self._c[k].coeffs.items():
                writer.writerow([k, p, f"{v.numerator}/{v.denominator}"])
        return buf.getvalue()
