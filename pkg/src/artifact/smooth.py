"""Smooth functions of line variables with exact mixed first-order partials.

A :class:`SmoothFunction` answers ``derivative(subset, x)``: the mixed
partial derivative with respect to the distinct line variables in
``subset`` evaluated at each row of ``x``. Since every function here is
smooth, the order of differentiation is immaterial.
"""

from __future__ import annotations

from typing import Callable, Iterator, Mapping, Sequence

import numpy as np

from .errors import ContractViolation


class SmoothFunction:
    n_lines: int

    def derivative(self, subset: tuple[int, ...], x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def value(self, x: np.ndarray) -> np.ndarray:
        return self.derivative((), x)

    def at_ones(self) -> float:
        return float(self.value(np.ones((1, self.n_lines)))[0])

    def _check(self, subset, x) -> np.ndarray:
        if len(set(subset)) != len(subset):
            raise ContractViolation("mixed partials are taken in distinct variables")
        if any(not 0 <= k < self.n_lines for k in subset):
            raise ContractViolation("line index out of range")
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if x.shape[1] != self.n_lines:
            raise ContractViolation(f"expected {self.n_lines} line values per point")
        return x


class PolynomialFunction(SmoothFunction):
    """Sum of monomials ``coeff * prod_l x_l**e_l``; keys are exponent tuples."""

    def __init__(self, n_lines: int, terms: Mapping[tuple[int, ...], float]):
        self.n_lines = n_lines
        self.terms = {}
        for exps, c in terms.items():
            if len(exps) != n_lines or min(exps, default=0) < 0:
                raise ContractViolation(f"bad exponent tuple {exps}")
            self.terms[tuple(exps)] = float(c)

    def derivative(self, subset, x):
        x = self._check(subset, x)
        out = np.zeros(x.shape[0])
        for exps, c in self.terms.items():
            e = np.array(exps)
            for k in subset:
                if e[k] == 0:
                    break
                c *= e[k]
                e[k] -= 1
            else:
                out += c * np.prod(x ** e, axis=1)
        return out


def _matchings(items: tuple[int, ...]) -> Iterator[tuple[list[tuple[int, int]], list[int]]]:
    """Partial matchings of ``items`` as (pairs, unmatched)."""
    if not items:
        yield [], []
        return
    first, rest = items[0], items[1:]
    for pairs, single in _matchings(rest):
        yield pairs, [first] + single
    for k, other in enumerate(rest):
        remaining = rest[:k] + rest[k + 1:]
        for pairs, single in _matchings(remaining):
            yield [(first, other)] + pairs, single


class ExpQuadraticFunction(SmoothFunction):
    """``exp(c + b.x + x.A.x / 2)`` with symmetric ``A``.

    With gradient ``g = b + A x``, the mixed partial over a set S of distinct
    variables is ``F * sum over partial matchings of S`` of the product of
    ``A`` over matched pairs and ``g`` over unmatched variables.
    """

    def __init__(self, b: Sequence[float], A: np.ndarray | None = None, c: float = 0.0):
        self.b = np.asarray(b, dtype=float)
        self.n_lines = self.b.size
        self.A = np.zeros((self.n_lines, self.n_lines)) if A is None else np.asarray(A, dtype=float)
        if self.A.shape != (self.n_lines, self.n_lines) or not np.allclose(self.A, self.A.T):
            raise ContractViolation("A must be a symmetric square matrix matching b")
        self.c = float(c)

    def derivative(self, subset, x):
        x = self._check(subset, x)
        xa = x @ self.A
        g = self.b + xa
        F = np.exp(self.c + x @ self.b + 0.5 * np.sum(xa * x, axis=1))
        if not subset:
            return F
        acc = np.zeros(x.shape[0])
        for pairs, single in _matchings(tuple(subset)):
            term = float(np.prod([self.A[i, j] for i, j in pairs])) if pairs else 1.0
            if term == 0.0:
                continue
            acc += term * (np.prod(g[:, single], axis=1) if single else 1.0)
        return F * acc


class SeparableFunction(SmoothFunction):
    """``prod_l f_l(x_l)`` from per-line pairs ``(f_l, f_l')``."""

    def __init__(self, factors: Sequence[tuple[Callable, Callable]]):
        self.factors = list(factors)
        self.n_lines = len(self.factors)

    def derivative(self, subset, x):
        x = self._check(subset, x)
        chosen = set(subset)
        out = np.ones(x.shape[0])
        for k, (f, df) in enumerate(self.factors):
            out = out * (df(x[:, k]) if k in chosen else f(x[:, k]))
        return out


class SumFunction(SmoothFunction):
    """Weighted sum of smooth functions over the same lines."""

    def __init__(self, parts: Sequence[tuple[float, SmoothFunction]]):
        self.parts = list(parts)
        sizes = {p.n_lines for _, p in self.parts}
        if len(sizes) != 1:
            raise ContractViolation("summands must share their line variables")
        self.n_lines = sizes.pop()

    def derivative(self, subset, x):
        return sum(w * p.derivative(subset, x) for w, p in self.parts)
