"""Closed-form smooth functions of n(n-1)/2 line variables for forest-formula checks."""

from __future__ import annotations

import itertools

import numpy as np

from artifact.smooth import (
    ExpQuadraticFunction,
    PolynomialFunction,
    SeparableFunction,
    SumFunction,
)


def _unit(L, k):
    e = [0] * L
    for i in k:
        e[i] += 1
    return tuple(e)


def _psd(L, seed):
    rng = np.random.default_rng(seed)
    B = rng.normal(size=(L, L))
    return B @ B.T / L**2


def battery(L: int) -> dict[str, object]:
    """Ten test functions on L line variables, scaled so F(1,...,1) is O(1)."""
    alt = np.array([(-1) ** k * (0.5 + k / (2 * L)) for k in range(L)])
    quad_terms: dict = {}
    for i, j in itertools.product(range(L), repeat=2):
        key = _unit(L, (i, j))
        quad_terms[key] = quad_terms.get(key, 0.0) + 1.0 / L**2
    cubic_terms = {_unit(L, (k,)): 0.5 / L for k in range(L)}
    for k in range(L):
        key = _unit(L, (k, (k + 1) % L, (k + 2) % L))
        cubic_terms[key] = cubic_terms.get(key, 0.0) + 1.0 / L
    for k in range(L):
        key = _unit(L, (k, k, k))
        cubic_terms[key] = cubic_terms.get(key, 0.0) - 0.25 / L
    return {
        "linear": PolynomialFunction(L, {_unit(L, (k,)): (k + 1) / L for k in range(L)}),
        "square_of_mean": PolynomialFunction(L, quad_terms),
        "cubic": PolynomialFunction(L, cubic_terms),
        "exp_mean": ExpQuadraticFunction(np.full(L, 1.0 / L)),
        "exp_alternating": ExpQuadraticFunction(alt / L),
        "exp_psd_quadratic": ExpQuadraticFunction(np.full(L, 0.2 / L), _psd(L, 1)),
        "gaussian_psd": ExpQuadraticFunction(np.zeros(L), -_psd(L, 2)),
        "cos_product": SeparableFunction([(lambda t: np.cos(t / 2), lambda t: -0.5 * np.sin(t / 2))] * L),
        "rational_product": SeparableFunction(
            [(lambda t: 1.0 / (1.0 + t / (3 * L)), lambda t: -1.0 / (3 * L) / (1.0 + t / (3 * L)) ** 2)] * L
        ),
        "mixed_sum": SumFunction(
            [
                (0.5, ExpQuadraticFunction(np.linspace(-1.0, 1.0, L) / L, c=0.1)),
                (0.5, PolynomialFunction(L, cubic_terms)),
            ]
        ),
    }
