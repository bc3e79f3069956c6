import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from artifact.config import QuadratureConfig
from artifact.errors import ContractViolation, ResourceLimitError
from artifact.forest import (
    Forest,
    apply_forest_formula,
    check_positivity,
    count_forests,
    enumerate_forests,
    interpolate_weakening,
    lines,
)
from artifact.smooth import ExpQuadraticFunction, PolynomialFunction


def brute_forests(n):
    """Every acyclic edge subset of K_n, checked by union-find."""
    out = []
    all_lines = lines(n)
    for r in range(len(all_lines) + 1):
        for subset in itertools.combinations(all_lines, r):
            parent = list(range(n + 1))

            def find(x):
                while parent[x] != x:
                    x = parent[x]
                return x

            ok = True
            for i, j in subset:
                a, b = find(i), find(j)
                if a == b:
                    ok = False
                    break
                parent[a] = b
            if ok:
                out.append(tuple(sorted(subset)))
    return sorted(out)


def brute_tree_count(n):
    return sum(1 for f in brute_forests(n) if len(f) == n - 1)


@pytest.mark.parametrize("n", range(1, 6))
def test_forest_enumeration_matches_brute_force(n):
    assert [f.edges for f in enumerate_forests(n)] == brute_forests(n)


def test_forest_counts():
    assert [count_forests(n) for n in range(1, 7)] == [1, 2, 7, 38, 291, 2932]


@pytest.mark.parametrize("n", range(1, 6))
def test_tree_count_cross_checked(n):
    assert len(enumerate_forests(n, trees_only=True)) == brute_tree_count(n) == max(1, n ** (n - 2))


def test_n3_forest_list():
    fs = enumerate_forests(3)
    assert len(fs) == 7
    assert ((1, 2), (1, 3), (2, 3)) not in [f.edges for f in fs]


def test_cap_is_enforced():
    with pytest.raises(ResourceLimitError) as exc:
        enumerate_forests(10)
    assert exc.value.cap == 9


def test_cycle_rejected():
    with pytest.raises(ContractViolation):
        Forest(3, ((1, 2), (2, 3), (1, 3)))


def test_interpolation_examples():
    assert interpolate_weakening(Forest(2), []).entries[0, 1] == 0
    assert interpolate_weakening(Forest(2, ((1, 2),)), {(1, 2): 0.7}).entries[0, 1] == 0.7
    m = interpolate_weakening(Forest(3, ((1, 2), (2, 3))), {(1, 2): 0.3, (2, 3): 0.8}).entries
    assert (m[0, 1], m[1, 2], m[0, 2]) == (0.3, 0.8, 0.3)
    assert np.all(np.diag(m) == 1)


def test_weakening_domain_mismatch():
    with pytest.raises(ContractViolation):
        interpolate_weakening(Forest(3, ((1, 2),)), {(2, 3): 0.5})


def test_positivity_examples():
    assert check_positivity(np.eye(3)) == pytest.approx(1.0)
    m = interpolate_weakening(Forest(3, ((1, 2),)), [0.5])
    assert check_positivity(m) == pytest.approx(0.5, abs=1e-14)
    with pytest.raises(ContractViolation):
        check_positivity(np.array([[1.0, 0.2], [0.3, 1.0]]))


@st.composite
def forests_with_weights(draw, max_n=8):
    n = draw(st.integers(1, max_n))
    # random forest: attach each vertex to an earlier one or leave it a root
    edges = []
    perm = draw(st.permutations(range(1, n + 1)))
    for k in range(1, n):
        parent = draw(st.one_of(st.none(), st.integers(0, k - 1)))
        if parent is not None:
            edges.append((perm[parent], perm[k]))
    f = Forest(n, tuple(edges))
    w = draw(st.lists(st.floats(0, 1), min_size=len(f.edges), max_size=len(f.edges)))
    return f, w


@settings(max_examples=200, deadline=None)
@given(forests_with_weights())
def test_interpolated_matrix_invariants(fw):
    f, w = fw
    m = interpolate_weakening(f, w).entries
    assert np.allclose(m, m.T)
    assert np.all(np.diag(m) == 1)
    off = m[~np.eye(f.n, dtype=bool)]
    assert np.all((off >= 0) & (off <= 1))
    assert check_positivity(m) >= -1e-12


@settings(max_examples=100, deadline=None)
@given(forests_with_weights(max_n=6), st.data())
def test_interpolation_monotone(fw, data):
    f, w = fw
    if not w:
        return
    k = data.draw(st.integers(0, len(w) - 1))
    bump = data.draw(st.floats(w[k], 1))
    raised = list(w)
    raised[k] = bump
    assert np.all(interpolate_weakening(f, raised).entries >= interpolate_weakening(f, w).entries)


def test_forest_formula_small_examples():
    lin = PolynomialFunction(1, {(1,): 1.0})
    assert apply_forest_formula(lin, 2) == pytest.approx(1.0, abs=1e-12)
    assert apply_forest_formula(ExpQuadraticFunction([1.0]), 2) == pytest.approx(math.e, abs=1e-8)
    assert apply_forest_formula(ExpQuadraticFunction([1.0, 1.0, 1.0]), 3) == pytest.approx(math.exp(3), abs=1e-6)


@settings(max_examples=15, deadline=None)
@given(st.integers(2, 4), st.integers(0, 2**32 - 1))
def test_forest_formula_random_exponentials(n, seed):
    L = n * (n - 1) // 2
    b = np.random.default_rng(seed).uniform(-1, 1, L) / L
    F = ExpQuadraticFunction(b)
    assert apply_forest_formula(F, n, QuadratureConfig()) == pytest.approx(F.at_ones(), abs=1e-7)


def test_forest_json_roundtrip():
    f = Forest(4, ((1, 2), (3, 4)))
    assert Forest.from_dict(f.to_dict()) == f
