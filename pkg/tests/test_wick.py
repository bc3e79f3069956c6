import math
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from artifact.errors import ContractViolation, ResourceLimitError, StructureError
from artifact.ribbon import graph_from_perm, invariants
from artifact.series import PolynomialInN, SeriesInN
from artifact.wick import (
    GaussianSpec,
    delta_classes,
    genus_split,
    log_z_series,
    pairing_histogram,
    vertex_word,
    wick_moment,
    z_series,
)

N2 = PolynomialInN.monomial(2)


def test_moment_examples():
    assert wick_moment("") == 1
    assert wick_moment("DP") == N2
    assert wick_moment("DPDP") == PolynomialInN.monomial(3, 2)


def test_unbalanced_word():
    with pytest.raises(ContractViolation):
        wick_moment("PPD")


def test_hermitian_catalan():
    herm = GaussianSpec("hermitian")
    for p, cat in enumerate([1, 2, 5, 14], start=1):
        assert wick_moment("S" * (2 * p), herm)[p + 1] == cat


def test_hermitian_odd_moment_vanishes():
    assert wick_moment("SSS", GaussianSpec("hermitian")).is_zero()


@settings(max_examples=40, deadline=None)
@given(st.lists(st.sampled_from("PD"), min_size=0, max_size=6).filter(lambda w: w.count("P") == w.count("D")), st.integers(0, 5))
def test_moment_cyclic_invariance(letters, shift):
    word = "".join(letters)
    if not word:
        return
    k = shift % len(word)
    assert wick_moment(word) == wick_moment(word[k:] + word[:k])


def _set_partitions(items):
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in _set_partitions(rest):
        for k in range(len(part)):
            yield part[:k] + [[first] + part[k]] + part[k + 1:]
        yield [[first]] + part


def _moebius_log_series(max_order):
    """Cumulants of Tr(Phi^dag Phi Phi^dag Phi) from raw moments by Moebius inversion."""
    moments = {k: wick_moment(vertex_word(k)) for k in range(1, max_order + 1)}
    coeffs = {0: PolynomialInN()}
    for k in range(1, max_order + 1):
        kappa = PolynomialInN()
        for part in _set_partitions(list(range(k))):
            b = len(part)
            term = PolynomialInN.constant((-1) ** (b - 1) * math.factorial(b - 1))
            for block in part:
                term = term * moments[len(block)]
            kappa = kappa + term
        # (-lambda/N)^k / k!
        coeffs[k] = kappa * PolynomialInN.monomial(-k, Fraction((-1) ** k, math.factorial(k)))
    return SeriesInN(coeffs, max_order)


def test_log_series_matches_moebius_oracle():
    assert log_z_series(4) == _moebius_log_series(4)


def test_known_coefficients(log_series5):
    s = log_series5
    assert s[0].is_zero()
    assert s[1] == PolynomialInN({2: -2})
    assert s[2] == PolynomialInN({2: 9, 0: 1})
    assert s[3] == PolynomialInN({2: -72, 0: Fraction(-80, 3)})


def test_cumulant_consistency():
    assert log_z_series(4).exp() == z_series(4)
    assert z_series(4).log() == log_z_series(4)


def test_order_two_pairing_census():
    hist = pairing_histogram(2)
    assert sum(hist.values()) == 24
    assert sum(c for (f, conn), c in hist.items() if conn) == 20
    assert {f for (f, conn) in hist if conn} == {2, 4}


def test_order_cap():
    with pytest.raises(ResourceLimitError):
        log_z_series(6)


def test_hermitian_kind_rejected_for_series():
    with pytest.raises(ContractViolation):
        log_z_series(2, GaussianSpec("hermitian"))


@pytest.mark.parametrize("n", [1, 2])
def test_delta_classes_match_faces(n):
    import itertools

    for perm in itertools.permutations(range(2 * n)):
        assert delta_classes(n, perm) == invariants(graph_from_perm(n, perm)).F


def test_genus_split_examples(log_series5):
    assert genus_split(SeriesInN({}, 0)) == {}
    split = genus_split(log_series5.truncate(2))
    assert split == {0: {1: -2, 2: 9}, 1: {2: 1}}
    assert set(genus_split(log_series5)) <= {0, 1, 2}


def test_genus_split_rejects_odd_power():
    with pytest.raises(StructureError):
        genus_split(SeriesInN({1: PolynomialInN({1: 3})}, 1))


@settings(max_examples=20, deadline=None)
@given(st.integers(1, 6))
def test_planar_c1_independent_of_N(N):
    assert log_z_series(1)[1].evaluate(N) / N**2 == -2
