from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from artifact.errors import ContractViolation
from artifact.series import PolynomialInN, SeriesInN

fractions = st.builds(Fraction, st.integers(-99, 99), st.integers(1, 20))
polys = st.dictionaries(st.integers(-3, 3), fractions, max_size=4).map(PolynomialInN)


@st.composite
def series(draw, constant=None):
    order = draw(st.integers(0, 4))
    cs = [draw(polys) for _ in range(order + 1)]
    if constant is not None:
        cs[0] = PolynomialInN.constant(constant)
    return SeriesInN(cs, order)


def test_floats_rejected():
    with pytest.raises(ContractViolation):
        PolynomialInN({2: 0.5})


def test_pretty():
    assert PolynomialInN({2: -2}).pretty() == "-2·N^2"
    assert PolynomialInN({2: 9, 0: 1}).pretty() == "9·N^2 + 1"
    assert PolynomialInN({1: 1, -2: Fraction(-1, 3)}).pretty() == "N - 1/3·N^-2"
    assert PolynomialInN().pretty() == "0"


def test_evaluate_exact_and_float():
    p = PolynomialInN({2: 9, 0: 1})
    assert p.evaluate(2) == 37
    assert p.evaluate(2.0) == 37.0


def test_csv_layout():
    s = SeriesInN([PolynomialInN(), PolynomialInN({2: -2})])
    assert s.to_csv().splitlines() == ["order,N_power,coefficient", "1,2,-2/1"]


@settings(max_examples=60, deadline=None)
@given(polys, polys, polys)
def test_polynomial_ring_laws(a, b, c):
    assert a + b == b + a
    assert a * (b + c) == a * b + a * c
    assert (a - a).is_zero()


@settings(max_examples=60, deadline=None)
@given(polys)
def test_polynomial_json_roundtrip(p):
    assert PolynomialInN.from_dict(p.to_dict()) == p


@settings(max_examples=60, deadline=None)
@given(series())
def test_series_json_roundtrip(s):
    assert SeriesInN.from_json(s.to_json()) == s


@settings(max_examples=60, deadline=None)
@given(series(constant=0))
def test_exp_log_inverse(s):
    assert s.exp().log() == s


@settings(max_examples=60, deadline=None)
@given(series(constant=0), series(constant=0))
def test_exp_turns_sums_into_products(a, b):
    assert (a + b).exp() == a.exp() * b.exp()


def test_truncation_guards():
    s = SeriesInN([PolynomialInN.constant(1)] * 3)
    assert s.truncate(1).max_order == 1
    with pytest.raises(ContractViolation):
        s.truncate(5)
    with pytest.raises(ContractViolation):
        s[4]
