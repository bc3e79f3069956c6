import math
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from artifact.errors import ContractViolation
from artifact.lve import LoopVertexModel, sigma_z
from artifact.oracle import (
    McConfig,
    QuadratureConfig,
    compare_series,
    log_z_reference,
    z_closed_form_n1,
    z_reference,
)
from artifact.series import PolynomialInN, SeriesInN
from artifact.wick import log_z_series

Q = QuadratureConfig(abs_tol=1e-12, rel_tol=1e-12)


@pytest.mark.parametrize("cfg", [QuadratureConfig(), McConfig(seed=1, samples=10_000)])
@pytest.mark.parametrize("N", [1, 2, 3])
def test_free_normalisation(cfg, N):
    if isinstance(cfg, QuadratureConfig) and N != 1:
        return
    est = z_reference(0.0, N, cfg)
    assert (est.value, est.error) == (1.0, 0.0)


def test_lambda_one_value():
    est = z_reference(1.0, 1, Q)
    closed = math.exp(0.25) * math.sqrt(math.pi) / 2 * math.erfc(0.5)
    assert est.value == pytest.approx(closed, abs=1e-12)
    assert z_closed_form_n1(1.0) == pytest.approx(closed, abs=1e-14)
    assert round(closed, 6) == 0.545641


@settings(max_examples=40, deadline=None)
@given(st.floats(1e-3, 20))
def test_closed_form_matches_radial_quadrature(lam):
    assert z_reference(lam, 1, Q).value == pytest.approx(z_closed_form_n1(lam), abs=1e-11)


@pytest.mark.parametrize("lam", [0.1, 0.5])
def test_quadrature_and_monte_carlo_agree(lam):
    q = z_reference(lam, 1, Q)
    mc = z_reference(lam, 1, McConfig(seed=7, samples=100_000))
    assert abs(q.value - mc.value) <= 4 * math.hypot(q.error, mc.error)


def test_monotone_in_lambda_quadrature():
    grid = [0.0, 0.01, 0.05, 0.1, 0.3, 1.0, 3.0]
    vals = [z_reference(lam, 1, Q).value for lam in grid]
    assert all(a > b for a, b in zip(vals, vals[1:]))


@pytest.mark.parametrize("N", [2, 3])
def test_monotone_in_lambda_monte_carlo(N):
    # common random numbers: every sample weight decreases in lambda
    cfg = McConfig(seed=3, samples=10_000)
    vals = [z_reference(lam, N, cfg).value for lam in (0.0, 0.05, 0.2, 1.0)]
    assert all(a > b for a, b in zip(vals, vals[1:]))


def test_same_seed_same_estimate():
    cfg = McConfig(seed=11, samples=30_000)
    assert z_reference(0.2, 2, cfg) == z_reference(0.2, 2, cfg)


def test_backend_limits():
    with pytest.raises(ContractViolation):
        z_reference(0.1, 2, QuadratureConfig())
    with pytest.raises(ContractViolation):
        z_reference(0.1, 4, McConfig())
    with pytest.raises(ContractViolation):
        z_reference(-0.1, 1)


def test_log_reference():
    assert log_z_reference(1.0, 1, Q).value == pytest.approx(math.log(z_closed_form_n1(1.0)), abs=1e-12)


@pytest.mark.xfail(
    strict=True,
    reason="the order-4 truncation at N=2, lambda=0.05 is 0.7232 while Z is 0.7167; "
    "the gap is about ten standard errors at 1e5 samples",
)
def test_n2_monte_carlo_against_order_four_truncation():
    trunc = math.exp(log_z_series(4).evaluate(0.05, 2))
    mc = z_reference(0.05, 2, McConfig(seed=0, samples=100_000))
    assert abs(mc.value - trunc) <= 3 * mc.error


def test_n2_monte_carlo_against_sigma_quadrature():
    exact = sigma_z(LoopVertexModel(2, 0.05), QuadratureConfig(abs_tol=1e-11))
    mc = z_reference(0.05, 2, McConfig(seed=0, samples=100_000))
    assert abs(mc.value - exact.value) <= 3 * mc.error
    # the truncated series sits well outside the Monte Carlo band
    trunc = math.exp(log_z_series(4).evaluate(0.05, 2))
    assert abs(trunc - exact.value) > 5 * mc.error


def test_compare_identical():
    s = log_z_series(2)
    rep = compare_series(s, s, 2)
    assert rep.equal and rep.first_divergence is None
    assert "equal through order 2" in rep.table()


def test_compare_names_first_divergence():
    a = log_z_series(3)
    coeffs = {k: a[k] for k in a.orders()}
    coeffs[3] = a[3] + PolynomialInN.constant(1)
    rep = compare_series(a, SeriesInN(coeffs, 3), 3)
    k, p, x, y = rep.first_divergence
    assert (k, p) == (3, 0)
    assert (x, y) == (Fraction(-80, 3), Fraction(-77, 3))
    assert rep.to_dict()["first_divergence"]["order"] == 3


def test_compare_requires_both_orders():
    with pytest.raises(ContractViolation):
        compare_series(log_z_series(2), log_z_series(3), 3)
