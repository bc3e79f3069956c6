from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from artifact.errors import DomainError
from artifact.propagator import (
    PropagatorClass,
    PropagatorSpec,
    classify,
    kernel_csv,
    kernel_table,
    kernel_value,
)

SD = PropagatorClass.SELF_DUAL
SDC = PropagatorClass.SELF_DUAL_COVARIANT
idx = st.integers(0, 200)
consts = st.floats(0.01, 50)


def test_kernel_examples():
    assert kernel_value(PropagatorSpec(SD, 1, 2), 1, 3) == pytest.approx(1 / 6, abs=0)
    assert kernel_value(PropagatorSpec(SDC, 1, 1), 4, 7) == 1 / 5
    assert kernel_value(PropagatorSpec(SD, 1, 1), 0, 0) == 1


def test_classification():
    assert classify(0.5, False) is PropagatorClass.ORDINARY
    assert classify(1, False) is SD
    assert classify(0.5, True) is PropagatorClass.COVARIANT
    assert classify(1, True) is SDC
    for bad in (0, 1.5, -0.2):
        with pytest.raises(DomainError):
            classify(bad, False)


def test_unsupported_classes():
    for cls in (PropagatorClass.ORDINARY, PropagatorClass.COVARIANT):
        with pytest.raises(NotImplementedError, match="roughly|approximate"):
            kernel_value(PropagatorSpec(cls, 0.5, 1), 1, 1)


def test_spec_validation():
    with pytest.raises(DomainError):
        PropagatorSpec(SD, 0.5, 1)
    with pytest.raises(DomainError):
        PropagatorSpec(PropagatorClass.ORDINARY, 1, 1)
    with pytest.raises(DomainError):
        PropagatorSpec(SD, 1, -1)


def test_pole():
    with pytest.raises(DomainError):
        kernel_value(PropagatorSpec(SD, 1, 0), 0, 0)


@given(idx, idx, consts)
def test_self_dual_symmetric(m, n, A):
    spec = PropagatorSpec(SD, 1, A)
    assert kernel_value(spec, m, n) == kernel_value(spec, n, m)


@given(idx, idx, consts)
def test_self_dual_decreasing(m, n, A):
    spec = PropagatorSpec(SD, 1, A)
    assert kernel_value(spec, m + 1, n) < kernel_value(spec, m, n)


@given(idx, idx, idx, consts)
def test_covariant_kernel_one_index(m, n, k, A):
    spec = PropagatorSpec(SDC, 1, A)
    assert kernel_value(spec, m, n) == kernel_value(spec, m, k)
    assert kernel_value(spec, m + 1, n) < kernel_value(spec, m, n)


def test_table_and_csv():
    spec = PropagatorSpec(SD, 1, 1)
    table = kernel_table(spec, 3)
    assert table[1][2] == 1 / 4
    assert kernel_csv(spec, 2).splitlines()[0].startswith("m,n")
    assert PropagatorClass.parse("self_dual_covariant") is SDC
