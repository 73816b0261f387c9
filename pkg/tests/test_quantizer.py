import math

import pytest
from hypothesis import given, strategies as st

from qconsensus.quantizer import Quantizer, bits_per_symbol, quantize


@pytest.mark.parametrize("K,v,q", [
    (1, 0.3, 0), (5, -0.3, 0), (2, 0.5, 1), (2, 1.49, 1), (2, 1.5, 2), (3, 10, 3), (1, -0.7, -1),
    (2, -0.5, -1), (2, -1.5, -2), (10, 9.49, 9), (10, 9.5, 10),
])
def test_examples(K, v, q):
    assert quantize(Quantizer(K), v) == q


@pytest.mark.parametrize("K,bits", [(1, 1), (2, 2), (3, 3), (4, 3), (10, 5), (16, 5), (17, 6)])
def test_bits(K, bits):
    assert bits_per_symbol(Quantizer(K)) == bits == math.ceil(math.log2(2 * K))


def test_invalid():
    with pytest.raises(ValueError):
        Quantizer(0)
    with pytest.raises(ValueError):
        quantize(Quantizer(2), float("nan"))
    with pytest.raises(ValueError):
        quantize(Quantizer(2), float("inf"))


def test_saturation_flag():
    qz = Quantizer(2)
    assert not qz.is_saturated(2.5) and qz.is_saturated(2.5000001) and qz.is_saturated(-3)
    assert qz.levels == 5


@given(st.integers(1, 20), st.floats(-100, 100, allow_nan=False))
def test_odd_and_bounded(K, v):
    qz = Quantizer(K)
    q = quantize(qz, v)
    assert quantize(qz, -v) == -q
    assert abs(q) <= K
    if abs(v) <= K + 0.5:
        assert abs(v - q) <= 0.5
