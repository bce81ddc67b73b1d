import itertools
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from ocbsim.photonics import (ArmState, DeviceError, MRDevice, QuantCode, accumulate, arm_mac,
                              assign_wavelengths, cbc_quantize, cbc_thresholds, default_requant_scale,
                              ldu_intensity, mr_resonance, relu_requantize, segmented_dot,
                              weight_code_range)


def dot(w, a):
    return sum(x * y for x, y in zip(w, a))


def test_mr_resonance_examples():
    assert mr_resonance(1.0, 1.0, 1) == 1.0
    assert math.isclose(mr_resonance(2.0, 3.1e-6, 4), 1.55e-6, rel_tol=1e-12)
    assert math.isclose(mr_resonance(1.5, 2e-6, 6), mr_resonance(1.5, 2e-6, 3) / 2)


@pytest.mark.parametrize("args", [(0, 1, 1), (1, -1, 1), (1, 1, 0), (float("nan"), 1, 1)])
def test_mr_resonance_domain(args):
    with pytest.raises(DeviceError):
        mr_resonance(*args)


def test_mr_device_weight_range():
    MRDevice(2.0, 1e-5, 10, weight_code=-8, weight_bits=4)
    with pytest.raises(DeviceError):
        MRDevice(2.0, 1e-5, 10, weight_code=8, weight_bits=4)
    with pytest.raises(DeviceError):
        MRDevice(2.0, 1e-5, 0)


def test_weight_code_range():
    assert weight_code_range(4) == (-8, 7)
    assert weight_code_range(2) == (-2, 1)
    assert weight_code_range(1) == (-1, 1)


def test_assign_wavelengths_examples():
    assert assign_wavelengths(9, 9) == {i: i for i in range(9)}
    assert sorted(assign_wavelengths(5, 9).values()) == [0, 1, 2, 3, 4]
    with pytest.raises(DeviceError):
        assign_wavelengths(10, 9)


@given(st.integers(0, 64), st.integers(0, 64))
def test_assign_wavelengths_distinct(slots, channels):
    if slots > channels:
        with pytest.raises(DeviceError):
            assign_wavelengths(slots, channels)
    else:
        chans = list(assign_wavelengths(slots, channels).values())
        assert len(set(chans)) == len(chans) == slots
        assert all(0 <= c < channels for c in chans)


def test_arm_state_rejects_shared_channel():
    mr = MRDevice(2.0, 1e-5, 10)
    with pytest.raises(DeviceError):
        ArmState([mr, mr], {0: 3, 1: 3})
    ArmState([mr, None, mr], {0: 0, 2: 1})


def test_cbc_examples():
    assert cbc_quantize(0.0, 0.0, 1.0).code == 0
    assert cbc_quantize(1.0, 0.0, 1.0).code == 15
    assert cbc_quantize(7.0, 0.0, 1.0).code == 15
    assert cbc_quantize(0.5, 0.0, 1.0).code == 8
    assert cbc_quantize((-1.0 + 1.6) / 2, -1.0, 1.6).code == 8
    assert cbc_quantize(-1.0 + 2.6 / 16 * 8 - 1e-9, -1.0, 1.6).code == 7


@pytest.mark.parametrize("args", [(0.5, 1.0, 1.0), (0.5, 1.0, 0.0), (float("inf"), 0.0, 1.0)])
def test_cbc_domain(args):
    with pytest.raises(DeviceError):
        cbc_quantize(*args)


def test_cbc_thresholds_uniform():
    t = cbc_thresholds(0.0, 1.6)
    assert len(t) == 15
    assert np.allclose(np.diff(t), 0.1)


@given(st.floats(-10, 10), st.floats(-10, 10), st.floats(1e-3, 10))
def test_cbc_monotone(v1, v2, span):
    lo, hi = sorted((v1, v2))
    a, b = cbc_quantize(lo, -1.0, -1.0 + span), cbc_quantize(hi, -1.0, -1.0 + span)
    assert a.code <= b.code
    assert ldu_intensity(a) <= ldu_intensity(b)


def test_cbc_surjective():
    codes = {cbc_quantize(v, 0.0, 1.0).code for v in np.linspace(0.0, 1.0, 1601)}
    assert codes == set(range(16))


def test_ldu_examples():
    assert ldu_intensity(QuantCode.from_code(0)) == 0
    assert ldu_intensity(QuantCode.from_code(15)) == 15
    assert ldu_intensity(QuantCode.from_code(7)) == 7
    assert ldu_intensity(QuantCode.from_bits("000000011111111")) == 8


def test_quant_code_invariants():
    with pytest.raises(DeviceError):
        QuantCode(3, (True, False, True) + (False,) * 12)
    with pytest.raises(DeviceError):
        QuantCode(2, (True,) * 3 + (False,) * 12)


def test_arm_mac_examples():
    assert arm_mac([0] * 9, [15] * 9) == 0
    assert arm_mac([3] + [0] * 8, [5] * 9) == 15
    rng = np.random.default_rng(3)
    w = rng.integers(-8, 7, 9, endpoint=True).tolist()
    a = rng.integers(0, 15, 9, endpoint=True).tolist()
    assert arm_mac(w, a) == dot(w, a)


@pytest.mark.parametrize("w,a", [([1, 2], [1]), ([8], [1]), ([1], [16]), ([1], [-1]), ([0] * 10, [0] * 10)])
def test_arm_mac_errors(w, a):
    with pytest.raises(DeviceError):
        arm_mac(w, a)


def test_arm_mac_gain_error():
    assert arm_mac([2, 1], [3, 4], gain_error=0.5) == pytest.approx(15.0)
    assert arm_mac([2, 1], [3, 4], gain_error=[0.0, -1.0]) == pytest.approx(6.0)


def test_arm_mac_exhaustive_reduced_precision():
    lo, hi = weight_code_range(2)
    for n in range(1, 4):
        for w in itertools.product(range(lo, hi + 1), repeat=n):
            for a in itertools.product(range(4), repeat=n):
                assert arm_mac(w, a, weight_bits=2, activation_bits=2) == dot(w, a)


vec9 = st.integers(1, 9).flatmap(lambda n: st.tuples(
    st.lists(st.integers(-8, 7), min_size=n, max_size=n),
    st.lists(st.integers(0, 7), min_size=n, max_size=n),
    st.lists(st.integers(0, 8), min_size=n, max_size=n)))


@given(vec9)
def test_arm_mac_linear_in_activations(v):
    w, a, b = v
    ab = [x + y for x, y in zip(a, b)]
    assert arm_mac(w, ab) == arm_mac(w, a) + arm_mac(w, b)


def test_accumulate_examples():
    assert accumulate([5]) == 5
    assert accumulate([1, 2, 3]) == 6
    with pytest.raises(DeviceError):
        accumulate([])


def test_segmented_5x5():
    rng = np.random.default_rng(1)
    w = rng.integers(-8, 7, 25, endpoint=True).tolist()
    a = rng.integers(0, 15, 25, endpoint=True).tolist()
    parts = [arm_mac(w[i:i + 9], a[i:i + 9]) for i in range(0, 25, 9)]
    assert len(parts) == 3
    assert accumulate(parts) == dot(w, a) == segmented_dot(w, a)


@given(st.lists(st.tuples(st.integers(-8, 7), st.integers(0, 15)), min_size=1, max_size=80))
def test_segmented_dot_property(pairs):
    w, a = zip(*pairs)
    assert segmented_dot(list(w), list(a)) == dot(w, a)


def test_relu_requantize_examples():
    assert relu_requantize(-7, 1.0) == 0
    assert relu_requantize(0, 0.25) == 0
    assert relu_requantize(37, 0.25) == 9
    assert relu_requantize(10, 0.25) == 3  # 2.5 rounds away from zero
    assert relu_requantize(1000, 0.25) == 15


@given(st.integers(-10 ** 6, 10 ** 6), st.integers(-10 ** 6, 10 ** 6))
def test_relu_requantize_monotone_and_bounded(x, y):
    lo, hi = sorted((x, y))
    s = 2.0 ** -5
    assert 0 <= relu_requantize(lo, s) <= relu_requantize(hi, s) <= 15


def test_default_requant_scale():
    assert default_requant_scale(15) == 1.0
    assert default_requant_scale(16) == 0.5
    assert default_requant_scale(9 * 8 * 15) == 2.0 ** -7
