import pytest
from hypothesis import given, strategies as st

from ocbsim.cost import DeviceCalibration
from ocbsim.link import TransferSpec, compare_payloads, hypervector_bytes, transfer_energy, transfer_table


def test_transfer_examples():
    assert transfer_energy(65536) == 7680.0
    assert transfer_energy(512) == 60.0
    assert transfer_energy(0) == 0.0
    with pytest.raises(ValueError):
        transfer_energy(-1)


def test_compare_examples():
    assert compare_payloads(65536, 512)["ratio"] == 128.0
    assert compare_payloads(777, 777)["ratio"] == 1.0
    assert hypervector_bytes(1024, 4) == 512
    with pytest.raises(ValueError):
        compare_payloads(10, 0)


def test_transfer_spec_validation():
    with pytest.raises(ValueError):
        TransferSpec(-1, 1.0)
    with pytest.raises(ValueError):
        TransferSpec(1, -1.0)


def test_table():
    rows = transfer_table()
    assert [r["data_bytes"] for r in rows[:2]] == [65536, 512]
    assert [r["energy_mJ"] for r in rows] == [7680.0, 60.0, 128.0]


@given(st.floats(1e-9, 1e3), st.integers(0, 10 ** 9), st.integers(1, 10 ** 9))
def test_ratio_independent_of_cost(per_byte, image, hv):
    cal = DeviceCalibration(ble_energy_per_byte=per_byte)
    assert compare_payloads(image, hv, cal)["ratio"] == compare_payloads(image, hv)["ratio"] == image / hv


@given(st.integers(0, 10 ** 9), st.integers(0, 10 ** 9))
def test_additive(a, b):
    assert transfer_energy(a + b) == pytest.approx(transfer_energy(a) + transfer_energy(b), rel=1e-12)
