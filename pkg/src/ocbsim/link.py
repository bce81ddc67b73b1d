"""Wireless transfer cost of shipping data from the sensor node to the cloud."""

from __future__ import annotations

from dataclasses import dataclass

from .cost import DeviceCalibration

# Table values: a 65536 B image costs 7680 mJ over BLE 4.0.
IMAGE_BYTES = 65536
IMAGE_ENERGY_MJ = 7680.0
DEFAULT_ENERGY_PER_BYTE_J = IMAGE_ENERGY_MJ * 1e-3 / IMAGE_BYTES
# Quoted efficiency figure; kept only as metadata since it is power per data rate.
BLE_EFFICIENCY_NOTE = "15mW/1Mb (BLE 4.0)"


@dataclass(frozen=True)
class TransferSpec:
    payload_bytes: float
    energy_per_byte: float = DEFAULT_ENERGY_PER_BYTE_J

    def __post_init__(self) -> None:
        if self.payload_bytes < 0 or self.energy_per_byte < 0:
            raise ValueError("payload and energy per byte must be >= 0")

    @property
    def energy_mj(self) -> float:
        return self.payload_bytes * self.energy_per_byte * 1e3


def transfer_energy(payload_bytes: float, cal: DeviceCalibration | None = None) -> float:
    """Energy in millijoules to send ``payload_bytes``."""
    per_byte = cal.ble_energy_per_byte if cal is not None else DEFAULT_ENERGY_PER_BYTE_J
    return TransferSpec(payload_bytes, per_byte).energy_mj


def hypervector_bytes(dimension: int, bits_per_element: int = 4) -> int:
    return -(-dimension * bits_per_element // 8)


def compare_payloads(image_bytes: float, hv_bytes: float,
                     cal: DeviceCalibration | None = None) -> dict[str, float]:
    if hv_bytes <= 0:
        raise ValueError("hypervector payload must be > 0 bytes")
    image_mj = transfer_energy(image_bytes, cal)
    hv_mj = transfer_energy(hv_bytes, cal)
    # Bytes ratio, so the per-byte cost cancels exactly.
    return {"image_mJ": image_mj, "hv_mJ": hv_mj, "ratio": image_bytes / hv_bytes}


def transfer_table(cal: DeviceCalibration | None = None, image_elements: int = 16384,
                   image_bytes: int = IMAGE_BYTES, dimension: int = 1024,
                   bits_per_element: int = 4) -> list[dict[str, object]]:
    hv = hypervector_bytes(dimension, bits_per_element)
    cmp = compare_payloads(image_bytes, hv, cal)
    return [
        {"payload": "image", "vector_size": image_elements, "data_bytes": image_bytes,
         "energy_mJ": cmp["image_mJ"]},
        {"payload": "hypervector", "vector_size": dimension, "data_bytes": hv,
         "energy_mJ": cmp["hv_mJ"]},
        {"payload": "ratio", "vector_size": "", "data_bytes": "", "energy_mJ": cmp["ratio"]},
    ]
