"""Value-level models of the optical core primitives.

Weights are signed two's-complement codes and the optical path is treated as
an exact signed multiplier, so every function here is an integer oracle
unless a gain error is injected.
"""

from __future__ import annotations

import math
from fractions import Fraction
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

CBC_COMPARATORS = 15
CBC_LEVELS = CBC_COMPARATORS + 1


class DeviceError(ValueError):
    pass


def weight_code_range(bits: int) -> tuple[int, int]:
    """Inclusive signed range of a ``bits``-wide weight code."""
    if bits < 1:
        raise DeviceError("bit width must be >= 1")
    if bits == 1:
        return -1, 1  # bipolar
    half = 1 << (bits - 1)
    return -half, half - 1


def mr_resonance(n_eff: float, L: float, m: int) -> float:
    """Resonant wavelength ``n_eff * L / m`` in the units of ``L``."""
    for name, v in (("n_eff", n_eff), ("L", L), ("m", m)):
        if not (math.isfinite(v) and v > 0):
            raise DeviceError(f"{name} must be positive, got {v}")
    return n_eff * L / m


@dataclass(frozen=True)
class MRDevice:
    n_eff: float
    circumference_L: float
    mode_order_m: int
    weight_code: int = 0
    weight_bits: int = 4

    def __post_init__(self) -> None:
        if self.mode_order_m < 1 or self.circumference_L <= 0 or self.n_eff <= 0:
            raise DeviceError("MR needs n_eff > 0, L > 0 and mode order >= 1")
        lo, hi = weight_code_range(self.weight_bits)
        if not lo <= self.weight_code <= hi:
            raise DeviceError(f"weight code {self.weight_code} outside [{lo}, {hi}]")

    @property
    def resonance(self) -> float:
        return mr_resonance(self.n_eff, self.circumference_L, self.mode_order_m)


def assign_wavelengths(active_slots: int, channels: int) -> dict[int, int]:
    """Slot ``i`` listens on channel ``i``; one MR per wavelength."""
    if active_slots < 0:
        raise DeviceError("active_slots must be >= 0")
    if active_slots > channels:
        raise DeviceError(f"{active_slots} active MRs need more than {channels} wavelength channels")
    return {i: i for i in range(active_slots)}


@dataclass
class ArmState:
    mrs: list[MRDevice | None]
    channel_assignment: dict[int, int] = field(default_factory=dict)

    def __post_init__(self) -> None:
        active = [i for i, mr in enumerate(self.mrs) if mr is not None]
        chans = [self.channel_assignment[i] for i in active if i in self.channel_assignment]
        if len(set(chans)) != len(chans):
            raise DeviceError("two active MRs share a wavelength channel")


@dataclass(frozen=True)
class QuantCode:
    code: int
    thermometer: tuple[bool, ...]

    def __post_init__(self) -> None:
        if len(self.thermometer) != CBC_COMPARATORS:
            raise DeviceError("thermometer code needs 15 bits")
        if not 0 <= self.code < CBC_LEVELS or sum(self.thermometer) != self.code:
            raise DeviceError("code must equal the number of set thermometer bits")
        if any(hi and not lo for lo, hi in zip(self.thermometer, self.thermometer[1:])):
            raise DeviceError("thermometer code is not monotone")

    @classmethod
    def from_code(cls, code: int) -> "QuantCode":
        return cls(code, tuple(i < code for i in range(CBC_COMPARATORS)))

    @classmethod
    def from_bits(cls, bits: str | Sequence[bool]) -> "QuantCode":
        """Build from a thermometer read MSB-first, e.g. ``"000000011111111"``."""
        if isinstance(bits, str):
            bits = [c == "1" for c in bits]
        therm = tuple(bool(b) for b in reversed(list(bits)))
        return cls(sum(therm), therm)


def cbc_thresholds(v_min: float, v_max: float) -> np.ndarray:
    if not (math.isfinite(v_min) and math.isfinite(v_max)) or v_max <= v_min:
        raise DeviceError("CBC needs finite v_min < v_max")
    step = (v_max - v_min) / CBC_LEVELS
    return v_min + step * np.arange(1, CBC_LEVELS)


def cbc_quantize(v: float, v_min: float, v_max: float) -> QuantCode:
    """Flash-quantise one pixel voltage with 15 uniformly spaced comparators."""
    if not math.isfinite(v):
        raise DeviceError(f"input voltage must be finite, got {v}")
    cbc_thresholds(v_min, v_max)  # domain check
    # Compare exactly: v >= v_min + i * (v_max - v_min) / 16, in rationals.
    x = (Fraction(v) - Fraction(v_min)) * CBC_LEVELS
    span = Fraction(v_max) - Fraction(v_min)
    therm = tuple(x >= i * span for i in range(1, CBC_LEVELS))
    return QuantCode(sum(therm), therm)


def ldu_intensity(code: QuantCode) -> int:
    """Number of enabled driver transistors; intensity is linear in it."""
    return sum(code.thermometer)


def _check_arm(weights: Sequence[int], activations: Sequence[int], mrs_per_arm: int,
               weight_bits: int, activation_bits: int) -> None:
    if len(weights) != len(activations):
        raise DeviceError(f"length mismatch: {len(weights)} weights vs {len(activations)} activations")
    if len(weights) > mrs_per_arm:
        raise DeviceError(f"an arm holds at most {mrs_per_arm} MRs")
    lo, hi = weight_code_range(weight_bits)
    amax = (1 << activation_bits) - 1
    for w in weights:
        if not lo <= w <= hi:
            raise DeviceError(f"weight {w} outside [{lo}, {hi}]")
    for a in activations:
        if not 0 <= a <= amax:
            raise DeviceError(f"activation {a} outside [0, {amax}]")


def arm_mac(weights: Sequence[int], activations: Sequence[int], *, weight_bits: int = 4,
            activation_bits: int = 4, mrs_per_arm: int = 9,
            gain_error: float | Sequence[float] = 0.0) -> int | float:
    """Partial sum seen by one arm's photodetector.

    With the default zero gain error this is the exact integer dot product.
    A non-zero ``gain_error`` (scalar or one per MR) scales each product by
    ``1 + g`` and the result becomes a float.
    """
    _check_arm(weights, activations, mrs_per_arm, weight_bits, activation_bits)
    if np.ndim(gain_error) == 0 and gain_error == 0:
        return sum(int(w) * int(a) for w, a in zip(weights, activations))
    g = np.broadcast_to(np.asarray(gain_error, dtype=float), (len(weights),))
    return float(sum(w * a * (1.0 + gi) for w, a, gi in zip(weights, activations, g)))


def accumulate(partials: Sequence[int]) -> int:
    if len(partials) == 0:
        raise DeviceError("nothing to accumulate")
    total = 0
    for p in partials:
        total += p
    return total


def segmented_dot(weights: Sequence[int], activations: Sequence[int], **arm_kw) -> int:
    """Dot product of arbitrary length split into arm-sized segments."""
    width = arm_kw.get("mrs_per_arm", 9)
    if len(weights) != len(activations):
        raise DeviceError("length mismatch")
    return accumulate([arm_mac(weights[i:i + width], activations[i:i + width], **arm_kw)
                       for i in range(0, len(weights), width)])


def round_half_away(x: float) -> int:
    return int(math.copysign(math.floor(abs(x) + 0.5), x))


def relu_requantize(x: int, scale: float, out_bits: int = 4) -> int:
    if scale <= 0:
        raise DeviceError("scale must be positive")
    y = round_half_away(max(x, 0) * scale)
    return min(y, (1 << out_bits) - 1)


def default_requant_scale(accumulator_bound: int, out_bits: int = 4) -> float:
    """Power-of-two scale mapping ``[0, bound]`` into ``out_bits`` codes."""
    top = (1 << out_bits) - 1
    if accumulator_bound <= top:
        return 1.0
    return 2.0 ** -math.ceil(math.log2(accumulator_bound / top))


def accumulator_bound(fanin: int, weight_bits: int, activation_bits: int) -> int:
    """Largest |accumulator| for ``fanin`` products of full-scale codes."""
    lo, hi = weight_code_range(weight_bits)
    return fanin * max(abs(lo), hi) * ((1 << activation_bits) - 1)
