"""Hardware event tallies for a mapped layer.

NRU retunes every active MR on every cycle.  RU loads each weight group once
per residency round and streams every activation that needs it before the
array is retuned, so each weight value is programmed exactly once.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, fields
from enum import Enum

from .mapper import MappingPlan


class TuningMode(str, Enum):
    NRU = "nru"
    RU = "ru"

    @classmethod
    def parse(cls, text: "str | TuningMode") -> "TuningMode":
        if isinstance(text, TuningMode):
            return text
        try:
            return cls(text.lower())
        except ValueError:
            raise ValueError(f"mode must be nru or ru, got {text!r}") from None


class AdcPolicy(str, Enum):
    GROUP = "group"  # one conversion per accumulated output
    ARM = "arm"      # one conversion per photodetector read


@dataclass(frozen=True)
class EventCounts:
    tuning_events: int = 0
    dac_conversions: int = 0
    adc_conversions: int = 0
    laser_symbols: int = 0
    pd_reads: int = 0
    nwm_reads: int = 0
    hemw_reads: int = 0
    buffer_accesses: int = 0
    accum_ops: int = 0
    cycles: int = 0
    tuning_rounds: int = 0
    stream_cycles: int = 0

    def __post_init__(self) -> None:
        for f in fields(self):
            if getattr(self, f.name) < 0:
                raise ValueError(f"{f.name} must be >= 0")
        if self.tuning_events != self.dac_conversions:
            raise ValueError("every MR programming needs exactly one DAC conversion")

    def to_dict(self) -> dict[str, int]:
        return asdict(self)

    def __add__(self, other: "EventCounts") -> "EventCounts":
        return EventCounts(**{f.name: getattr(self, f.name) + getattr(other, f.name)
                              for f in fields(self)})


ACTIVATION_SIDE = ("adc_conversions", "laser_symbols", "pd_reads", "buffer_accesses", "accum_ops")


def _activation_side(plan: MappingPlan, adc_policy: AdcPolicy) -> dict[str, int]:
    pd_reads = plan.stride_ops_total * plan.arms_per_stride
    adc = plan.outputs if AdcPolicy(adc_policy) is AdcPolicy.GROUP else pd_reads
    # One modulated wavelength per useful MR slot.
    laser = plan.macs_total
    return dict(
        adc_conversions=adc,
        laser_symbols=laser,
        pd_reads=pd_reads,
        # One write per produced activation, one read per modulated symbol.
        buffer_accesses=plan.outputs + laser,
        accum_ops=plan.outputs * (plan.accumulation_fanin - 1),
    )


def _memory_reads(plan: MappingPlan, n: int) -> dict[str, int]:
    if plan.is_symbolic:
        return dict(nwm_reads=0, hemw_reads=n)
    return dict(nwm_reads=n, hemw_reads=0)


def schedule_nru(plan: MappingPlan, adc_policy: AdcPolicy | str = AdcPolicy.GROUP) -> EventCounts:
    # Idle MR slots are never programmed, so retunes equal useful products.
    tuning = plan.macs_total
    return EventCounts(
        tuning_events=tuning,
        dac_conversions=tuning,
        **_memory_reads(plan, tuning),
        **_activation_side(plan, adc_policy),
        cycles=plan.cycles,
        tuning_rounds=plan.cycles,
        stream_cycles=plan.cycles,
    )


def schedule_ru(plan: MappingPlan, adc_policy: AdcPolicy | str = AdcPolicy.GROUP) -> EventCounts:
    tuning = plan.weight_values_total
    rounds = plan.residency_rounds
    return EventCounts(
        tuning_events=tuning,
        dac_conversions=tuning,
        **_memory_reads(plan, tuning),
        **_activation_side(plan, adc_policy),
        cycles=rounds + plan.cycles,
        tuning_rounds=rounds,
        stream_cycles=plan.cycles,
    )


def schedule(plan: MappingPlan, mode: TuningMode | str,
             adc_policy: AdcPolicy | str = AdcPolicy.GROUP) -> EventCounts:
    if TuningMode.parse(mode) is TuningMode.NRU:
        return schedule_nru(plan, adc_policy)
    return schedule_ru(plan, adc_policy)


def schedule_network(plans: list[MappingPlan], mode: TuningMode | str,
                     adc_policy: AdcPolicy | str = AdcPolicy.GROUP) -> list[EventCounts]:
    return [schedule(p, mode, adc_policy) for p in plans]
