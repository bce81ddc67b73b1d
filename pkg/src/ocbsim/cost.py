"""Linear per-event energy and latency model, report assembly, calibration fit."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields, replace
from importlib import resources
from pathlib import Path
from typing import Any, Sequence

import numpy as np
from scipy.optimize import nnls

from .mapper import MappingPlan, plan_network
from .model import LayerKind, NetworkSpec, PrecisionConfig, resnet18_preset
from .photonics import accumulator_bound, default_requant_scale
from .scheduler import AdcPolicy, EventCounts, TuningMode, schedule_network

ENERGY_FIELDS = ("e_tune", "e_dac", "e_adc", "e_laser", "e_pd", "e_nwm", "e_hemw", "e_buf", "e_accum")
TIME_FIELDS = ("t_tune", "t_stream", "t_adc")
# Weight width at which unit costs are quoted when bit-width scaling is on.
REFERENCE_WEIGHT_BITS = 4


class CalibrationError(ValueError):
    pass


@dataclass(frozen=True)
class DeviceCalibration:
    """Unit costs in SI units (J per event, s per event or cycle)."""

    e_tune: float = 0.0
    e_dac: float = 0.0
    e_adc: float = 0.0
    e_laser: float = 0.0
    e_pd: float = 0.0
    e_nwm: float = 0.0
    e_hemw: float = 0.0
    e_buf: float = 0.0
    e_accum: float = 0.0
    t_tune: float = 0.0
    t_stream: float = 0.0
    t_adc: float = 0.0
    ble_energy_per_byte: float = 7.680 / 65536
    adc_policy: str = AdcPolicy.GROUP.value
    bitwidth_scaling: bool = False
    mr_gain_error: float = 0.0
    provenance: str = "user supplied"

    def __post_init__(self) -> None:
        for name in ENERGY_FIELDS + TIME_FIELDS + ("ble_energy_per_byte",):
            v = getattr(self, name)
            if not isinstance(v, (int, float)) or not math.isfinite(v) or v < 0:
                raise CalibrationError(f"{name} must be finite and >= 0, got {v!r}")
        AdcPolicy(self.adc_policy)

    def scaled(self, c: float) -> "DeviceCalibration":
        """Every unit cost multiplied by ``c``."""
        return replace(self, **{n: getattr(self, n) * c
                                for n in ENERGY_FIELDS + TIME_FIELDS + ("ble_energy_per_byte",)})

    def for_weight_bits(self, weight_bits: int) -> "DeviceCalibration":
        if not self.bitwidth_scaling:
            return self
        k = weight_bits / REFERENCE_WEIGHT_BITS
        return replace(self, e_dac=self.e_dac * k, e_tune=self.e_tune * k)

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "DeviceCalibration":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known - {"fit"}
        if unknown:
            raise CalibrationError(f"unknown calibration keys: {sorted(unknown)}")
        return cls(**{k: v for k, v in d.items() if k in known})


def load_calibration(path: str | Path | None = None) -> DeviceCalibration:
    """Read a calibration file; ``None`` gives the shipped default."""
    try:
        if path is None:
            text = resources.files("ocbsim.data").joinpath("default_calibration.json").read_text()
        else:
            text = Path(path).read_text()
        return DeviceCalibration.from_dict(json.loads(text))
    except (OSError, json.JSONDecodeError) as exc:
        raise CalibrationError(f"cannot load calibration {path}: {exc}") from None


@dataclass(frozen=True)
class EnergyBreakdown:
    adc: float = 0.0
    dac: float = 0.0
    tuning: float = 0.0
    laser: float = 0.0
    pd: float = 0.0
    memory: float = 0.0
    buffer: float = 0.0
    accumulation: float = 0.0

    @property
    def total(self) -> float:
        return (self.adc + self.dac + self.tuning + self.laser + self.pd + self.memory
                + self.buffer + self.accumulation)

    def __add__(self, other: "EnergyBreakdown") -> "EnergyBreakdown":
        return EnergyBreakdown(**{f.name: getattr(self, f.name) + getattr(other, f.name)
                                  for f in fields(self)})

    def to_dict(self) -> dict[str, float]:
        return {**asdict(self), "total": self.total}


@dataclass(frozen=True)
class LatencyBreakdown:
    tuning_time: float = 0.0
    stream_time: float = 0.0
    conversion_time: float = 0.0

    @property
    def total(self) -> float:
        return self.tuning_time + self.stream_time + self.conversion_time

    def __add__(self, other: "LatencyBreakdown") -> "LatencyBreakdown":
        return LatencyBreakdown(self.tuning_time + other.tuning_time,
                                self.stream_time + other.stream_time,
                                self.conversion_time + other.conversion_time)

    def to_dict(self) -> dict[str, float]:
        return {**asdict(self), "total": self.total}


def energy(events: EventCounts, cal: DeviceCalibration) -> EnergyBreakdown:
    return EnergyBreakdown(
        adc=events.adc_conversions * cal.e_adc,
        dac=events.dac_conversions * cal.e_dac,
        tuning=events.tuning_events * cal.e_tune,
        laser=events.laser_symbols * cal.e_laser,
        pd=events.pd_reads * cal.e_pd,
        memory=events.nwm_reads * cal.e_nwm + events.hemw_reads * cal.e_hemw,
        buffer=events.buffer_accesses * cal.e_buf,
        accumulation=events.accum_ops * cal.e_accum,
    )


def latency(events: EventCounts, cal: DeviceCalibration, mode: TuningMode | str) -> LatencyBreakdown:
    """NRU serialises tuning, streaming and conversion every cycle.

    RU tunes once per residency round and hides conversion behind streaming;
    only the part of conversion time that exceeds streaming time is charged.
    """
    tuning_time = events.tuning_rounds * cal.t_tune
    stream_time = events.stream_cycles * cal.t_stream
    conv = events.adc_conversions * cal.t_adc
    if TuningMode.parse(mode) is TuningMode.RU:
        conv = max(0.0, conv - stream_time)
    return LatencyBreakdown(tuning_time, stream_time, conv)


# --- reports -----------------------------------------------------------------


@dataclass
class LayerReport:
    index: int
    name: str
    kind: str
    events: EventCounts
    energy: EnergyBreakdown
    latency: LatencyBreakdown
    macs: int
    requant_scale: float

    def to_dict(self) -> dict[str, Any]:
        return {
            "index": self.index,
            "name": self.name,
            "kind": self.kind,
            "macs": self.macs,
            "requant_scale": self.requant_scale,
            "events": self.events.to_dict(),
            "energy_j": self.energy.to_dict(),
            "latency_s": self.latency.to_dict(),
        }


@dataclass
class SimulationReport:
    network: str
    mode: TuningMode
    precision: PrecisionConfig
    layers: list[LayerReport]
    calibration_provenance: str = ""
    header: dict[str, Any] = field(default_factory=dict)

    def _sum(self, symbolic: bool | None = None) -> tuple[EnergyBreakdown, LatencyBreakdown]:
        e, t = EnergyBreakdown(), LatencyBreakdown()
        for layer in self.layers:
            if symbolic is None or (layer.kind == LayerKind.ENCODER.value) == symbolic:
                e, t = e + layer.energy, t + layer.latency
        return e, t

    @property
    def total_energy(self) -> float:
        return self._sum()[0].total

    @property
    def total_time(self) -> float:
        return self._sum()[1].total

    def part(self, symbolic: bool) -> tuple[float, float]:
        """(energy J, time s) of the symbolic (encoder) or neural part."""
        e, t = self._sum(symbolic)
        return e.total, t.total

    @property
    def total_macs(self) -> int:
        return sum(layer.macs for layer in self.layers)

    def shares(self) -> dict[str, dict[str, float]]:
        out = {}
        for label, idx in (("energy_pct", 0), ("time_pct", 1)):
            total = (self.total_energy, self.total_time)[idx]
            neuro, sym = self.part(False)[idx], self.part(True)[idx]
            if total > 0:
                out[label] = {"neuro": 100.0 * neuro / total, "symbolic": 100.0 * sym / total}
            else:
                out[label] = {"neuro": 0.0, "symbolic": 0.0}
        return out

    @property
    def gops_per_watt(self) -> float:
        """Two ops per MAC over total energy: (ops/s) / (J/s) in units of 1e9."""
        e = self.total_energy
        return 2.0 * self.total_macs / e / 1e9 if e > 0 else 0.0

    def to_dict(self) -> dict[str, Any]:
        e, t = self._sum()
        return {
            "header": self.header,
            "network": self.network,
            "mode": self.mode.value,
            "precision": {**self.precision.to_dict(), "study_only": self.precision.study_only},
            "totals": {
                "energy_j": e.to_dict(),
                "latency_s": t.to_dict(),
                "macs": self.total_macs,
                "gops_per_watt": self.gops_per_watt,
            },
            "shares": self.shares(),
            "layers": [layer.to_dict() for layer in self.layers],
        }

    def to_csv_rows(self) -> tuple[list[str], list[list[Any]]]:
        energy_keys = [f.name for f in fields(EnergyBreakdown)]
        time_keys = [f.name for f in fields(LatencyBreakdown)]
        head = (["layer", "name", "mode", "cycles"] + [f"energy_{k}_j" for k in energy_keys]
                + ["energy_total_j"] + [f"{k}_s" for k in time_keys] + ["time_total_s"])
        rows = []
        for layer in self.layers:
            rows.append([layer.index, layer.name, self.mode.value, layer.events.cycles]
                        + [getattr(layer.energy, k) for k in energy_keys] + [layer.energy.total]
                        + [getattr(layer.latency, k) for k in time_keys] + [layer.latency.total])
        return head, rows


def summarize(net: NetworkSpec, plans: Sequence[MappingPlan] | None, mode: TuningMode | str,
              cal: DeviceCalibration) -> SimulationReport:
    mode = TuningMode.parse(mode)
    plans = list(plans) if plans is not None else plan_network(net)
    events = schedule_network(plans, mode, cal.adc_policy)
    cal_w = cal.for_weight_bits(net.precision.weight_bits)
    layers = []
    for i, (layer, plan, ev) in enumerate(zip(net.layers, plans, events)):
        bound = accumulator_bound(plan.macs_total // max(plan.outputs, 1),
                                  net.precision.weight_bits, net.precision.activation_bits)
        layers.append(LayerReport(
            index=i,
            name=layer.name or f"{layer.kind.value.lower()}{i}",
            kind=layer.kind.value,
            events=ev,
            energy=energy(ev, cal_w),
            latency=latency(ev, cal_w, mode),
            macs=plan.macs_total,
            requant_scale=default_requant_scale(bound, net.precision.activation_bits),
        ))
    return SimulationReport(net.name, mode, net.precision, layers, cal.provenance)


# --- calibration fit ----------------------------------------------------------

# Relative unit costs inside each fitted group.  Only the group scales are free;
# the ratios are modelling priors recorded alongside the fitted file.
# ADC and DAC conversions at this resolution are assumed to cost the same.
ENERGY_TEMPLATE = {
    "conversion": {"e_tune": 1.0, "e_dac": 1.0, "e_adc": 1.0, "e_nwm": 0.1, "e_hemw": 0.1},
    "optical": {"e_laser": 1.0, "e_pd": 0.5, "e_buf": 0.25, "e_accum": 0.05},
}
TIME_TEMPLATE = {
    "tune": {"t_tune": 1.0},
    "stream": {"t_stream": 1.0, "t_adc": 1.0},
}


@dataclass(frozen=True)
class Anchors:
    """Reference totals for the ResNet-18 + encoder workload at one precision."""

    nru_energy_j: float = 2.796
    ru_energy_j: float = 4.1e-3
    nru_time_s: float = 36.9
    ru_time_s: float = 56.4e-3
    precision: PrecisionConfig = PrecisionConfig(3, 4)
    tolerance: float = 0.10

    def targets(self) -> dict[str, float]:
        return {"nru_energy_j": self.nru_energy_j, "ru_energy_j": self.ru_energy_j,
                "nru_time_s": self.nru_time_s, "ru_time_s": self.ru_time_s}


@dataclass
class FitResult:
    calibration: DeviceCalibration
    achieved: dict[str, float]
    targets: dict[str, float]
    tolerance: float
    dominance: dict[str, bool]
    scales: dict[str, float]

    @property
    def ratios(self) -> dict[str, float]:
        return {k: (self.achieved[k] / v if v else (1.0 if self.achieved[k] == 0 else math.inf))
                for k, v in self.targets.items()}

    @property
    def feasible(self) -> bool:
        ok = all(abs(r - 1.0) <= self.tolerance for r in self.ratios.values())
        return ok and all(self.dominance.values())

    def diagnostic(self) -> str:
        parts = [f"{k}={self.achieved[k]:.4g} (target {self.targets[k]:.4g}, x{self.ratios[k]:.3g})"
                 for k in self.targets]
        failed = [k for k, v in self.dominance.items() if not v]
        if failed:
            parts.append("dominance violated: " + ",".join(failed))
        return "; ".join(parts)

    def to_dict(self) -> dict[str, Any]:
        return {
            "feasible": self.feasible,
            "tolerance": self.tolerance,
            "targets": self.targets,
            "achieved": self.achieved,
            "ratio_to_target": self.ratios,
            "dominance": self.dominance,
            "group_scales": self.scales,
            "energy_template": ENERGY_TEMPLATE,
            "time_template": TIME_TEMPLATE,
        }


def _unit(template: dict[str, dict[str, float]], group: str) -> DeviceCalibration:
    return DeviceCalibration(**template[group])


def _solve(rows: np.ndarray, targets: np.ndarray) -> np.ndarray:
    # Relative residuals so the mJ anchor weighs as much as the J anchor.
    w = np.array([1.0 / t if t > 0 else 1.0 for t in targets])
    a = rows * w[:, None]
    norm = np.linalg.norm(a, axis=0)
    norm[norm == 0] = 1.0
    scales, _ = nnls(a / norm, targets * w)
    return scales / norm


def fit_default_calibration(anchors: Anchors | None = None,
                            net: NetworkSpec | None = None) -> FitResult:
    """Least-squares fit of the group scales to the anchor totals (scales >= 0).

    The RU latency is piecewise linear in the stream scale because conversion
    hides behind streaming; the fit sweeps the stream scale to the nnls
    optimum of the linearised problem and then re-evaluates the full model.
    """
    anchors = anchors or Anchors()
    net = (net or resnet18_preset()).with_precision(anchors.precision)
    plans = plan_network(net)
    tg = anchors.targets()

    def totals(cal: DeviceCalibration) -> dict[str, float]:
        nru, ru = summarize(net, plans, "nru", cal), summarize(net, plans, "ru", cal)
        return {"nru_energy_j": nru.total_energy, "ru_energy_j": ru.total_energy,
                "nru_time_s": nru.total_time, "ru_time_s": ru.total_time}

    # Energy is exactly linear in each group scale.
    e_groups = list(ENERGY_TEMPLATE)
    e_cols = [totals(_unit(ENERGY_TEMPLATE, g)) for g in e_groups]
    e_rows = np.array([[c["nru_energy_j"] for c in e_cols], [c["ru_energy_j"] for c in e_cols]])
    e_scales = _solve(e_rows, np.array([tg["nru_energy_j"], tg["ru_energy_j"]]))

    # Time: NRU is linear; RU is linear in each group taken alone, which is
    # what the nnls columns use.
    t_groups = list(TIME_TEMPLATE)
    t_cols = [totals(_unit(TIME_TEMPLATE, g)) for g in t_groups]
    t_rows = np.array([[c["nru_time_s"] for c in t_cols], [c["ru_time_s"] for c in t_cols]])
    t_scales = _solve(t_rows, np.array([tg["nru_time_s"], tg["ru_time_s"]]))

    values: dict[str, float] = {}
    for g, s in zip(e_groups, e_scales):
        values.update({k: r * float(s) for k, r in ENERGY_TEMPLATE[g].items()})
    for g, s in zip(t_groups, t_scales):
        values.update({k: r * float(s) for k, r in TIME_TEMPLATE[g].items()})
    cal = DeviceCalibration(**values, provenance="fitted: nnls over grouped event model "
                            f"to ResNet-18 [{anchors.precision.label()}] anchor totals")
    achieved = totals(cal)
    dominance = _dominance(net, plans, cal)
    scales = {f"energy.{g}": float(s) for g, s in zip(e_groups, e_scales)}
    scales.update({f"time.{g}": float(s) for g, s in zip(t_groups, t_scales)})
    return FitResult(cal, achieved, tg, anchors.tolerance, dominance, scales)


def _dominance(net: NetworkSpec, plans: Sequence[MappingPlan], cal: DeviceCalibration) -> dict[str, bool]:
    nru = summarize(net, plans, "nru", cal)
    e, t = nru._sum()
    if e.total == 0 and t.total == 0:
        return {"energy_tuning_dac_adc": True, "time_tuning": True}
    top3 = e.tuning + e.dac + e.adc
    return {
        "energy_tuning_dac_adc": top3 >= 0.5 * e.total,
        "time_tuning": t.tuning_time >= max(t.stream_time, t.conversion_time),
    }


def write_calibration(result: FitResult, path: str | Path) -> None:
    d = result.calibration.to_dict()
    d["fit"] = result.to_dict()
    Path(path).write_text(json.dumps(d, indent=2, sort_keys=False) + "\n")
