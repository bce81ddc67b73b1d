"""Independent oracles and the equivalence suites run by ``ocbsim verify``.

The scheduler oracle does not look at the closed-form plan counts: it lays
out every stride op of a layer, packs them into cycles, and tallies events
cycle by cycle.
"""

from __future__ import annotations

import itertools
from collections import Counter
from dataclasses import dataclass, field
from math import ceil

import numpy as np

from .hdc import encode, encode_reference, generate_encoding
from .mapper import map_layer
from .model import LayerKind, LayerSpec, OCBGeometry
from .photonics import arm_mac, weight_code_range
from .scheduler import AdcPolicy, EventCounts, TuningMode, schedule


def dot_oracle(w, a) -> int:
    s = 0
    for x, y in zip(w, a):
        s += int(x) * int(y)
    return s


@dataclass(frozen=True)
class _Op:
    output: tuple
    group: tuple
    useful: int
    arms: int


def _stride_ops(layer: LayerSpec, geom: OCBGeometry, group_major: bool) -> tuple[list[_Op], int]:
    """Every stride op of ``layer`` and the number of ops one cycle can hold."""
    ops = []
    if layer.kind is LayerKind.CONV:
        k = layer.kernel_size
        footprint = 9 if k == 1 else k * k
        arms = -(-footprint // geom.mrs_per_arm)
        per_cycle = geom.banks * (geom.arms_per_bank // arms)
        positions = range(layer.out_height * layer.out_width)
        if group_major:
            order = itertools.product(range(layer.out_channels), range(layer.in_channels), positions)
            ops = [_Op((co, p), (co, ci), k * k, arms) for co, ci, p in order]
        else:
            order = itertools.product(range(layer.out_channels), positions, range(layer.in_channels))
            ops = [_Op((co, p), (co, ci), k * k, arms) for co, p, ci in order]
    else:
        n_in = layer.in_features
        n_out = layer.out_features if layer.kind is LayerKind.FC else layer.dimension
        per_cycle = geom.banks * geom.arms_per_bank
        for o in range(n_out):
            for s, lo in enumerate(range(0, n_in, geom.mrs_per_arm)):
                ops.append(_Op((o,), (o, s), min(geom.mrs_per_arm, n_in - lo), 1))
    return ops, per_cycle


def cycle_walk(layer: LayerSpec, geom: OCBGeometry, mode: TuningMode | str,
               adc_policy: AdcPolicy | str = AdcPolicy.GROUP) -> EventCounts:
    mode = TuningMode.parse(mode)
    ru = mode is TuningMode.RU
    ops, per_cycle = _stride_ops(layer, geom, group_major=ru)
    fanin = Counter()
    for op in ops:
        fanin[op.output] += op.arms
    done = Counter()
    symbolic = layer.kind is LayerKind.ENCODER
    memory_key = "hemw_reads" if symbolic else "nwm_reads"
    t = Counter()
    loaded: set = set()
    rounds: set = set()
    group_round: dict = {}
    stream_cycles = 0
    for start in range(0, len(ops), per_cycle):
        stream_cycles += 1
        for op in ops[start:start + per_cycle]:
            if not ru:
                t["tuning"] += op.useful
            elif op.group not in loaded:
                loaded.add(op.group)
                group_round[op.group] = len(group_round) // per_cycle
                rounds.add(group_round[op.group])
                t["tuning"] += op.useful
            t["pd"] += op.arms
            t["laser"] += op.useful
            t["buf"] += op.useful
            if AdcPolicy(adc_policy) is AdcPolicy.ARM:
                t["adc"] += op.arms
            done[op.output] += op.arms
            if done[op.output] == fanin[op.output]:
                t["buf"] += 1
                t["accum"] += fanin[op.output] - 1
                if AdcPolicy(adc_policy) is AdcPolicy.GROUP:
                    t["adc"] += 1
    tuning_rounds = len(rounds) if ru else stream_cycles
    return EventCounts(
        tuning_events=t["tuning"],
        dac_conversions=t["tuning"],
        adc_conversions=t["adc"],
        laser_symbols=t["laser"],
        pd_reads=t["pd"],
        buffer_accesses=t["buf"],
        accum_ops=t["accum"],
        cycles=tuning_rounds + stream_cycles if ru else stream_cycles,
        tuning_rounds=tuning_rounds,
        stream_cycles=stream_cycles,
        **{memory_key: t["tuning"]},
    )


# --- suites -------------------------------------------------------------------


@dataclass
class SuiteResult:
    name: str
    cases: int = 0
    failures: int = 0
    examples: list = field(default_factory=list)

    def check(self, ok: bool, detail=None) -> None:
        self.cases += 1
        if not ok:
            self.failures += 1
            if len(self.examples) < 5:
                self.examples.append(detail)

    @property
    def passed(self) -> bool:
        return self.failures == 0

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status} {self.name}: {self.cases} cases, {self.failures} mismatches"


def arm_mac_exhaustive(weight_bits: int = 2, activation_bits: int = 2, max_len: int = 3) -> SuiteResult:
    res = SuiteResult(f"arm_mac exhaustive {weight_bits}b x {activation_bits}b, len <= {max_len}")
    lo, hi = weight_code_range(weight_bits)
    wv = range(lo, hi + 1)
    av = range(0, 1 << activation_bits)
    for n in range(1, max_len + 1):
        for w in itertools.product(wv, repeat=n):
            for a in itertools.product(av, repeat=n):
                got = arm_mac(w, a, weight_bits=weight_bits, activation_bits=activation_bits)
                res.check(got == dot_oracle(w, a), (w, a, got))
    return res


def arm_mac_random(n_cases: int = 100_000, seed: int = 0, bits: int = 4, length: int = 9) -> SuiteResult:
    res = SuiteResult(f"arm_mac random {bits}b length {length}")
    rng = np.random.default_rng(seed)
    lo, hi = weight_code_range(bits)
    W = rng.integers(lo, hi, size=(n_cases, length), endpoint=True).tolist()
    A = rng.integers(0, (1 << bits) - 1, size=(n_cases, length), endpoint=True).tolist()
    for w, a in zip(W, A):
        got = arm_mac(w, a, weight_bits=bits, activation_bits=bits)
        res.check(got == dot_oracle(w, a), (w, a, got))
    return res


def encode_random(n_cases: int = 1000, seed: int = 0, max_n: int = 64, max_d: int = 256) -> SuiteResult:
    res = SuiteResult("encode vs matrix-vector oracle")
    rng = np.random.default_rng(seed)
    for case in range(n_cases):
        n = int(rng.integers(1, max_n, endpoint=True))
        d = int(rng.integers(1, max_d, endpoint=True))
        bits = int(rng.integers(1, 4, endpoint=True))
        m = generate_encoding(n, d, seed=case, value_bits=bits)
        x = rng.integers(0, 15, size=n, endpoint=True)
        got = encode(x, m).values.tolist()
        want = encode_reference(x.tolist(), m)
        res.check(got == want, (n, d, bits))
    return res


def scheduler_layers() -> list[LayerSpec]:
    """Small layers of every kind, the largest near 10**4 cycles."""
    return [
        LayerSpec.conv(3, 1, 1, 4),
        LayerSpec.conv(3, 4, 8, 6, 5),
        LayerSpec.conv(5, 3, 7, 5),
        LayerSpec.conv(7, 2, 5, 4),
        LayerSpec.conv(1, 6, 4, 3),
        LayerSpec.conv(3, 16, 16, 14),
        LayerSpec.conv(3, 64, 64, 28),
        LayerSpec.fc(9, 1),
        LayerSpec.fc(10, 1),
        LayerSpec.fc(100, 37),
        LayerSpec.fc(512, 1000),
        LayerSpec.encoder(20, 50),
        LayerSpec.encoder(512, 1024),
    ]


def scheduler_vs_walk(layers: list[LayerSpec] | None = None,
                      geom: OCBGeometry | None = None) -> SuiteResult:
    res = SuiteResult("scheduler vs cycle-walk oracle")
    geom = geom or OCBGeometry()
    for layer in layers or scheduler_layers():
        plan = map_layer(layer, geom)
        for mode in TuningMode:
            for policy in AdcPolicy:
                got = schedule(plan, mode, policy)
                want = cycle_walk(layer, geom, mode, policy)
                res.check(got == want, (layer, mode.value, policy.value))
    return res


def run_all(quick: bool = False) -> list[SuiteResult]:
    layers = scheduler_layers()
    if quick:
        layers = [x for x in layers if x.macs < 2_000_000]
    return [
        arm_mac_exhaustive(),
        arm_mac_random(10_000 if quick else 100_000),
        encode_random(100 if quick else 1000),
        scheduler_vs_walk(layers),
    ]
