"""Placement of layers onto the optical core banks.

One *stride op* is one kernel-patch (or FC segment) dot product held by
``arms_per_stride`` arms.  Conv layers issue one stride op per
(output channel, output pixel, input channel); partial sums across input
channels are added by the electronic accumulation unit.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, replace
from math import ceil

from .model import LayerKind, LayerSpec, NetworkSpec, OCBGeometry


class MappingError(ValueError):
    pass


@dataclass(frozen=True)
class KernelRule:
    arms_per_stride: int
    strides_per_bank: int
    idle_mrs_per_bank: int
    useful_mrs: int


def kernel_rule(k: int, geom: OCBGeometry) -> KernelRule:
    """Arm/bank packing for a ``k x k`` kernel.

    Arms are allocated whole; a bank holds as many strides as fit in its arms.
    With the default geometry this gives (1, 6, 0), (3, 2, 4) and (6, 1, 5)
    for k = 3, 5, 7.  A 1x1 kernel uses the 3x3 layout with 8 dark MRs per arm.
    """
    if k not in (1, 3, 5, 7):
        raise MappingError(f"unsupported kernel size {k}")
    footprint = 9 if k == 1 else k * k
    arms = ceil(footprint / geom.mrs_per_arm)
    if arms > geom.arms_per_bank:
        raise MappingError(f"a {k}x{k} kernel does not fit in one bank")
    per_bank = geom.arms_per_bank // arms
    idle = geom.mrs_per_bank - per_bank * footprint
    if k == 1:
        idle = geom.mrs_per_bank - per_bank
    return KernelRule(arms, per_bank, idle, k * k)


@dataclass(frozen=True)
class MappingPlan:
    layer_ref: int
    arms_per_stride: int
    strides_per_bank: int
    idle_mrs_per_bank: int
    stride_ops_total: int
    strides_per_cycle: int
    cycles: int
    active_mrs_per_cycle: int
    active_arms_per_cycle: int
    macs_total: int
    weight_values_total: int
    accumulation_fanin: int
    # Bookkeeping used by the scheduler.
    kind: str = LayerKind.CONV.value
    outputs: int = 0
    weight_groups: int = 0
    positions: int = 1
    mrs_per_arm: int = 9
    iterations: int | None = None

    @property
    def is_symbolic(self) -> bool:
        return self.kind == LayerKind.ENCODER.value

    @property
    def weight_capacity(self) -> int:
        """Weight groups resident at once (one per stride slot of the array)."""
        return self.strides_per_cycle

    @property
    def residency_rounds(self) -> int:
        return ceil(self.weight_groups / self.weight_capacity)

    def to_dict(self) -> dict:
        d = asdict(self)
        if d["iterations"] is None:
            del d["iterations"]
        return d


def map_conv(layer: LayerSpec, geom: OCBGeometry, layer_ref: int = 0) -> MappingPlan:
    if layer.kind is not LayerKind.CONV:
        raise MappingError("map_conv expects a Conv layer")
    rule = kernel_rule(layer.kernel_size, geom)
    positions = layer.out_height * layer.out_width
    outputs = layer.out_channels * positions
    stride_ops = outputs * layer.in_channels
    spc = geom.banks * rule.strides_per_bank
    first = min(stride_ops, spc)
    return MappingPlan(
        layer_ref=layer_ref,
        arms_per_stride=rule.arms_per_stride,
        strides_per_bank=rule.strides_per_bank,
        idle_mrs_per_bank=rule.idle_mrs_per_bank,
        stride_ops_total=stride_ops,
        strides_per_cycle=spc,
        cycles=ceil(stride_ops / spc),
        active_mrs_per_cycle=first * rule.useful_mrs,
        active_arms_per_cycle=first * rule.arms_per_stride,
        macs_total=layer.macs,
        weight_values_total=layer.weight_count,
        accumulation_fanin=rule.arms_per_stride * layer.in_channels,
        kind=layer.kind.value,
        outputs=outputs,
        weight_groups=layer.out_channels * layer.in_channels,
        positions=positions,
        mrs_per_arm=geom.mrs_per_arm,
    )


def _map_segmented(n_in: int, n_out: int, geom: OCBGeometry, layer_ref: int,
                   kind: LayerKind) -> MappingPlan:
    segments = ceil(n_in / geom.mrs_per_arm)
    stride_ops = n_out * segments
    spc = geom.total_arms
    first = min(stride_ops, spc)
    # Stride ops run output-major; only the last segment of an output is short.
    full, rem = divmod(first, segments)
    active = full * n_in + rem * geom.mrs_per_arm
    return MappingPlan(
        layer_ref=layer_ref,
        arms_per_stride=1,
        strides_per_bank=geom.arms_per_bank,
        idle_mrs_per_bank=0,
        stride_ops_total=stride_ops,
        strides_per_cycle=spc,
        cycles=ceil(stride_ops / spc),
        active_mrs_per_cycle=active,
        active_arms_per_cycle=first,
        macs_total=n_in * n_out,
        weight_values_total=n_in * n_out,
        accumulation_fanin=segments,
        kind=kind.value,
        outputs=n_out,
        weight_groups=stride_ops,
        positions=1,
        mrs_per_arm=geom.mrs_per_arm,
    )


def map_fc(layer: LayerSpec, geom: OCBGeometry, layer_ref: int = 0) -> MappingPlan:
    if layer.kind is not LayerKind.FC:
        raise MappingError("map_fc expects a FullyConnected layer")
    return _map_segmented(layer.in_features, layer.out_features, geom, layer_ref, LayerKind.FC)


def map_encoder(n: int, d: int, geom: OCBGeometry, layer_ref: int = 0) -> MappingPlan:
    if n < 1 or d < 1:
        raise MappingError("encoder needs N, D >= 1")
    plan = _map_segmented(n, d, geom, layer_ref, LayerKind.ENCODER)
    # Each iteration refills the array from HEMW with the next slice of the matrix.
    return replace(plan, iterations=plan.cycles)


def map_layer(layer: LayerSpec, geom: OCBGeometry, layer_ref: int = 0) -> MappingPlan:
    if layer.kind is LayerKind.CONV:
        return map_conv(layer, geom, layer_ref)
    if layer.kind is LayerKind.FC:
        return map_fc(layer, geom, layer_ref)
    return map_encoder(layer.in_features, layer.dimension, geom, layer_ref)


def plan_network(net: NetworkSpec, geom: OCBGeometry | None = None) -> list[MappingPlan]:
    geom = geom or net.geometry
    return [map_layer(layer, geom, i) for i, layer in enumerate(net.layers)]


def segment_bounds(n: int, width: int) -> list[tuple[int, int]]:
    """Split ``range(n)`` into consecutive arm-sized ``[lo, hi)`` slices."""
    return [(lo, min(lo + width, n)) for lo in range(0, n, width)]
