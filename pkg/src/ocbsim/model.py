"""Workload and accelerator descriptions.

A network is an ordered list of :class:`LayerSpec` entries executed strictly
one after another on the optical core.  Everything here is an immutable value
type; loading and validation are pure.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields, replace
from enum import Enum
from pathlib import Path
from typing import Any, Iterable

WEIGHT_BITS = (2, 3, 4, 8, 32)
ACTIVATION_BITS = (4, 8, 32)
# Hardware-faithful configurations: 4-bit CBC activations, 2..4-bit weights.
HARDWARE_WEIGHT_BITS = (2, 3, 4)
HARDWARE_ACTIVATION_BITS = 4

# ResNet downsample convolutions are 1x1; they run on the 3x3 arm layout.
KERNEL_SIZES = (1, 3, 5, 7)
DEFAULT_ENCODER_DIM = 1024

MIB = 1 << 20


class ConfigError(ValueError):
    """Raised for malformed or invalid network/geometry/memory configs."""


class LayerKind(str, Enum):
    CONV = "Conv"
    FC = "FullyConnected"
    ENCODER = "Encoder"


@dataclass(frozen=True)
class PrecisionConfig:
    weight_bits: int = 4
    activation_bits: int = 4

    def __post_init__(self) -> None:
        if self.weight_bits not in WEIGHT_BITS:
            raise ConfigError(f"weight_bits must be one of {WEIGHT_BITS}, got {self.weight_bits}")
        if self.activation_bits not in ACTIVATION_BITS:
            raise ConfigError(
                f"activation_bits must be one of {ACTIVATION_BITS}, got {self.activation_bits}"
            )

    @property
    def study_only(self) -> bool:
        """True when the pair is outside what the CBC/MR hardware can realise."""
        return not (
            self.activation_bits == HARDWARE_ACTIVATION_BITS
            and self.weight_bits in HARDWARE_WEIGHT_BITS
        )

    @classmethod
    def parse(cls, text: str) -> "PrecisionConfig":
        """Parse the ``W:A`` notation, e.g. ``"3:4"``."""
        try:
            w, a = text.strip().strip("[]").split(":")
            return cls(int(w), int(a))
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"precision must look like W:A, got {text!r}") from None

    def label(self) -> str:
        return f"{self.weight_bits}:{self.activation_bits}"

    def to_dict(self) -> dict[str, Any]:
        return {"weight_bits": self.weight_bits, "activation_bits": self.activation_bits}


@dataclass(frozen=True)
class LayerSpec:
    """One layer.  Which fields are meaningful depends on ``kind``.

    ``source`` names the layer whose output feeds this one (default: the
    previous layer); residual downsample branches use it.  ``pooled`` marks a
    conv whose output is globally average-pooled before the next layer.
    """

    kind: LayerKind
    name: str = ""
    # Conv
    kernel_size: int | None = None
    in_channels: int | None = None
    out_channels: int | None = None
    out_height: int | None = None
    out_width: int | None = None
    stride_step: int = 1
    source: int | None = None
    pooled: bool = False
    # FullyConnected / Encoder
    in_features: int | None = None
    out_features: int | None = None
    dimension: int | None = None

    @classmethod
    def conv(cls, k: int, cin: int, cout: int, h: int, w: int | None = None, *,
             stride_step: int = 1, name: str = "", source: int | None = None,
             pooled: bool = False) -> "LayerSpec":
        return cls(LayerKind.CONV, name=name, kernel_size=k, in_channels=cin,
                   out_channels=cout, out_height=h, out_width=h if w is None else w,
                   stride_step=stride_step, source=source, pooled=pooled)

    @classmethod
    def fc(cls, n_in: int, n_out: int, *, name: str = "") -> "LayerSpec":
        return cls(LayerKind.FC, name=name, in_features=n_in, out_features=n_out)

    @classmethod
    def encoder(cls, n_in: int, dimension: int = DEFAULT_ENCODER_DIM, *, name: str = "") -> "LayerSpec":
        return cls(LayerKind.ENCODER, name=name, in_features=n_in, dimension=dimension)

    def __post_init__(self) -> None:
        kind = LayerKind(self.kind)
        object.__setattr__(self, "kind", kind)
        if kind is LayerKind.CONV:
            if self.kernel_size not in KERNEL_SIZES:
                raise ConfigError(f"layer {self.name!r}: unsupported kernel size {self.kernel_size}")
            dims = (self.in_channels, self.out_channels, self.out_height, self.out_width,
                    self.stride_step)
        elif kind is LayerKind.FC:
            dims = (self.in_features, self.out_features)
        else:
            if self.dimension is None:
                object.__setattr__(self, "dimension", DEFAULT_ENCODER_DIM)
            dims = (self.in_features, self.dimension)
        for d in dims:
            if not isinstance(d, int) or isinstance(d, bool) or d < 1:
                raise ConfigError(f"layer {self.name!r}: dimensions must be integers >= 1, got {dims}")

    @property
    def input_features(self) -> int:
        if self.kind is LayerKind.CONV:
            return self.in_channels
        return self.in_features

    @property
    def output_features(self) -> int:
        """Feature count seen by a following FC/Encoder after flattening."""
        if self.kind is LayerKind.CONV:
            if self.pooled:
                return self.out_channels
            return self.out_channels * self.out_height * self.out_width
        if self.kind is LayerKind.FC:
            return self.out_features
        return self.dimension

    @property
    def weight_count(self) -> int:
        if self.kind is LayerKind.CONV:
            return self.kernel_size ** 2 * self.in_channels * self.out_channels
        if self.kind is LayerKind.FC:
            return self.in_features * self.out_features
        return self.in_features * self.dimension

    @property
    def macs(self) -> int:
        if self.kind is LayerKind.CONV:
            return self.weight_count * self.out_height * self.out_width
        return self.weight_count

    def to_dict(self) -> dict[str, Any]:
        d: dict[str, Any] = {"kind": self.kind.value}
        if self.name:
            d["name"] = self.name
        if self.kind is LayerKind.CONV:
            d.update(kernel_size=self.kernel_size, in_channels=self.in_channels,
                     out_channels=self.out_channels, out_height=self.out_height,
                     out_width=self.out_width, stride_step=self.stride_step)
            if self.source is not None:
                d["source"] = self.source
            if self.pooled:
                d["pooled"] = True
        elif self.kind is LayerKind.FC:
            d.update(in_features=self.in_features, out_features=self.out_features)
        else:
            d.update(in_features=self.in_features, dimension=self.dimension)
        return d

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "LayerSpec":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown layer keys: {sorted(unknown)}")
        if "kind" not in d:
            raise ConfigError("layer entry missing 'kind'")
        try:
            kind = LayerKind(d["kind"])
        except ValueError:
            raise ConfigError(f"unknown layer kind {d['kind']!r}") from None
        return cls(**{**d, "kind": kind})


@dataclass(frozen=True)
class OCBGeometry:
    banks: int = 96
    bank_rows: int = 12
    bank_cols: int = 8
    arms_per_bank: int = 6
    mrs_per_arm: int = 9
    wavelength_channels: int = 9

    def __post_init__(self) -> None:
        for f in fields(self):
            v = getattr(self, f.name)
            if not isinstance(v, int) or v < 1:
                raise ConfigError(f"geometry.{f.name} must be an integer >= 1, got {v!r}")
        if self.banks != self.bank_rows * self.bank_cols:
            raise ConfigError(
                f"banks ({self.banks}) != bank_rows*bank_cols ({self.bank_rows}*{self.bank_cols})"
            )
        if self.wavelength_channels < self.mrs_per_arm:
            raise ConfigError("each MR in an arm needs its own wavelength channel")

    @property
    def total_arms(self) -> int:
        return self.banks * self.arms_per_bank

    @property
    def mrs_per_bank(self) -> int:
        return self.arms_per_bank * self.mrs_per_arm

    @property
    def total_mrs(self) -> int:
        return self.banks * self.mrs_per_bank


@dataclass(frozen=True)
class MemorySpec:
    nwm_bytes: float = 5.5 * MIB
    hemw_bytes: float = 1 * MIB
    activation_buffer_bytes: float = 1 * MIB

    def __post_init__(self) -> None:
        for f in fields(self):
            v = getattr(self, f.name)
            if not math.isfinite(v) or v < 0:
                raise ConfigError(f"memory.{f.name} must be finite and >= 0")


@dataclass(frozen=True)
class NetworkSpec:
    name: str
    layers: tuple[LayerSpec, ...]
    precision: PrecisionConfig = field(default_factory=PrecisionConfig)
    geometry: OCBGeometry = field(default_factory=OCBGeometry)
    memory: MemorySpec = field(default_factory=MemorySpec)

    def __post_init__(self) -> None:
        object.__setattr__(self, "layers", tuple(self.layers))
        validate_topology(self.layers)

    def with_precision(self, precision: PrecisionConfig) -> "NetworkSpec":
        return replace(self, precision=precision)

    @property
    def encoder(self) -> LayerSpec | None:
        if self.layers and self.layers[-1].kind is LayerKind.ENCODER:
            return self.layers[-1]
        return None

    def to_dict(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "precision": self.precision.to_dict(),
            "layers": [layer.to_dict() for layer in self.layers],
            "geometry": asdict(self.geometry),
            "memory": asdict(self.memory),
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "NetworkSpec":
        if not isinstance(d, dict):
            raise ConfigError("network config must be a JSON object")
        missing = {"name", "layers"} - set(d)
        if missing:
            raise ConfigError(f"network config missing keys: {sorted(missing)}")
        unknown = set(d) - {"name", "precision", "layers", "geometry", "memory"}
        if unknown:
            raise ConfigError(f"unknown network keys: {sorted(unknown)}")
        try:
            precision = PrecisionConfig(**d.get("precision", {}))
            geometry = OCBGeometry(**d.get("geometry", {}))
            memory = MemorySpec(**d.get("memory", {}))
        except TypeError as exc:
            raise ConfigError(str(exc)) from None
        if not isinstance(d["layers"], list):
            raise ConfigError("'layers' must be a list")
        layers = tuple(LayerSpec.from_dict(x) for x in d["layers"])
        return cls(name=str(d["name"]), layers=layers, precision=precision,
                   geometry=geometry, memory=memory)


def validate_topology(layers: Iterable[LayerSpec]) -> None:
    layers = list(layers)
    for i, layer in enumerate(layers):
        if layer.kind is LayerKind.ENCODER and i != len(layers) - 1:
            raise ConfigError(f"layer {i}: the Encoder must be the last layer")
        if i == 0:
            if layer.source is not None:
                raise ConfigError("layer 0 cannot name a source layer")
            continue
        src = i - 1 if layer.source is None else layer.source
        if not 0 <= src < i:
            raise ConfigError(f"layer {i}: source {layer.source} must precede it")
        prev = layers[src]
        if layer.kind is LayerKind.CONV:
            if prev.kind is not LayerKind.CONV or prev.pooled:
                raise ConfigError(f"layer {i}: a Conv must follow an unpooled Conv")
            if layer.in_channels != prev.out_channels:
                raise ConfigError(
                    f"layer {i}: in_channels {layer.in_channels} != "
                    f"source out_channels {prev.out_channels}"
                )
        elif layer.in_features != prev.output_features:
            raise ConfigError(
                f"layer {i}: in_features {layer.in_features} != "
                f"source output features {prev.output_features}"
            )


def load_network(path: str | Path) -> NetworkSpec:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: malformed JSON ({exc.msg} at line {exc.lineno})") from None
    return NetworkSpec.from_dict(data)


def dump_network(net: NetworkSpec, path: str | Path) -> None:
    Path(path).write_text(json.dumps(net.to_dict(), indent=2) + "\n")


def resnet18_preset(precision: PrecisionConfig | None = None,
                    encoder_dim: int = DEFAULT_ENCODER_DIM,
                    num_classes: int | None = None) -> NetworkSpec:
    """ResNet-18 backbone (224x224 input) followed by a 512-feature encoder.

    The classifier head is dropped: the encoder consumes the pooled 512-wide
    feature vector directly.  ``num_classes`` is accepted for API symmetry but
    a head cannot precede the encoder, so passing it raises.
    """
    if encoder_dim < 1:
        raise ConfigError("encoder_dim must be >= 1")
    if num_classes is not None:
        raise ConfigError("an FC head cannot sit between the backbone and the encoder")
    layers: list[LayerSpec] = [LayerSpec.conv(7, 3, 64, 112, stride_step=2, name="conv1")]
    cin, size = 64, 56
    for stage, cout in enumerate((64, 128, 256, 512), start=1):
        for block in range(2):
            stride = 2 if (stage > 1 and block == 0) else 1
            if stride == 2:
                size //= 2
            block_input = len(layers) - 1
            prefix = f"layer{stage}.{block}"
            layers.append(LayerSpec.conv(3, cin, cout, size, stride_step=stride,
                                         name=f"{prefix}.conv1"))
            last = stage == 4 and block == 1
            layers.append(LayerSpec.conv(3, cout, cout, size, name=f"{prefix}.conv2",
                                         pooled=last))
            if cin != cout:
                layers.append(LayerSpec.conv(1, cin, cout, size, stride_step=2,
                                             name=f"{prefix}.downsample",
                                             source=block_input))
            cin = cout
    layers.append(LayerSpec.encoder(512, encoder_dim, name="encoder"))
    return NetworkSpec("resnet18", tuple(layers), precision or PrecisionConfig(4, 4))


PRESETS = {"resnet18": resnet18_preset}


def resolve_network(ref: str, precision: PrecisionConfig | None = None) -> NetworkSpec:
    """Return a preset by name, or load ``ref`` as a JSON config path."""
    if ref in PRESETS:
        net = PRESETS[ref]()
    else:
        net = load_network(ref)
    return net.with_precision(precision) if precision is not None else net


def validate_memory(net: NetworkSpec, mem: MemorySpec | None = None) -> list[str]:
    """Return capacity diagnostics; an empty list means the network fits."""
    mem = mem or net.memory
    wb = net.precision.weight_bits
    problems = []
    for i, layer in enumerate(net.layers):
        need = layer.weight_count * wb / 8
        if layer.kind is LayerKind.ENCODER:
            if need > mem.hemw_bytes:
                problems.append(
                    f"layer {i} ({layer.name or 'encoder'}): encoding matrix needs "
                    f"{need:.0f} B > HEMW {mem.hemw_bytes:.0f} B"
                )
        elif need > mem.nwm_bytes:
            problems.append(
                f"layer {i} ({layer.name or layer.kind.value}): weights need "
                f"{need:.0f} B > NWM {mem.nwm_bytes:.0f} B"
            )
    return problems
