import json

import pytest
from hypothesis import given, strategies as st

from ocbsim.model import (KERNEL_SIZES, ConfigError, LayerKind, LayerSpec, MemorySpec, NetworkSpec,
                          OCBGeometry, PrecisionConfig, dump_network, load_network, resnet18_preset,
                          resolve_network, validate_memory)


def write(tmp_path, layers, **extra):
    p = tmp_path / "net.json"
    p.write_text(json.dumps({"name": "t", "layers": layers, **extra}))
    return p


def test_precision_flags_study_only():
    assert not PrecisionConfig(3, 4).study_only
    assert PrecisionConfig(32, 32).study_only
    assert PrecisionConfig(4, 8).study_only
    assert PrecisionConfig.parse("3:4") == PrecisionConfig(3, 4)
    assert PrecisionConfig.parse("[2:4]").label() == "2:4"


@pytest.mark.parametrize("w,a", [(5, 4), (4, 2), (0, 4)])
def test_precision_rejects_unsupported_widths(w, a):
    with pytest.raises(ConfigError):
        PrecisionConfig(w, a)


def test_precision_parse_error():
    with pytest.raises(ConfigError):
        PrecisionConfig.parse("four")


def test_minimal_network_file(tmp_path):
    p = write(tmp_path, [{"kind": "Conv", "kernel_size": 3, "in_channels": 1, "out_channels": 1,
                          "out_height": 4, "out_width": 4}])
    net = load_network(p)
    assert len(net.layers) == 1
    assert net.layers[0].kind is LayerKind.CONV


def test_conv_then_mismatched_fc_is_rejected(tmp_path):
    p = write(tmp_path, [
        {"kind": "Conv", "kernel_size": 3, "in_channels": 1, "out_channels": 2, "out_height": 4, "out_width": 4},
        {"kind": "FullyConnected", "in_features": 31, "out_features": 10},
    ])
    with pytest.raises(ConfigError):
        load_network(p)


def test_conv_then_matching_fc_is_accepted(tmp_path):
    p = write(tmp_path, [
        {"kind": "Conv", "kernel_size": 3, "in_channels": 1, "out_channels": 2, "out_height": 4, "out_width": 4},
        {"kind": "FullyConnected", "in_features": 32, "out_features": 10},
    ])
    assert len(load_network(p).layers) == 2


def test_malformed_file(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    with pytest.raises(ConfigError):
        load_network(p)


def test_encoder_must_be_last():
    with pytest.raises(ConfigError):
        NetworkSpec("x", (LayerSpec.encoder(9, 16), LayerSpec.fc(16, 2)))


def test_illegal_kernel():
    with pytest.raises(ConfigError):
        LayerSpec.conv(4, 1, 1, 4)


def test_encoder_default_dimension():
    assert LayerSpec.encoder(512).dimension == 1024


def test_resnet18_has_21_layers():
    net = resnet18_preset()
    assert len(net.layers) == 21
    assert sum(l.kind is LayerKind.CONV for l in net.layers) == 20
    assert net.layers[-1].kind is LayerKind.ENCODER
    assert net.layers[0].kernel_size == 7


def test_resnet18_weights_fit_nwm_at_4_bits():
    net = resnet18_preset(PrecisionConfig(4, 4), encoder_dim=1024)
    total_bits = sum(l.weight_count for l in net.layers if l.kind is not LayerKind.ENCODER) * 4
    assert total_bits / 8 <= 5.5 * 2 ** 20


def test_resnet18_encoder_entries():
    enc = resnet18_preset(encoder_dim=1024).layers[-1]
    assert enc.in_features * enc.dimension == 524288
    assert enc.weight_count == 524288


def test_precision_does_not_alter_topology():
    a = resnet18_preset(PrecisionConfig(4, 4))
    b = resnet18_preset(PrecisionConfig(3, 4))
    assert a.layers == b.layers
    assert b.precision.weight_bits == 3


def test_resnet18_macs_near_1_8e9():
    net = resnet18_preset()
    macs = sum(l.macs for l in net.layers if l.kind is not LayerKind.ENCODER)
    assert 1.7e9 < macs < 1.9e9


@pytest.mark.parametrize("wb", [2, 3, 4])
def test_resnet18_memory_ok(wb):
    assert validate_memory(resnet18_preset(PrecisionConfig(wb, 4))) == []


def test_memory_violation_diagnostic():
    net = NetworkSpec("fc", (LayerSpec.fc(1000, 1000),), PrecisionConfig(32, 32))
    diags = validate_memory(net, MemorySpec(nwm_bytes=1024))
    assert len(diags) == 1 and "NWM" in diags[0]
    small = NetworkSpec("fc", (LayerSpec.fc(10, 10),), PrecisionConfig(32, 32))
    assert validate_memory(small, MemorySpec(nwm_bytes=1024)) == []


def test_empty_network_memory_ok():
    assert validate_memory(NetworkSpec("empty", ())) == []


def test_geometry_defaults():
    g = OCBGeometry()
    assert g.banks == g.bank_rows * g.bank_cols == 96
    assert g.total_mrs == 5184
    assert g.total_arms == 576


def test_geometry_rejects_inconsistent_banks():
    with pytest.raises(ConfigError):
        OCBGeometry(banks=95)


def test_round_trip(tmp_path):
    net = resnet18_preset(PrecisionConfig(3, 4))
    dump_network(net, tmp_path / "r.json")
    assert load_network(tmp_path / "r.json") == net


def test_resolve_preset_and_path(tmp_path):
    assert resolve_network("resnet18").name == "resnet18"
    dump_network(resnet18_preset(), tmp_path / "r.json")
    assert resolve_network(str(tmp_path / "r.json"), PrecisionConfig(2, 4)).precision.weight_bits == 2


conv_layers = st.builds(
    lambda k, ci, co, h, w: LayerSpec.conv(k, ci, co, h, w),
    st.sampled_from(KERNEL_SIZES), st.integers(1, 64), st.integers(1, 64),
    st.integers(1, 32), st.integers(1, 32))


@given(conv_layers)
def test_layer_round_trip_property(layer):
    assert LayerSpec.from_dict(layer.to_dict()) == layer


@given(st.lists(conv_layers, min_size=1, max_size=1), st.integers(1, 64))
def test_network_round_trip_property(layers, d):
    head = layers[0]
    net = NetworkSpec("p", (head, LayerSpec.encoder(head.output_features, d)))
    assert NetworkSpec.from_dict(json.loads(json.dumps(net.to_dict()))) == net
