"""Weight extraction from state dicts and npz archives (no torch needed)."""

import json

import numpy as np
import pytest

pytest.importorskip("ffexport")

from ffexport.checkpoint import (
    WEIGHT_FORMAT_VERSION,
    export_weights,
    layers_from_state_dict,
)
from ffexport.serialize import ExportError


def chain_state(rng, *dims):
    """State dict for a dims[0] -> dims[1] -> ... chain of random layers."""
    state = {}
    for i in range(len(dims) - 1):
        state[f"{2 * i}.weight"] = rng.standard_normal((dims[i + 1], dims[i]))
    return state


def test_export_values_survive_serialization_exactly(tmp_path):
    rng = np.random.default_rng(1)
    state = chain_state(rng, 3, 7, 2)
    out = tmp_path / "w.json"
    export_weights(state, out)
    doc = json.loads(out.read_text())
    assert doc["format_version"] == WEIGHT_FORMAT_VERSION
    assert len(doc["layers"]) == 2
    for layer, (_, w) in zip(doc["layers"], sorted(state.items())):
        assert layer["rows"] == w.shape[0]
        assert layer["cols"] == w.shape[1]
        parsed = np.asarray(layer["data"]).reshape(w.shape)
        assert np.array_equal(parsed, w)


def test_float32_source_widens_exactly(tmp_path):
    rng = np.random.default_rng(2)
    w32 = rng.standard_normal((4, 3)).astype(np.float32)
    out = tmp_path / "w.json"
    export_weights({"0.weight": w32}, out)
    parsed = np.asarray(json.loads(out.read_text())["layers"][0]["data"]).reshape(4, 3)
    assert np.array_equal(parsed, w32.astype(np.float64))


def test_npz_source_in_archive_order(tmp_path):
    rng = np.random.default_rng(3)
    first = rng.standard_normal((5, 2))
    second = rng.standard_normal((3, 5))
    src = tmp_path / "chain.npz"
    np.savez(src, layer0=first, layer1=second)
    out = tmp_path / "w.json"
    manifest = export_weights(src, out)
    assert manifest.shapes == ((5, 2), (3, 5))
    assert manifest.source_framework.startswith("numpy")
    assert manifest.source_digest is not None
    doc = json.loads(out.read_text())
    assert np.array_equal(np.asarray(doc["layers"][0]["data"]).reshape(5, 2), first)


def test_npz_bias_named_key_rejected(tmp_path):
    src = tmp_path / "b.npz"
    np.savez(src, **{"0.weight": np.ones((2, 2)), "0.bias": np.ones((1, 2))})
    with pytest.raises(ExportError, match=r"0\.bias"):
        export_weights(src, tmp_path / "w.json")


def test_npz_one_dimensional_array_rejected(tmp_path):
    src = tmp_path / "v.npz"
    np.savez(src, w0=np.ones(4))
    with pytest.raises(ExportError, match="w0"):
        export_weights(src, tmp_path / "w.json")


def test_nested_harness_checkpoint_drops_metadata():
    rng = np.random.default_rng(4)
    inner = chain_state(rng, 2, 4, 2)
    bundle = {"epoch": 12, "state_dict": inner, "optimizer": {"lr": 0.1}}
    mats, names, dropped = layers_from_state_dict(bundle)
    assert len(mats) == 2
    assert names == ["0.weight", "2.weight"]
    assert any(entry.startswith("epoch") for entry in dropped)
    assert any(entry.startswith("optimizer") for entry in dropped)


@pytest.mark.parametrize(
    "key,pattern",
    [
        ("1.bias", r"1\.bias"),
        ("bn.running_mean", "normalization"),
        ("bn.num_batches_tracked", "normalization"),
        ("head.scale", "unsupported checkpoint entry"),
    ],
)
def test_offending_keys_rejected_by_name(key, pattern):
    state = {"0.weight": np.ones((2, 2)), key: np.ones(2)}
    with pytest.raises(ExportError, match=pattern):
        layers_from_state_dict(state)


def test_conv_weight_rejected():
    state = {"conv.weight": np.ones((4, 2, 3, 3))}
    with pytest.raises(ExportError, match="convolution"):
        layers_from_state_dict(state)


def test_one_dimensional_weight_rejected():
    state = {"ln.weight": np.ones(8)}
    with pytest.raises(ExportError, match="2-dimensional"):
        layers_from_state_dict(state)


def test_shape_chain_break_names_both_layers():
    state = {"0.weight": np.ones((4, 2)), "2.weight": np.ones((3, 5))}
    with pytest.raises(ExportError, match="0.weight.*2.weight"):
        layers_from_state_dict(state)


def test_non_finite_weight_rejected():
    w = np.ones((2, 2))
    w[0, 1] = np.nan
    with pytest.raises(ExportError, match="non-finite"):
        layers_from_state_dict({"0.weight": w})


def test_empty_source_rejected():
    with pytest.raises(ExportError, match="no layer weights"):
        layers_from_state_dict({})


def test_complex_values_rejected():
    state = {"0.weight": np.ones((2, 2), dtype=np.complex128)}
    with pytest.raises(ExportError, match="dtype"):
        layers_from_state_dict(state)


def test_manifest_sidecar_written(tmp_path):
    rng = np.random.default_rng(5)
    out = tmp_path / "w.json"
    export_weights(chain_state(rng, 2, 3), out)
    sidecar = json.loads((tmp_path / "w.json.manifest.json").read_text())
    assert sidecar["kind"] == "weights"
    assert sidecar["shapes"] == [[3, 2]]
    assert sidecar["source_digest"] is None
    assert sidecar["dropped"] == []
    assert "not recorded by the source" in sidecar["activations"]


def test_export_is_deterministic(tmp_path):
    rng = np.random.default_rng(6)
    state = chain_state(rng, 3, 3, 3)
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    export_weights(state, a)
    export_weights(state, b)
    assert a.read_bytes() == b.read_bytes()
    assert (tmp_path / "a.json.manifest.json").read_bytes() == \
        (tmp_path / "b.json.manifest.json").read_bytes()


def test_unsupported_extension_rejected(tmp_path):
    src = tmp_path / "w.onnx"
    src.write_bytes(b"\x00")
    with pytest.raises(ExportError, match="extension"):
        export_weights(src, tmp_path / "w.json")


def test_missing_file_rejected(tmp_path):
    with pytest.raises(ExportError, match="no such file"):
        export_weights(tmp_path / "absent.pt", tmp_path / "w.json")


def test_unsupported_source_object_rejected(tmp_path):
    with pytest.raises(ExportError, match="unsupported source"):
        export_weights(42, tmp_path / "w.json")
