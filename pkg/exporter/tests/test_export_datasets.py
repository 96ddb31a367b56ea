"""Dataset export: sources, validation, widening, and the radius report."""

import json

import numpy as np
import pytest

pytest.importorskip("ffexport")

from ffexport.datasets import export_dataset, load_dataset_arrays
from ffexport.serialize import ExportError


def test_unit_rows_report_radius_one(tmp_path):
    out = tmp_path / "d.json"
    manifest = export_dataset(np.eye(3), np.array([0, 1, 2]), out)
    assert manifest.extra["max_row_norm"] == 1.0
    assert manifest.extra["num_classes"] == 3
    doc = json.loads(out.read_text())
    assert doc == {
        "inputs": [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
        "labels": [0, 1, 2],
        "num_classes": 3,
    }


def test_non_finite_rows_listed(tmp_path):
    x = np.ones((4, 2))
    x[1, 0] = np.nan
    x[3, 1] = np.inf
    with pytest.raises(ExportError, match=r"rows \[1, 3\]"):
        export_dataset(x, np.zeros(4, dtype=int), tmp_path / "d.json")


def test_length_mismatch_rejected(tmp_path):
    with pytest.raises(ExportError, match="length mismatch"):
        export_dataset(np.ones((3, 2)), np.zeros(2, dtype=int), tmp_path / "d.json")


def test_non_integral_float_labels_rejected(tmp_path):
    with pytest.raises(ExportError, match=r"rows \[1\]"):
        export_dataset(np.ones((2, 2)), np.array([0.0, 1.5]), tmp_path / "d.json")


def test_negative_labels_rejected(tmp_path):
    with pytest.raises(ExportError, match="nonnegative"):
        export_dataset(np.ones((2, 2)), np.array([0, -1]), tmp_path / "d.json")


def test_bool_labels_rejected(tmp_path):
    with pytest.raises(ExportError, match="dtype"):
        export_dataset(np.ones((2, 2)), np.array([True, False]), tmp_path / "d.json")


def test_two_dimensional_labels_rejected(tmp_path):
    with pytest.raises(ExportError, match="1-D"):
        export_dataset(np.ones((2, 2)), np.zeros((2, 1), dtype=int), tmp_path / "d.json")


def test_num_classes_widening_and_floor(tmp_path):
    out = tmp_path / "d.json"
    manifest = export_dataset(np.ones((2, 2)), np.array([0, 1]), out, num_classes=5)
    assert manifest.extra["num_classes"] == 5
    with pytest.raises(ExportError, match="too small"):
        export_dataset(np.ones((2, 2)), np.array([0, 3]), out, num_classes=2)


def test_float32_inputs_widen_exactly(tmp_path):
    rng = np.random.default_rng(0)
    x32 = rng.standard_normal((5, 3)).astype(np.float32)
    out = tmp_path / "d.json"
    export_dataset(x32, np.zeros(5, dtype=int), out)
    doc = json.loads(out.read_text())
    assert np.array_equal(np.asarray(doc["inputs"]), x32.astype(np.float64))


def test_empty_or_object_inputs_rejected(tmp_path):
    with pytest.raises(ExportError, match="2-D"):
        export_dataset(np.ones((0, 2)), np.zeros(0, dtype=int), tmp_path / "d.json")
    with pytest.raises(ExportError, match="2-D"):
        export_dataset(np.ones(4), np.zeros(4, dtype=int), tmp_path / "d.json")
    with pytest.raises(ExportError, match="dtype"):
        export_dataset(
            np.array([["a", "b"]], dtype=object), np.zeros(1, dtype=int),
            tmp_path / "d.json",
        )


def test_npz_source_with_aliases(tmp_path):
    rng = np.random.default_rng(1)
    x = rng.standard_normal((4, 2))
    y = np.array([0, 1, 0, 1])
    for keys in ({"inputs": x, "labels": y}, {"x": x, "y": y}):
        src = tmp_path / "d.npz"
        np.savez(src, **keys)
        got_x, got_y, dropped = load_dataset_arrays(src)
        assert np.array_equal(got_x, x)
        assert np.array_equal(got_y, y)
        assert dropped == []


def test_npz_extra_entries_logged(tmp_path):
    src = tmp_path / "d.npz"
    np.savez(src, inputs=np.ones((2, 2)), labels=np.array([0, 1]), weights=np.ones(2))
    _, _, dropped = load_dataset_arrays(src)
    assert len(dropped) == 1
    assert dropped[0].startswith("weights")


def test_npz_missing_labels_lists_archive_keys(tmp_path):
    src = tmp_path / "d.npz"
    np.savez(src, inputs=np.ones((2, 2)))
    with pytest.raises(ExportError, match="no label array"):
        load_dataset_arrays(src)


def test_csv_source_last_column_is_label(tmp_path):
    src = tmp_path / "d.csv"
    src.write_text("1.5,2.25,0\n-0.5,4.0,1\n")
    x, y, dropped = load_dataset_arrays(src)
    assert np.array_equal(x, [[1.5, 2.25], [-0.5, 4.0]])
    assert np.array_equal(y, [0.0, 1.0])
    assert dropped == []


def test_csv_single_column_rejected(tmp_path):
    src = tmp_path / "d.csv"
    src.write_text("1.0\n2.0\n")
    with pytest.raises(ExportError, match="label"):
        load_dataset_arrays(src)


def test_csv_non_numeric_rejected(tmp_path):
    src = tmp_path / "d.csv"
    src.write_text("a,b,c\n1,2,0\n")
    with pytest.raises(ExportError, match="numeric CSV"):
        load_dataset_arrays(src)


def test_missing_or_unknown_source_rejected(tmp_path):
    with pytest.raises(ExportError, match="no such file"):
        load_dataset_arrays(tmp_path / "absent.npz")
    src = tmp_path / "d.parquet"
    src.write_bytes(b"\x00")
    with pytest.raises(ExportError, match="extension"):
        load_dataset_arrays(src)


def test_manifest_sidecar_and_determinism(tmp_path):
    rng = np.random.default_rng(2)
    x = rng.standard_normal((6, 3))
    y = rng.integers(0, 2, 6)
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    export_dataset(x, y, a)
    export_dataset(x, y, b)
    assert a.read_bytes() == b.read_bytes()
    sidecar = json.loads((tmp_path / "a.json.manifest.json").read_text())
    assert sidecar["kind"] == "dataset"
    assert sidecar["rows"] == 6
    assert sidecar["dim"] == 3
    assert sidecar["max_row_norm"] == float(np.max(np.linalg.norm(x, axis=1)))
