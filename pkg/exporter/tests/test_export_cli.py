"""The export-weights and export-dataset command lines."""

import json
import shutil
import subprocess

import numpy as np
import pytest

pytest.importorskip("ffexport")

from ffexport.cli import export_dataset_main, export_weights_main


@pytest.fixture()
def chain_npz(tmp_path):
    rng = np.random.default_rng(0)
    src = tmp_path / "chain.npz"
    np.savez(
        src,
        layer0=rng.standard_normal((4, 2)),
        layer1=rng.standard_normal((3, 4)),
    )
    return src


def test_export_weights_success(chain_npz, tmp_path, capsys):
    out = tmp_path / "w.json"
    assert export_weights_main([str(chain_npz), str(out)]) == 0
    captured = capsys.readouterr()
    assert "4x2" in captured.out and "3x4" in captured.out
    assert f"{out}.manifest.json" in captured.out
    assert out.exists()
    assert (tmp_path / "w.json.manifest.json").exists()


def test_export_weights_rejection_writes_nothing(tmp_path, capsys):
    src = tmp_path / "bad.npz"
    np.savez(src, **{"0.weight": np.ones((2, 2)), "0.bias": np.ones((1, 2))})
    out = tmp_path / "w.json"
    assert export_weights_main([str(src), str(out)]) == 1
    captured = capsys.readouterr()
    assert "0.bias" in captured.err
    assert not out.exists()


def test_export_weights_missing_source(tmp_path, capsys):
    assert export_weights_main([str(tmp_path / "gone.pt"), str(tmp_path / "w.json")]) == 1
    assert "no such file" in capsys.readouterr().err


def test_export_dataset_success_reports_radius(tmp_path, capsys):
    src = tmp_path / "d.npz"
    np.savez(src, inputs=np.eye(2), labels=np.array([0, 1]))
    out = tmp_path / "d.json"
    assert export_dataset_main([str(src), str(out)]) == 0
    captured = capsys.readouterr()
    assert "B (max row l2 norm) = 1" in captured.out
    doc = json.loads(out.read_text())
    assert doc["num_classes"] == 2


def test_export_dataset_num_classes_flag(tmp_path):
    src = tmp_path / "d.npz"
    np.savez(src, inputs=np.eye(2), labels=np.array([0, 1]))
    out = tmp_path / "d.json"
    assert export_dataset_main([str(src), str(out), "--num-classes", "4"]) == 0
    assert json.loads(out.read_text())["num_classes"] == 4


def test_export_dataset_failure_goes_to_stderr(tmp_path, capsys):
    src = tmp_path / "d.npz"
    x = np.ones((2, 2))
    x[0, 0] = np.nan
    np.savez(src, inputs=x, labels=np.array([0, 1]))
    assert export_dataset_main([str(src), str(tmp_path / "d.json")]) == 1
    assert "rows [0]" in capsys.readouterr().err


def test_reruns_are_byte_identical(chain_npz, tmp_path, capsys):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert export_weights_main([str(chain_npz), str(a)]) == 0
    assert export_weights_main([str(chain_npz), str(b)]) == 0
    capsys.readouterr()
    assert a.read_bytes() == b.read_bytes()


@pytest.mark.parametrize("entry", [export_weights_main, export_dataset_main])
def test_version_flag(entry, capsys):
    with pytest.raises(SystemExit) as exc:
        entry(["--version"])
    assert exc.value.code == 0
    assert "0.1.0" in capsys.readouterr().out


@pytest.mark.parametrize("script", ["export-weights", "export-dataset"])
def test_console_scripts_installed(script):
    path = shutil.which(script)
    if path is None:
        pytest.skip(f"{script} is not on PATH in this environment")
    proc = subprocess.run([path, "--version"], capture_output=True, text=True)
    assert proc.returncode == 0
