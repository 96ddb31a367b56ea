"""Export labeled datasets from .npz archives or plain numeric CSV.

The output document is the downstream tool's dataset format: a 2-D input
array, integer labels, and a class count.  Values are widened to double
before serialization (exact for any float32 or float16 source) and the
maximum row norm B, the data-radius constant in every bound, is reported.
"""

from __future__ import annotations

import os

import numpy as np

from .manifest import ExportManifest
from .serialize import ExportError, sha256_file, write_json

__all__ = ["export_dataset", "load_dataset_arrays"]

_INPUT_KEYS = ("inputs", "x")
_LABEL_KEYS = ("labels", "y")


def _pick_key(files, candidates, what) -> str:
    found = [k for k in candidates if k in files]
    if not found:
        raise ExportError(
            f"no {what} array found: expected one of {list(candidates)}, "
            f"archive has {sorted(files)}"
        )
    return found[0]


def _arrays_from_npz(path) -> tuple:
    try:
        archive = np.load(path)
    except Exception as e:
        raise ExportError(f"{path}: could not read npz archive ({e})")
    with archive:
        files = list(archive.files)
        x_key = _pick_key(files, _INPUT_KEYS, "input")
        y_key = _pick_key(files, _LABEL_KEYS, "label")
        inputs = np.asarray(archive[x_key])
        labels = np.asarray(archive[y_key])
        dropped = [
            f"{k}: extra archive entry, not exported"
            for k in files
            if k not in (x_key, y_key)
        ]
    return inputs, labels, dropped


def _arrays_from_csv(path) -> tuple:
    try:
        table = np.loadtxt(path, delimiter=",", ndmin=2, dtype=np.float64)
    except ValueError as e:
        raise ExportError(f"{path}: not a plain numeric CSV ({e})")
    if table.shape[1] < 2:
        raise ExportError(
            f"{path}: need at least one feature column plus the final label "
            f"column, got {table.shape[1]} column(s)"
        )
    return table[:, :-1], table[:, -1], []


def load_dataset_arrays(path) -> tuple:
    """(inputs, labels, dropped) from an .npz archive or a numeric CSV whose
    last column is the label."""
    if not os.path.exists(path):
        raise ExportError(f"{path}: no such file")
    suffix = os.path.splitext(str(path))[1].lower()
    if suffix == ".npz":
        return _arrays_from_npz(path)
    if suffix == ".csv":
        return _arrays_from_csv(path)
    raise ExportError(
        f"{path}: unsupported dataset extension {suffix!r} (expected .npz or .csv)"
    )


def _as_labels(labels) -> np.ndarray:
    arr = np.asarray(labels)
    if arr.ndim != 1:
        raise ExportError(f"labels must be a 1-D vector, got shape {tuple(arr.shape)}")
    if arr.size == 0:
        raise ExportError("labels are empty")
    if arr.dtype == object or np.iscomplexobj(arr) or arr.dtype.kind == "b":
        raise ExportError(f"labels of dtype {arr.dtype} are not supported")
    if arr.dtype.kind == "f":
        bad = [i for i, v in enumerate(arr) if not (np.isfinite(v) and float(v).is_integer())]
        if bad:
            raise ExportError(f"labels must be integers; rows {bad} are not")
        arr = arr.astype(np.int64)
    elif arr.dtype.kind not in ("i", "u"):
        raise ExportError(f"labels of dtype {arr.dtype} are not supported")
    arr = arr.astype(np.int64)
    negative = [int(i) for i in np.nonzero(arr < 0)[0]]
    if negative:
        raise ExportError(f"labels must be nonnegative; rows {negative} are not")
    return arr


def export_dataset(
    inputs, labels, out_path, num_classes=None, source_path=None, dropped=()
) -> ExportManifest:
    """Write the dataset JSON and its manifest sidecar; returns the manifest.

    num_classes defaults to max(labels) + 1 and may only be widened.  Any
    source components skipped upstream (extra archive entries) are passed
    through ``dropped`` so the manifest records them.
    """
    x = np.asarray(inputs)
    if x.dtype == object or np.iscomplexobj(x):
        raise ExportError(f"inputs of dtype {x.dtype} are not supported")
    if x.ndim != 2 or x.shape[0] == 0 or x.shape[1] == 0:
        raise ExportError(
            f"inputs must be a nonempty 2-D array of rows, got shape {tuple(x.shape)}"
        )
    x = x.astype(np.float64)
    y = _as_labels(labels)
    if y.shape[0] != x.shape[0]:
        raise ExportError(
            f"length mismatch: {x.shape[0]} input rows but {y.shape[0]} labels"
        )
    bad_rows = [int(i) for i in np.nonzero(~np.isfinite(x).all(axis=1))[0]]
    if bad_rows:
        raise ExportError(f"inputs contain non-finite values in rows {bad_rows}")

    needed = int(y.max()) + 1
    if num_classes is None:
        num_classes = needed
    elif num_classes < needed:
        raise ExportError(
            f"num_classes={num_classes} is too small for labels up to {int(y.max())}"
        )

    radius = float(np.max(np.linalg.norm(x, axis=1)))
    doc = {
        "inputs": [[float(v) for v in row] for row in x],
        "labels": [int(v) for v in y],
        "num_classes": int(num_classes),
    }
    write_json(doc, out_path)
    manifest = ExportManifest(
        kind="dataset",
        source_framework=f"numpy {np.__version__}",
        source_digest=sha256_file(source_path) if source_path is not None else None,
        shapes=(x.shape,),
        dropped=tuple(dropped),
        extra={
            "rows": int(x.shape[0]),
            "dim": int(x.shape[1]),
            "num_classes": int(num_classes),
            "max_row_norm": radius,
        },
    )
    manifest.write(out_path)
    return manifest
