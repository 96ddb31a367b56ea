"""Extract a pure linear/ReLU layer chain from framework checkpoints.

Three source shapes are understood: a torch module (Sequential of bias-free
Linear and ReLU), a state dict mapping names to tensors, and an .npz archive
of 2-D arrays in layer order.  A bare state dict records no activations, so
those sources are exported under the declared linear-ReLU alternation that
the downstream tool applies; module sources have their activation pattern
checked explicitly.

Anything that cannot be exported without changing the computed function
raises ExportError naming the offending component.  Components whose
removal is a provable no-op (harness metadata next to a nested state dict,
Identity modules, inference-mode Dropout) are skipped and logged in the
manifest instead.
"""

from __future__ import annotations

import os

import numpy as np

from .manifest import ExportManifest
from .serialize import ExportError, sha256_file, write_json

__all__ = ["export_weights", "layers_from_module", "layers_from_state_dict"]

WEIGHT_FORMAT_VERSION = 1

_NORM_STAT_SUFFIXES = ("running_mean", "running_var", "num_batches_tracked")
_NESTED_KEYS = ("state_dict", "model_state_dict")


def _require_torch():
    try:
        import torch
    except ImportError:
        raise ExportError(
            "reading this source requires torch, which is not installed"
        )
    return torch


def _to_array(name: str, value) -> np.ndarray:
    if hasattr(value, "detach"):
        tensor = value.detach().cpu()
        if str(getattr(tensor, "dtype", "")) == "torch.bfloat16":
            tensor = tensor.float()
        value = tensor.numpy()
    arr = np.asarray(value)
    if arr.dtype == object or np.iscomplexobj(arr):
        raise ExportError(f"{name}: values of dtype {arr.dtype} are not supported")
    return arr.astype(np.float64)


def _check_finite(name: str, arr: np.ndarray) -> None:
    if not np.isfinite(arr).all():
        bad = int(np.count_nonzero(~np.isfinite(arr)))
        raise ExportError(f"{name}: contains {bad} non-finite value(s)")


def _check_chain(mats, names) -> None:
    if not mats:
        raise ExportError("no layer weights found in the source")
    for i in range(1, len(mats)):
        rows_prev = mats[i - 1].shape[0]
        rows, cols = mats[i].shape
        if cols != rows_prev:
            raise ExportError(
                f"shape chain broken between {names[i - 1]} and {names[i]}: "
                f"{mats[i - 1].shape[0]}x{mats[i - 1].shape[1]} feeds "
                f"{rows}x{cols}, which expects {cols} inputs, not {rows_prev}"
            )


def _classify_key(name: str) -> str:
    leaf = name.rsplit(".", 1)[-1]
    if leaf == "weight":
        return "weight"
    if leaf == "bias":
        return "bias"
    if leaf in _NORM_STAT_SUFFIXES:
        return "norm_stat"
    return "other"


def layers_from_state_dict(state) -> tuple:
    """Ordered layer matrices from a name-to-tensor mapping.

    Returns (matrices, names, dropped).  A nested harness checkpoint
    ({"state_dict": ..., "epoch": ...}) is unwrapped with the sibling
    entries logged as dropped.
    """
    dropped = []
    for key in _NESTED_KEYS:
        if key in state and hasattr(state[key], "items"):
            dropped = [
                f"{k}: harness metadata next to {key!r}, not a model component"
                for k in state
                if k != key
            ]
            state = state[key]
            break
    mats = []
    names = []
    for name, value in state.items():
        kind = _classify_key(str(name))
        if kind == "bias":
            raise ExportError(
                f"{name}: bias terms are not supported; the analysis model is "
                "bias-free, so export would change every norm in the bounds"
            )
        if kind == "norm_stat":
            raise ExportError(f"{name}: normalization layers are not supported")
        if kind == "other":
            raise ExportError(f"{name}: unsupported checkpoint entry")
        arr = _to_array(str(name), value)
        if arr.ndim == 4:
            raise ExportError(
                f"{name}: 4-dimensional weight (convolution kernels are not supported)"
            )
        if arr.ndim != 2:
            raise ExportError(
                f"{name}: expected a 2-dimensional linear weight, got shape "
                f"{tuple(arr.shape)}"
            )
        _check_finite(str(name), arr)
        mats.append(arr)
        names.append(str(name))
    _check_chain(mats, names)
    return mats, names, dropped


def layers_from_module(module) -> tuple:
    """Ordered layer matrices from a torch module.

    The module must flatten to Linear (ReLU Linear)* with every Linear
    bias-free: that is the one activation pattern the downstream tool
    applies, so anything else would export to a different function.
    Identity, duplicate ReLU, and Dropout modules are no-ops at inference
    and are skipped with a manifest entry.
    """
    torch = _require_torch()
    nn = torch.nn

    def flatten(m):
        if isinstance(m, nn.Sequential):
            for child in m:
                yield from flatten(child)
        else:
            yield m

    mats = []
    names = []
    dropped = []
    last_was_relu = False
    for pos, m in enumerate(flatten(module)):
        cls = type(m).__name__
        where = f"module {pos} ({cls})"
        if isinstance(m, nn.Linear):
            if m.bias is not None:
                raise ExportError(
                    f"{where}: bias terms are not supported; rebuild the layer "
                    "with bias=False"
                )
            if mats and not last_was_relu:
                raise ExportError(
                    f"{where}: two linear layers without a ReLU between them; "
                    "the exported network would insert one and change the function"
                )
            arr = _to_array(where, m.weight)
            _check_finite(where, arr)
            mats.append(arr)
            names.append(where)
            last_was_relu = False
        elif isinstance(m, nn.ReLU):
            if not mats:
                raise ExportError(
                    f"{where}: ReLU before any linear layer has no exported "
                    "counterpart"
                )
            if last_was_relu:
                dropped.append(f"{where}: duplicate ReLU, a no-op")
                continue
            last_was_relu = True
        elif isinstance(m, nn.Identity):
            dropped.append(f"{where}: Identity, a no-op")
        elif isinstance(m, nn.Dropout):
            dropped.append(f"{where}: Dropout, a no-op at inference")
        else:
            raise ExportError(
                f"{where}: not supported; expected a chain of bias-free Linear "
                "and ReLU layers"
            )
    if mats and last_was_relu:
        raise ExportError(
            "ReLU after the final linear layer: the exported network ends "
            "linearly, so the functions would differ"
        )
    _check_chain(mats, names)
    return mats, names, dropped


def _layers_from_npz(path) -> tuple:
    try:
        archive = np.load(path)
    except Exception as e:
        raise ExportError(f"{path}: could not read npz archive ({e})")
    with archive:
        mats = []
        names = []
        for name in archive.files:
            if _classify_key(name) == "bias":
                raise ExportError(
                    f"{name}: bias terms are not supported; the analysis model "
                    "is bias-free, so export would change every norm in the bounds"
                )
            arr = _to_array(name, archive[name])
            if arr.ndim != 2:
                raise ExportError(
                    f"{name}: expected a 2-dimensional layer weight in archive "
                    f"order, got shape {tuple(arr.shape)}"
                )
            _check_finite(name, arr)
            mats.append(arr)
            names.append(name)
    _check_chain(mats, names)
    return mats, names, []


def _load_checkpoint_file(path) -> tuple:
    """Returns (matrices, names, dropped, framework) for a checkpoint path."""
    suffix = os.path.splitext(str(path))[1].lower()
    if suffix == ".npz":
        mats, names, dropped = _layers_from_npz(path)
        return mats, names, dropped, f"numpy {np.__version__}"
    if suffix in (".pt", ".pth"):
        torch = _require_torch()
        try:
            state = torch.load(path, map_location="cpu", weights_only=True)
        except Exception as e:
            raise ExportError(
                f"{path}: could not read as a tensor checkpoint ({e}); "
                "save the model's state_dict rather than the pickled module"
            )
        if not hasattr(state, "items"):
            raise ExportError(
                f"{path}: checkpoint holds {type(state).__name__}, not a state dict"
            )
        mats, names, dropped = layers_from_state_dict(state)
        return mats, names, dropped, f"torch {torch.__version__}"
    raise ExportError(
        f"{path}: unsupported checkpoint extension {suffix!r} "
        "(expected .pt, .pth, or .npz)"
    )


def export_weights(source, out_path) -> ExportManifest:
    """Write the weight JSON and its manifest sidecar; returns the manifest.

    ``source`` may be a checkpoint path (.pt/.pth/.npz), a state-dict-like
    mapping, or a torch module.
    """
    digest = None
    checked = "verified structurally: bias-free linear layers with ReLU between them"
    declared = (
        "not recorded by the source; exported as the linear-ReLU alternation "
        "the analysis tool applies"
    )
    if isinstance(source, (str, os.PathLike)):
        if not os.path.exists(source):
            raise ExportError(f"{source}: no such file")
        mats, names, dropped, framework = _load_checkpoint_file(source)
        digest = sha256_file(source)
        activations = declared
    elif hasattr(source, "named_children") and hasattr(source, "state_dict"):
        torch = _require_torch()
        mats, names, dropped = layers_from_module(source)
        framework = f"torch {torch.__version__}"
        activations = checked
    elif hasattr(source, "items"):
        mats, names, dropped = layers_from_state_dict(source)
        framework = "in-memory state dict"
        activations = declared
    else:
        raise ExportError(
            f"unsupported source of type {type(source).__name__}: expected a "
            "checkpoint path, a state dict, or a torch module"
        )

    doc = {
        "format_version": WEIGHT_FORMAT_VERSION,
        "layers": [
            {
                "rows": int(w.shape[0]),
                "cols": int(w.shape[1]),
                "data": [float(x) for x in w.ravel()],
            }
            for w in mats
        ],
    }
    write_json(doc, out_path)
    manifest = ExportManifest(
        kind="weights",
        source_framework=framework,
        source_digest=digest,
        shapes=tuple(w.shape for w in mats),
        dropped=tuple(dropped),
        extra={"activations": activations},
    )
    manifest.write(out_path)
    return manifest
