"""Feedforward ReLU networks: evaluation, margins, rebalancing, file formats.

A network is an ordered chain of weight matrices W_1..W_d applied as
``W_d relu(W_{d-1} relu(... relu(W_1 x)))`` with no activation after the
last layer and no bias terms anywhere.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .linalg import as_matrix, as_vector, spectral_norm

__all__ = [
    "SchemaError",
    "ReluNetwork",
    "Perturbation",
    "LabeledDataset",
    "forward",
    "batch_scores",
    "layer_outputs",
    "margin",
    "margins",
    "margin_loss",
    "predicted_labels",
    "rebalance",
    "apply_perturbation",
    "weight_norm_sq",
    "save_weights",
    "load_weights",
    "save_dataset",
    "load_dataset",
]

WEIGHT_FORMAT_VERSION = 1


class SchemaError(ValueError):
    """A weight or dataset file violates its schema; message names the field."""


def _freeze(a: np.ndarray) -> np.ndarray:
    out = np.array(a, dtype=np.float64)
    out.setflags(write=False)
    return out


def _validated_layers(layers):
    if len(layers) < 1:
        raise ValueError("a network needs at least one layer")
    return tuple(_freeze(as_matrix(w)) for w in layers)


@dataclass(frozen=True)
class ReluNetwork:
    """Ordered layer matrices W_1..W_d; immutable after construction."""

    layers: tuple

    def __post_init__(self):
        object.__setattr__(self, "layers", _validated_layers(self.layers))
        for i in range(len(self.layers) - 1):
            if self.layers[i + 1].shape[1] != self.layers[i].shape[0]:
                raise ValueError(
                    f"layer {i + 1} has {self.layers[i + 1].shape[1]} columns but "
                    f"layer {i} has {self.layers[i].shape[0]} rows; layers must chain"
                )

    @property
    def depth(self) -> int:
        return len(self.layers)

    @property
    def input_dim(self) -> int:
        return self.layers[0].shape[1]

    @property
    def output_dim(self) -> int:
        return self.layers[-1].shape[0]

    @property
    def width(self) -> int:
        """Upper bound on every matrix dimension (input dim included)."""
        return max(max(w.shape) for w in self.layers)


@dataclass(frozen=True)
class Perturbation:
    """Per-layer matrices U_1..U_d, shape-compatible with a target network."""

    layers: tuple

    def __post_init__(self):
        object.__setattr__(self, "layers", _validated_layers(self.layers))

    def check_compatible(self, net: ReluNetwork):
        if len(self.layers) != net.depth:
            raise ValueError(
                f"perturbation has {len(self.layers)} layers, network has {net.depth}"
            )
        for i, (u, w) in enumerate(zip(self.layers, net.layers)):
            if u.shape != w.shape:
                raise ValueError(
                    f"perturbation layer {i} has shape {u.shape}, network layer has {w.shape}"
                )


@dataclass(frozen=True)
class LabeledDataset:
    """Inputs (m x n), integer labels in [0, num_classes), derived radius B."""

    inputs: np.ndarray
    labels: np.ndarray
    num_classes: int

    def __post_init__(self):
        x = np.array(self.inputs, dtype=np.float64)
        if x.ndim != 2 or x.shape[0] < 1 or x.shape[1] < 1:
            raise ValueError(f"inputs must be a nonempty 2-D array, got shape {x.shape}")
        if not np.all(np.isfinite(x)):
            raise ValueError("inputs must all be finite")
        y = np.array(self.labels, dtype=np.int64)
        if y.ndim != 1 or y.shape[0] != x.shape[0]:
            raise ValueError(
                f"labels must be 1-D with one entry per input row ({x.shape[0]}), got shape {y.shape}"
            )
        if self.num_classes < 1:
            raise ValueError(f"num_classes must be positive, got {self.num_classes}")
        if y.min() < 0 or y.max() >= self.num_classes:
            raise ValueError(
                f"labels must lie in [0, {self.num_classes}), got range [{y.min()}, {y.max()}]"
            )
        x.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "inputs", x)
        object.__setattr__(self, "labels", y)

    @property
    def size(self) -> int:
        return self.inputs.shape[0]

    @property
    def input_dim(self) -> int:
        return self.inputs.shape[1]

    @property
    def radius(self) -> float:
        """B: the largest input l2 norm."""
        return float(np.max(np.sqrt(np.sum(self.inputs * self.inputs, axis=1))))


def forward(net: ReluNetwork, x) -> np.ndarray:
    """Score vector for one input: linear-ReLU alternation, linear output."""
    v = as_vector(x)
    if v.shape[0] != net.input_dim:
        raise ValueError(f"input has length {v.shape[0]}, network expects {net.input_dim}")
    for i, w in enumerate(net.layers):
        v = w @ v
        if i < net.depth - 1:
            v = np.maximum(v, 0.0)
    return v


def batch_scores(net: ReluNetwork, inputs) -> np.ndarray:
    """Scores for a batch of inputs (rows); returns an (m, k) array."""
    z = np.asarray(inputs, dtype=np.float64)
    if z.ndim != 2 or z.shape[1] != net.input_dim:
        raise ValueError(f"inputs must be (m, {net.input_dim}), got shape {z.shape}")
    for i, w in enumerate(net.layers):
        z = z @ w.T
        if i < net.depth - 1:
            z = np.maximum(z, 0.0)
    return z


def layer_outputs(net: ReluNetwork, x) -> list:
    """Pre-activation vectors of every layer, last element == forward(net, x)."""
    v = as_vector(x)
    if v.shape[0] != net.input_dim:
        raise ValueError(f"input has length {v.shape[0]}, network expects {net.input_dim}")
    outs = []
    for i, w in enumerate(net.layers):
        v = w @ (v if i == 0 else np.maximum(v, 0.0))
        outs.append(v)
    return outs


def margin(scores, y) -> float:
    """scores[y] minus the best competing score; negative on a mistake."""
    s = as_vector(scores)
    if s.shape[0] < 2:
        raise ValueError("margin is undefined for a single output class")
    if not 0 <= y < s.shape[0]:
        raise ValueError(f"label {y} out of range for {s.shape[0]} classes")
    others = np.delete(s, y)
    return float(s[y] - np.max(others))


def _check_pairing(net: ReluNetwork, data: LabeledDataset):
    if data.input_dim != net.input_dim:
        raise ValueError(
            f"dataset input dim {data.input_dim} != network input dim {net.input_dim}"
        )
    if data.num_classes != net.output_dim:
        raise ValueError(
            f"dataset has {data.num_classes} classes, network outputs {net.output_dim}"
        )


def margins(net: ReluNetwork, data: LabeledDataset) -> np.ndarray:
    """Per-sample margins over the whole dataset."""
    _check_pairing(net, data)
    if net.output_dim < 2:
        raise ValueError("margins are undefined for a single output class")
    s = batch_scores(net, data.inputs)
    idx = np.arange(data.size)
    true = s[idx, data.labels]
    s = s.copy()
    s[idx, data.labels] = -np.inf
    return true - np.max(s, axis=1)


def margin_loss(net: ReluNetwork, data: LabeledDataset, gamma: float) -> float:
    """Fraction of samples with margin <= gamma (ties count at gamma = 0)."""
    if gamma < 0:
        raise ValueError(f"gamma must be nonnegative, got {gamma}")
    return float(np.mean(margins(net, data) <= gamma))


def predicted_labels(net: ReluNetwork, inputs) -> np.ndarray:
    """Argmax labels; ties break toward the lowest class index."""
    return np.argmax(batch_scores(net, inputs), axis=1)


def rebalance(net: ReluNetwork) -> tuple:
    """Rescale layers so every spectral norm equals beta = (prod norms)^(1/d).

    ReLU homogeneity keeps the computed function unchanged; the spectral-norm
    product and each Frobenius/spectral ratio are preserved.  Returns
    (rebalanced network, beta).  Any zero layer is rejected: beta would be 0
    and the rescaled network collapses.
    """
    norms = [spectral_norm(w) for w in net.layers]
    for i, n in enumerate(norms):
        if n <= 0.0:
            raise ValueError(f"layer {i} has zero spectral norm; rebalancing is undefined")
    beta = math.exp(sum(math.log(n) for n in norms) / net.depth)
    scaled = [(beta / n) * w for n, w in zip(norms, net.layers)]
    return ReluNetwork(tuple(scaled)), beta


def apply_perturbation(net: ReluNetwork, pert: Perturbation) -> ReluNetwork:
    """Layer-wise W_i + U_i."""
    pert.check_compatible(net)
    return ReluNetwork(tuple(w + u for w, u in zip(net.layers, pert.layers)))


def weight_norm_sq(net: ReluNetwork) -> float:
    """Squared l2 norm of the full parameter vector (sum of squared entries)."""
    return float(sum(np.sum(w * w) for w in net.layers))


# ---------------------------------------------------------------------------
# File formats.  Weight file: {"format_version": 1, "layers": [{"rows": R,
# "cols": C, "data": [R*C doubles, row-major]}, ...]}.  Dataset file:
# {"inputs": [[doubles], ...], "labels": [ints], "num_classes": k}.

def _expect(cond, where, msg):
    if not cond:
        raise SchemaError(f"{where}: {msg}")


def _load_json(path):
    with open(path, "r", encoding="utf-8") as fh:
        try:
            return json.load(fh)
        except json.JSONDecodeError as e:
            raise SchemaError(f"{path}: invalid JSON at line {e.lineno} column {e.colno}: {e.msg}")


def _is_number(x):
    return isinstance(x, (int, float)) and not isinstance(x, bool) and math.isfinite(x)


def load_weights(path) -> ReluNetwork:
    """Parse a weight file, rejecting any schema violation with the field named."""
    doc = _load_json(path)
    _expect(isinstance(doc, dict), path, "top level must be an object")
    _expect("format_version" in doc, path, 'missing field "format_version"')
    _expect(
        doc["format_version"] == WEIGHT_FORMAT_VERSION,
        path,
        f'format_version must be {WEIGHT_FORMAT_VERSION}, got {doc["format_version"]!r}',
    )
    _expect("layers" in doc, path, 'missing field "layers"')
    layers_doc = doc["layers"]
    _expect(isinstance(layers_doc, list) and layers_doc, path, '"layers" must be a nonempty array')
    mats = []
    for i, layer in enumerate(layers_doc):
        where = f"{path}: layers[{i}]"
        _expect(isinstance(layer, dict), where, "must be an object")
        _expect("bias" not in layer, where, 'unexpected field "bias" (bias terms are not supported)')
        extra = set(layer) - {"rows", "cols", "data"}
        _expect(not extra, where, f"unexpected field(s) {sorted(extra)}")
        for key in ("rows", "cols", "data"):
            _expect(key in layer, where, f'missing field "{key}"')
        rows, cols = layer["rows"], layer["cols"]
        for key, value in (("rows", rows), ("cols", cols)):
            _expect(
                isinstance(value, int) and not isinstance(value, bool) and value >= 1,
                f"{where}.{key}",
                f"must be a positive integer, got {value!r}",
            )
        data = layer["data"]
        _expect(isinstance(data, list), f"{where}.data", "must be an array of numbers")
        _expect(
            len(data) == rows * cols,
            f"{where}.data",
            f"expected {rows * cols} values ({rows}x{cols}, row-major), got {len(data)}",
        )
        for j, x in enumerate(data):
            _expect(_is_number(x), f"{where}.data[{j}]", f"must be a finite number, got {x!r}")
        mats.append(np.asarray(data, dtype=np.float64).reshape(rows, cols))
    try:
        return ReluNetwork(tuple(mats))
    except ValueError as e:
        raise SchemaError(f"{path}: layers: {e}")


def weights_document(net: ReluNetwork) -> dict:
    return {
        "format_version": WEIGHT_FORMAT_VERSION,
        "layers": [
            {"rows": int(w.shape[0]), "cols": int(w.shape[1]), "data": [float(x) for x in w.ravel()]}
            for w in net.layers
        ],
    }


def save_weights(net: ReluNetwork, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(weights_document(net), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_dataset(path) -> LabeledDataset:
    """Parse a dataset file, rejecting any schema violation with the field named."""
    doc = _load_json(path)
    _expect(isinstance(doc, dict), path, "top level must be an object")
    extra = set(doc) - {"inputs", "labels", "num_classes"}
    _expect(not extra, path, f"unexpected field(s) {sorted(extra)}")
    for key in ("inputs", "labels", "num_classes"):
        _expect(key in doc, path, f'missing field "{key}"')
    inputs = doc["inputs"]
    _expect(isinstance(inputs, list) and inputs, f"{path}: inputs", "must be a nonempty array of rows")
    width = None
    for i, row in enumerate(inputs):
        where = f"{path}: inputs[{i}]"
        _expect(isinstance(row, list) and row, where, "must be a nonempty array of numbers")
        if width is None:
            width = len(row)
        _expect(len(row) == width, where, f"expected {width} values like earlier rows, got {len(row)}")
        for j, x in enumerate(row):
            _expect(_is_number(x), f"{where}[{j}]", f"must be a finite number, got {x!r}")
    labels = doc["labels"]
    _expect(isinstance(labels, list), f"{path}: labels", "must be an array of integers")
    _expect(
        len(labels) == len(inputs),
        f"{path}: labels",
        f"expected {len(inputs)} entries (one per input row), got {len(labels)}",
    )
    for i, y in enumerate(labels):
        _expect(
            isinstance(y, int) and not isinstance(y, bool),
            f"{path}: labels[{i}]",
            f"must be an integer, got {y!r}",
        )
    k = doc["num_classes"]
    _expect(
        isinstance(k, int) and not isinstance(k, bool) and k >= 1,
        f"{path}: num_classes",
        f"must be a positive integer, got {k!r}",
    )
    for i, y in enumerate(labels):
        _expect(0 <= y < k, f"{path}: labels[{i}]", f"must lie in [0, {k}), got {y}")
    return LabeledDataset(np.asarray(inputs, dtype=np.float64), np.asarray(labels, dtype=np.int64), k)


def dataset_document(data: LabeledDataset) -> dict:
    return {
        "inputs": [[float(x) for x in row] for row in data.inputs],
        "labels": [int(y) for y in data.labels],
        "num_classes": int(data.num_classes),
    }


def save_dataset(data: LabeledDataset, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(dataset_document(data), fh, indent=2, sort_keys=True)
        fh.write("\n")
