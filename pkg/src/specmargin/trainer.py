"""Synthetic datasets and a small deterministic SGD trainer.

Everything here exists to produce realistic inputs for the bound
calculators: isotropic Gaussian blob tasks (optionally with randomized
labels), He-style initialization, and mini-batch SGD with manual
backpropagation.  Single-threaded, bit-reproducible per seed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import derive_seed
from .network import LabeledDataset, ReluNetwork

__all__ = [
    "TaskSpec",
    "TrainConfig",
    "TrainingDivergedError",
    "generate_dataset",
    "init_network",
    "train_sgd",
    "loss_and_gradients",
    "average_loss",
]

KINDS = ("gaussian_blobs", "random_labels")
LOSSES = ("cross_entropy", "multiclass_hinge")

# Blob geometry: cluster centers drawn from N(0, (CENTER_SPREAD*separation)^2 I)
# and redrawn as a set until all pairwise distances reach the requested
# separation; per-sample noise is unit-variance isotropic.  The whole cloud is
# rescaled afterwards so the largest input norm is 1.
CENTER_SPREAD = 1.5
CENTER_RETRIES = 200
NOISE_STD = 1.0


class TrainingDivergedError(RuntimeError):
    """Weights left the finite range mid-run; carries learning-rate guidance."""


@dataclass(frozen=True)
class TaskSpec:
    """What dataset to synthesize: geometry, size, and label scheme."""

    kind: str
    n: int
    k: int
    m: int
    separation: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}, got {self.kind!r}")
        if self.k < 2:
            raise ValueError(f"need at least 2 classes, got {self.k}")
        if self.m < self.k:
            raise ValueError(f"need at least one sample per class: m={self.m} < k={self.k}")
        if self.n < 1:
            raise ValueError(f"input dim must be positive, got {self.n}")
        if self.separation <= 0:
            raise ValueError(f"separation must be positive, got {self.separation}")


@dataclass(frozen=True)
class TrainConfig:
    """Architecture plus SGD hyperparameters."""

    architecture: tuple
    learning_rate: float = 0.1
    epochs: int = 20
    batch_size: int = 32
    loss: str = "cross_entropy"
    init_scale: float = 1.0
    seed: int = 0

    def __post_init__(self):
        arch = tuple(int(s) for s in self.architecture)
        if len(arch) < 2:
            raise ValueError("architecture needs at least an input and an output size")
        if any(s < 1 for s in arch):
            raise ValueError(f"architecture sizes must be positive, got {arch}")
        object.__setattr__(self, "architecture", arch)
        if self.learning_rate <= 0:
            raise ValueError(f"learning rate must be positive, got {self.learning_rate}")
        if self.epochs < 0:
            raise ValueError(f"epochs must be nonnegative, got {self.epochs}")
        if self.batch_size < 1:
            raise ValueError(f"batch size must be positive, got {self.batch_size}")
        if self.loss not in LOSSES:
            raise ValueError(f"loss must be one of {LOSSES}, got {self.loss!r}")
        if self.init_scale <= 0:
            raise ValueError(f"init scale must be positive, got {self.init_scale}")


def _draw_centers(rng, k, n, separation):
    spread = CENTER_SPREAD * separation
    for _ in range(CENTER_RETRIES):
        centers = spread * rng.standard_normal((k, n))
        d2 = np.sum((centers[:, None, :] - centers[None, :, :]) ** 2, axis=2)
        d2[np.diag_indices(k)] = np.inf
        if np.min(d2) >= separation * separation:
            return centers
    raise ValueError(
        f"could not place {k} cluster centers with separation {separation} in "
        f"{n} dimensions after {CENTER_RETRIES} attempts"
    )


def generate_dataset(spec: TaskSpec) -> LabeledDataset:
    """Synthesize a dataset; inputs depend only on (seed, geometry), so the
    two kinds share identical inputs at a given seed and differ in labels."""
    rng_inputs = np.random.default_rng(derive_seed(spec.seed, 0))
    centers = _draw_centers(rng_inputs, spec.k, spec.n, spec.separation)
    # Balanced round-robin cluster assignment, order shuffled.
    assign = np.arange(spec.m) % spec.k
    rng_inputs.shuffle(assign)
    inputs = centers[assign] + NOISE_STD * rng_inputs.standard_normal((spec.m, spec.n))
    max_norm = float(np.max(np.sqrt(np.sum(inputs * inputs, axis=1))))
    if max_norm > 0:
        inputs = inputs / max_norm
    if spec.kind == "gaussian_blobs":
        labels = assign
    else:
        rng_labels = np.random.default_rng(derive_seed(spec.seed, 1))
        labels = rng_labels.integers(0, spec.k, size=spec.m)
    return LabeledDataset(inputs, labels.astype(np.int64), spec.k)


def _init_layers(cfg: TrainConfig) -> list:
    layers = []
    for i in range(len(cfg.architecture) - 1):
        fan_in = cfg.architecture[i]
        fan_out = cfg.architecture[i + 1]
        rng = np.random.default_rng(derive_seed(cfg.seed, 0, i))
        std = cfg.init_scale * np.sqrt(2.0 / fan_in)
        layers.append(std * rng.standard_normal((fan_out, fan_in)))
    return layers


def init_network(cfg: TrainConfig) -> ReluNetwork:
    """He-scaled Gaussian initialization, one independent stream per layer."""
    return ReluNetwork(tuple(_init_layers(cfg)))


def _forward_cached(layers, x):
    """Pre-activations per layer; activations feed forward with relu'(0)=0."""
    pre = []
    a = x
    last = len(layers) - 1
    for i, w in enumerate(layers):
        s = a @ w.T
        pre.append(s)
        if i < last:
            a = np.maximum(s, 0.0)
    return pre


def _score_gradient(scores, labels, loss):
    """dL/dscores averaged over the batch, plus the batch loss."""
    m, k = scores.shape
    idx = np.arange(m)
    if loss == "cross_entropy":
        shifted = scores - np.max(scores, axis=1, keepdims=True)
        expd = np.exp(shifted)
        probs = expd / np.sum(expd, axis=1, keepdims=True)
        nll = -np.mean(shifted[idx, labels] - np.log(np.sum(expd, axis=1)))
        g = probs.copy()
        g[idx, labels] -= 1.0
        return g / m, float(nll)
    # Multiclass hinge: penalize whenever the best rival comes within 1.
    rival = scores.copy()
    rival[idx, labels] = -np.inf
    rival_best = np.argmax(rival, axis=1)
    margins = scores[idx, labels] - rival[idx, rival_best]
    slack = np.maximum(0.0, 1.0 - margins)
    g = np.zeros_like(scores)
    active = slack > 0.0
    g[idx[active], labels[active]] = -1.0
    g[idx[active], rival_best[active]] = 1.0
    return g / m, float(np.mean(slack))


def loss_and_gradients(layers, inputs, labels, loss):
    """Average batch loss and per-layer weight gradients via backprop."""
    pre = _forward_cached(layers, inputs)
    g_scores, value = _score_gradient(pre[-1], labels, loss)
    grads = [None] * len(layers)
    g = g_scores
    for i in range(len(layers) - 1, -1, -1):
        a_prev = inputs if i == 0 else np.maximum(pre[i - 1], 0.0)
        grads[i] = g.T @ a_prev
        if i > 0:
            g = (g @ layers[i]) * (pre[i - 1] > 0.0)
    return value, grads


def average_loss(net: ReluNetwork, data: LabeledDataset, loss: str) -> float:
    """Full-dataset mean loss for a fixed network."""
    if loss not in LOSSES:
        raise ValueError(f"loss must be one of {LOSSES}, got {loss!r}")
    pre = _forward_cached(list(net.layers), data.inputs)
    _, value = _score_gradient(pre[-1], data.labels, loss)
    return value


def train_sgd(data: LabeledDataset, cfg: TrainConfig) -> ReluNetwork:
    """Mini-batch SGD from a fresh initialization; returns the final iterate.

    Shuffle order is drawn per epoch from a stream keyed by (seed, epoch), so
    a shorter run is an exact prefix of a longer one at the same seed.
    """
    if cfg.architecture[0] != data.input_dim:
        raise ValueError(
            f"architecture input size {cfg.architecture[0]} != dataset dim {data.input_dim}"
        )
    if cfg.architecture[-1] != data.num_classes:
        raise ValueError(
            f"architecture output size {cfg.architecture[-1]} != {data.num_classes} classes"
        )
    layers = _init_layers(cfg)
    m = data.size
    # Non-finite values are caught explicitly below, so numpy's transient
    # overflow warnings on the way there are suppressed.
    with np.errstate(over="ignore", invalid="ignore"):
        for epoch in range(cfg.epochs):
            order = np.random.default_rng(derive_seed(cfg.seed, 1, epoch)).permutation(m)
            for start in range(0, m, cfg.batch_size):
                batch = order[start : start + cfg.batch_size]
                _, grads = loss_and_gradients(
                    layers, data.inputs[batch], data.labels[batch], cfg.loss
                )
                for i in range(len(layers)):
                    layers[i] = layers[i] - cfg.learning_rate * grads[i]
                    if not np.all(np.isfinite(layers[i])):
                        raise TrainingDivergedError(
                            f"non-finite weights in layer {i} at epoch {epoch}, sample "
                            f"offset {start}; try a smaller learning rate than "
                            f"{cfg.learning_rate}"
                        )
    return ReluNetwork(tuple(layers))
