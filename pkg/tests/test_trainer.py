import numpy as np
import pytest

from oracles import loss_oracle
from specmargin.network import margin_loss
from specmargin.trainer import (
    TaskSpec,
    TrainConfig,
    TrainingDivergedError,
    average_loss,
    generate_dataset,
    init_network,
    loss_and_gradients,
    train_sgd,
)

BLOBS = TaskSpec(kind="gaussian_blobs", n=2, k=2, m=200, separation=10.0, seed=31)


def test_spec_validation():
    with pytest.raises(ValueError):
        TaskSpec(kind="spirals", n=2, k=2, m=10)
    with pytest.raises(ValueError):
        TaskSpec(kind="gaussian_blobs", n=2, k=1, m=10)
    with pytest.raises(ValueError):
        TaskSpec(kind="gaussian_blobs", n=2, k=4, m=3)
    with pytest.raises(ValueError):
        TaskSpec(kind="gaussian_blobs", n=2, k=2, m=10, separation=0.0)
    with pytest.raises(ValueError):
        TaskSpec(kind="gaussian_blobs", n=0, k=2, m=10)


def test_config_validation():
    with pytest.raises(ValueError):
        TrainConfig(architecture=(2,))
    with pytest.raises(ValueError):
        TrainConfig(architecture=(2, 0, 2))
    with pytest.raises(ValueError):
        TrainConfig(architecture=(2, 4, 2), learning_rate=0.0)
    with pytest.raises(ValueError):
        TrainConfig(architecture=(2, 4, 2), epochs=-1)
    with pytest.raises(ValueError):
        TrainConfig(architecture=(2, 4, 2), batch_size=0)
    with pytest.raises(ValueError):
        TrainConfig(architecture=(2, 4, 2), loss="l2")
    with pytest.raises(ValueError):
        TrainConfig(architecture=(2, 4, 2), init_scale=0.0)


def test_dataset_is_deterministic_and_inside_unit_ball():
    a = generate_dataset(BLOBS)
    b = generate_dataset(BLOBS)
    assert np.array_equal(a.inputs, b.inputs)
    assert np.array_equal(a.labels, b.labels)
    norms = np.sqrt(np.sum(a.inputs ** 2, axis=1))
    assert float(np.max(norms)) <= 1.0 + 1e-12


def test_blobs_are_nearest_centroid_separable():
    data = generate_dataset(BLOBS)
    centroids = np.stack([
        data.inputs[data.labels == c].mean(axis=0) for c in range(data.num_classes)
    ])
    d2 = np.sum((data.inputs[:, None, :] - centroids[None, :, :]) ** 2, axis=2)
    predicted = np.argmin(d2, axis=1)
    assert np.array_equal(predicted, data.labels)


def test_random_labels_share_inputs_with_blobs():
    rand_spec = TaskSpec(kind="random_labels", n=2, k=2, m=200, separation=10.0, seed=31)
    blobs = generate_dataset(BLOBS)
    rand = generate_dataset(rand_spec)
    assert np.array_equal(blobs.inputs, rand.inputs)
    assert not np.array_equal(blobs.labels, rand.labels)
    # both labels of a 2-class uniform draw should appear
    assert set(np.unique(rand.labels)) == {0, 1}


def test_dataset_class_balance_blobs():
    data = generate_dataset(BLOBS)
    counts = np.bincount(data.labels, minlength=2)
    assert counts[0] == 100 and counts[1] == 100


def test_init_network_shapes_and_determinism():
    cfg = TrainConfig(architecture=(3, 8, 5, 2), seed=5)
    net = init_network(cfg)
    assert [w.shape for w in net.layers] == [(8, 3), (5, 8), (2, 5)]
    again = init_network(cfg)
    for a, b in zip(net.layers, again.layers):
        assert np.array_equal(a, b)
    other = init_network(TrainConfig(architecture=(3, 8, 5, 2), seed=6))
    assert not np.array_equal(net.layers[0], other.layers[0])


def test_init_scale_controls_spread():
    big = TrainConfig(architecture=(50, 200), init_scale=2.0, seed=9)
    base = TrainConfig(architecture=(50, 200), init_scale=1.0, seed=9)
    sd_big = float(np.std(init_network(big).layers[0]))
    sd_base = float(np.std(init_network(base).layers[0]))
    assert sd_big == pytest.approx(2.0 * sd_base, rel=1e-12)
    assert sd_base == pytest.approx(np.sqrt(2.0 / 50.0), rel=0.1)


def test_epochs_zero_returns_initialization():
    data = generate_dataset(BLOBS)
    cfg = TrainConfig(architecture=(2, 6, 2), epochs=0, seed=13)
    net = train_sgd(data, cfg)
    init = init_network(cfg)
    for a, b in zip(net.layers, init.layers):
        assert np.array_equal(a, b)


def test_training_is_deterministic():
    data = generate_dataset(BLOBS)
    cfg = TrainConfig(architecture=(2, 6, 2), epochs=4, seed=13)
    a = train_sgd(data, cfg)
    b = train_sgd(data, cfg)
    for wa, wb in zip(a.layers, b.layers):
        assert np.array_equal(wa, wb)


def test_training_fits_separable_blobs():
    data = generate_dataset(BLOBS)
    cfg = TrainConfig(architecture=(2, 8, 2), learning_rate=0.1, epochs=25, batch_size=32, seed=13)
    net = train_sgd(data, cfg)
    assert margin_loss(net, data, 0.0) <= 0.05


def test_full_batch_loss_nonincreasing():
    data = generate_dataset(TaskSpec(kind="gaussian_blobs", n=2, k=2, m=60, separation=8.0, seed=3))
    losses = []
    for epochs in range(6):
        cfg = TrainConfig(
            architecture=(2, 6, 2),
            learning_rate=0.02,
            epochs=epochs,
            batch_size=60,
            seed=21,
        )
        net = train_sgd(data, cfg)
        losses.append(average_loss(net, data, "cross_entropy"))
    for before, after in zip(losses, losses[1:]):
        assert after <= before + 1e-12


def test_hinge_training_reduces_loss():
    data = generate_dataset(BLOBS)
    cfg = TrainConfig(architecture=(2, 6, 2), loss="multiclass_hinge", epochs=10, seed=17)
    start = average_loss(init_network(cfg), data, "multiclass_hinge")
    end = average_loss(train_sgd(data, cfg), data, "multiclass_hinge")
    assert end < start


def test_architecture_must_match_dataset():
    data = generate_dataset(BLOBS)
    with pytest.raises(ValueError):
        train_sgd(data, TrainConfig(architecture=(3, 6, 2)))
    with pytest.raises(ValueError):
        train_sgd(data, TrainConfig(architecture=(2, 6, 3)))


def test_divergence_reports_learning_rate():
    data = generate_dataset(BLOBS)
    cfg = TrainConfig(architecture=(2, 6, 2), learning_rate=1e18, epochs=8, seed=13)
    with pytest.raises(TrainingDivergedError) as info:
        train_sgd(data, cfg)
    assert "learning rate" in str(info.value)


def test_average_loss_matches_oracle():
    rng = np.random.default_rng(23)
    data = generate_dataset(TaskSpec(kind="gaussian_blobs", n=3, k=3, m=12, separation=6.0, seed=2))
    cfg = TrainConfig(architecture=(3, 5, 3), seed=4)
    net = init_network(cfg)
    for kind in ("cross_entropy", "multiclass_hinge"):
        got = average_loss(net, data, kind)
        want = loss_oracle([np.asarray(w) for w in net.layers], data.inputs, data.labels, kind)
        assert got == pytest.approx(want, rel=1e-10)
    with pytest.raises(ValueError):
        average_loss(net, data, "mse")


def _fd_check(seed, kind, rel_budget):
    """Backprop versus central differences, steering clear of relu kinks."""
    rng = np.random.default_rng(seed)
    layers = [rng.standard_normal((2, 2)), rng.standard_normal((2, 2))]
    inputs = rng.standard_normal((4, 2))
    labels = rng.integers(0, 2, size=4)
    pre = inputs @ layers[0].T
    if float(np.min(np.abs(pre))) < 1e-6:
        return  # too close to a kink for finite differences to be trustworthy
    _, grads = loss_and_gradients(layers, inputs, labels, kind)
    step = 1e-5
    from oracles import fd_gradients

    def value(ws):
        v, _ = loss_and_gradients(ws, inputs, labels, kind)
        return v

    numeric = fd_gradients(value, layers, step=step)
    for g, n in zip(grads, numeric):
        denom = max(1.0, float(np.max(np.abs(n))))
        assert float(np.max(np.abs(g - n))) <= rel_budget * denom


def test_gradients_match_finite_differences_cross_entropy():
    for seed in range(40, 50):
        _fd_check(seed, "cross_entropy", 1e-5)


def test_gradients_match_finite_differences_hinge():
    for seed in range(60, 70):
        _fd_check(seed, "multiclass_hinge", 1e-4)
