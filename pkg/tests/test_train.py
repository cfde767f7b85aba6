import math

import numpy as np
import pytest

from negsym import train as T
from negsym.data import LabeledDataset, synthetic_dataset
from negsym.qnn import QnnModel, forward
from negsym.symmetry import check_model

from oracles import central_diff


def test_hinge_loss_values():
    assert T.hinge_loss(0.3, 1) == pytest.approx(0.7)
    assert T.hinge_loss(0.3, -1) == pytest.approx(1.3)
    assert T.hinge_loss(1.0, 1) == 0.0
    with pytest.raises(ValueError):
        T.hinge_loss(0.0, 0)


def test_init_model_range_and_determinism():
    a = T.init_model("XX-ZZ", 16, seed=4)
    b = T.init_model("XX-ZZ", 16, seed=4)
    np.testing.assert_array_equal(a.theta, b.theta)
    assert a.theta.shape == (2, 16)
    assert np.all(np.abs(a.theta) <= 0.1)


def _loss_at(model, pattern, label):
    return lambda theta: T.hinge_loss(forward(model.with_theta(theta), pattern), label)


def test_param_shift_matches_finite_difference():
    rng = np.random.default_rng(0)
    model = QnnModel.create("XX-ZZ", 3)
    for _ in range(10):
        m = model.with_theta(rng.uniform(-np.pi, np.pi, model.theta.shape))
        x, y = rng.integers(0, 2, 3), int(rng.choice([-1, 1]))
        fd = central_diff(_loss_at(m, x, y), m.theta)
        for j, k in np.ndindex(m.theta.shape):
            assert T.param_shift_grad(m, x, y, j, k) == pytest.approx(fd[j, k], abs=1e-7)


def test_param_shift_index_checked():
    with pytest.raises(ValueError):
        T.param_shift_grad(QnnModel.create("ZZ", 2), [0, 1], 1, 1, 0)


def test_grad_full_branch_equals_dense_and_pairs():
    rng = np.random.default_rng(1)
    m = QnnModel.create("ZZ-XX", 3, rng.uniform(-2, 2, (2, 3)))
    pats = rng.integers(0, 2, (4, 3))
    labs = np.array([1, -1, -1, 1])
    ds = LabeledDataset(pats, labs)
    g_branch = T.grad_full(m, ds)
    g_dense = T.grad_full(m, ds, method="dense")
    g_pairs = T.grad_full(m, list(zip(pats, labs)))
    np.testing.assert_allclose(g_branch, g_dense, atol=1e-12)
    np.testing.assert_allclose(g_branch, g_pairs, atol=0)
    per_param = np.mean([[T.param_shift_grad(m, p, int(y), j, k) for j, k in np.ndindex(2, 3)]
                         for p, y in zip(pats, labs)], axis=0).reshape(2, 3)
    np.testing.assert_allclose(g_branch, per_param, atol=1e-12)


def test_grad_full_rejects_bad_batches():
    m = QnnModel.create("ZZ", 2)
    with pytest.raises(ValueError):
        T.grad_full(m, [])
    with pytest.raises(ValueError):
        T.grad_full(m, [([0, 1], 0)])


def test_shot_gradient_is_noisy_but_unbiased_in_scale():
    rng = np.random.default_rng(2)
    m = QnnModel.create("XX-ZZ", 3, rng.uniform(-1, 1, (2, 3)))
    ds = LabeledDataset(rng.integers(0, 2, (8, 3)), np.ones(8))
    exact = T.grad_full(m, ds)
    noisy = T.grad_full(m, ds, shots=100_000, rng=np.random.default_rng(0))
    assert not np.array_equal(exact, noisy)
    np.testing.assert_allclose(noisy, exact, atol=0.02)


def test_adam_first_step_closed_form():
    cfg = T.TrainConfig(learning_rate=0.01)
    params = np.array([0.5, -0.2, 0.0])
    grads = np.array([2.0, -0.001, 0.0])
    new, state = T.adam_step(params, grads, T.AdamState.zeros_like(params), cfg)
    # bias-corrected moments are g and g**2 after one step
    expected = params - cfg.learning_rate * grads / (np.abs(grads) + cfg.adam_eps)
    np.testing.assert_allclose(new, expected, rtol=1e-12)
    assert state.step == 1
    np.testing.assert_allclose(state.first_moment, 0.1 * grads)


def test_adam_shape_mismatch():
    with pytest.raises(ValueError, match="shape"):
        T.adam_step(np.zeros(3), np.zeros(2), T.AdamState.zeros_like(np.zeros(3)), T.TrainConfig())


@pytest.mark.parametrize("kw", [dict(learning_rate=0), dict(adam_beta1=1.0), dict(batch_size=0),
                                dict(epochs=-1), dict(shots=0), dict(method="magic")])
def test_config_validation(kw):
    with pytest.raises(ValueError):
        T.TrainConfig(**kw)


@pytest.fixture
def toy_task():
    full = synthetic_dataset(4, 120, "parity", seed=3)
    return full.take(90), LabeledDataset(full.patterns[90:], full.labels[90:], "test")


def test_training_is_deterministic(toy_task):
    train_set, test_set = toy_task
    cfg = T.TrainConfig(learning_rate=0.05, epochs=3, patience=None, seed=11)
    a = T.train(T.init_model("XX-ZZ", 4, seed=1), train_set, cfg, test_set)
    b = T.train(T.init_model("XX-ZZ", 4, seed=1), train_set, cfg, test_set)
    np.testing.assert_array_equal(a.model.theta, b.model.theta)
    assert [h.train_loss for h in a.history] == [h.train_loss for h in b.history]


def test_training_learns_parity_and_stays_symmetric(toy_task):
    train_set, test_set = toy_task
    cfg = T.TrainConfig(learning_rate=0.05, epochs=30, patience=None)
    res = T.train(T.init_model("XX-ZZ", 4, seed=0), train_set, cfg, test_set)
    assert res.history[-1].train_loss < res.history[0].train_loss
    assert res.history[-1].test_acc >= 0.9
    for h in res.history:
        assert h.test_acc == h.test_acc_negated


def test_symmetry_holds_after_every_epoch(toy_task):
    failures = []

    def probe(epoch, model):
        failures.extend(r for r in check_model(model, trials=32, seed=epoch) if not r.passed)

    cfg = T.TrainConfig(learning_rate=0.05, epochs=5, patience=None)
    T.train(T.init_model("XX-ZZ", 4, seed=5), toy_task[0], cfg, callback=probe)
    assert failures == []


def test_zero_epochs_returns_initial_model(toy_task):
    model = T.init_model("ZZ", 4, seed=2)
    res = T.train(model, toy_task[0], T.TrainConfig(epochs=0), toy_task[1])
    np.testing.assert_array_equal(res.model.theta, model.theta)
    assert len(res.history) == 1 and res.history[0].epoch == 0


def test_early_stopping_keeps_best(toy_task):
    train_set, test_set = toy_task
    seen = []
    cfg = T.TrainConfig(learning_rate=1e-6, epochs=50, patience=2)
    res = T.train(T.init_model("XX-ZZ", 4), train_set, cfg, test_set,
                  callback=lambda e, m: seen.append(e))
    # a tiny step size cannot improve accuracy, so training stops after `patience` epochs
    assert len(res.history) == 3
    assert seen == [0, 1, 2]
    assert res.best_epoch == 0


def test_checkpoint_round_trip_is_bit_exact(tmp_path, toy_task):
    model = T.init_model("XX-ZZ", 4, seed=9, measurement="Y")
    cfg = T.TrainConfig(epochs=1)
    row = T.EpochMetrics(1, 0.5, 0.75, 0.5, 0.5)
    T.save_checkpoint(tmp_path / "ck.json", model, cfg, 1, row)
    loaded, doc = T.load_checkpoint(tmp_path / "ck.json")
    np.testing.assert_array_equal(loaded.theta, model.theta)
    assert loaded.measurement == "Y" and str(loaded.arch) == "XX-ZZ"
    assert doc["seed"] == 0 and doc["epoch"] == 1 and doc["metrics"]["train_acc"] == 0.75


def test_metrics_round_trip(tmp_path):
    rows = [T.EpochMetrics(0, 1 / 3, 0.5), T.EpochMetrics(1, 0.1, 0.9, 0.8, 0.8)]
    T.write_metrics(tmp_path / "m.csv", rows)
    back = T.read_metrics(tmp_path / "m.csv")
    assert back[1] == rows[1]
    assert back[0].train_loss == rows[0].train_loss and math.isnan(back[0].test_acc)
    assert (tmp_path / "m.csv").read_text().splitlines()[0] == ",".join(T.METRICS_HEADER)
