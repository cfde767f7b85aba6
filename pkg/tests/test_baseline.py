import numpy as np
import pytest

from negsym import baseline as B
from negsym.data import LabeledDataset, negate, synthetic_dataset
from negsym.train import TrainConfig

from oracles import central_diff


def test_parameter_count():
    model = B.init_mlp()
    assert model.n_params == 37
    assert model.flat().shape == (37,)
    np.testing.assert_array_equal(model.unflat(model.flat()).flat(), model.flat())


def test_zero_weights_give_one_half():
    model = B.init_mlp().unflat(np.zeros(37))
    assert B.mlp_forward(model, np.ones(16)) == 0.5


def test_hand_computed_forward():
    w1 = np.zeros((2, 3))
    w1[0] = [1.0, 2.0, 0.0]
    w1[1] = [-1.0, 0.0, 0.0]
    model = B.MlpModel(w1, np.array([0.5, 0.0]), np.array([2.0, 3.0]), -4.0)
    # hidden = relu([1 + 2 + 0.5, -1]) = [3.5, 0]; logit = 7 - 4 = 3
    assert B.mlp_forward(model, [1, 1, 0]) == pytest.approx(1 / (1 + np.exp(-3.0)))


def test_output_strictly_inside_unit_interval():
    rng = np.random.default_rng(1)
    model = B.init_mlp(seed=3)
    for x in rng.integers(0, 2, (50, 16)):
        assert 0 < B.mlp_forward(model, x) < 1


def test_width_mismatch():
    with pytest.raises(ValueError, match="width"):
        B.mlp_forward(B.init_mlp(), np.ones(15))


def test_backprop_matches_finite_difference():
    rng = np.random.default_rng(0)
    for trial in range(5):
        model = B.init_mlp(16, 2, seed=trial)
        # shift biases so no hidden unit sits on the ReLU kink
        model = model.unflat(model.flat() + np.r_[np.zeros(32), 0.3, 0.4, np.zeros(3)])
        x = rng.integers(0, 2, (6, 16))
        y = rng.choice([-1, 1], 6)
        _, grad = B.bce_loss_and_grad(model, x, y)
        fd = central_diff(lambda v: B.bce_loss_and_grad(model.unflat(v), x, y)[0], model.flat())
        np.testing.assert_allclose(grad, fd, rtol=1e-6, atol=1e-9)


def test_loss_finite_for_large_logits():
    model = B.init_mlp().unflat(np.r_[np.zeros(32), 0.0, 0.0, 0.0, 0.0, 1000.0])
    loss, grad = B.bce_loss_and_grad(model, np.ones((1, 16)), [-1])
    assert loss == pytest.approx(1000.0)
    assert np.all(np.isfinite(grad))


def test_training_breaks_negational_symmetry():
    # majority labels flip under negation, which an MLP can learn
    ds = synthetic_dataset(9, 300, "majority", seed=0)
    test = LabeledDataset(ds.patterns[240:], ds.labels[240:])
    train = ds.take(240)
    model, history = B.mlp_train(B.init_mlp(9, 2, seed=0), train,
                                 TrainConfig(learning_rate=0.01, epochs=60, patience=None), test)
    assert history[-1].test_acc >= 0.9
    assert history[-1].test_acc_negated <= 0.2
    gap = np.abs([B.mlp_forward(model, x) - B.mlp_forward(model, negate(x)) for x in test.patterns])
    assert gap.max() > 0.2


def test_training_deterministic():
    ds = synthetic_dataset(5, 64, seed=1)
    cfg = TrainConfig(learning_rate=0.01, epochs=3, patience=None)
    a, _ = B.mlp_train(B.init_mlp(5, 2, seed=4), ds, cfg)
    b, _ = B.mlp_train(B.init_mlp(5, 2, seed=4), ds, cfg)
    np.testing.assert_array_equal(a.flat(), b.flat())


def test_save_load(tmp_path):
    model = B.init_mlp(seed=8)
    B.save_mlp(tmp_path / "m.json", model, TrainConfig(), epoch=2)
    back, doc = B.load_mlp(tmp_path / "m.json")
    np.testing.assert_array_equal(back.flat(), model.flat())
    assert doc["model_kind"] == "mlp" and doc["epoch"] == 2
    (tmp_path / "q.json").write_text('{"model_kind": "qnn"}')
    with pytest.raises(ValueError):
        B.load_mlp(tmp_path / "q.json")
