from __future__ import annotations

import struct

import numpy as np
import pytest

from neural_core import (
    FORMAT_VERSION,
    AdamState,
    DenseLayer,
    DropoutSpec,
    MlpRegressor,
    NetworkError,
    ReduceLROnPlateau,
    StaleCacheError,
    activate,
    adam_step,
    fc_regressor,
    load_parameters,
    mse_grad,
    mse_loss,
    parameter_count,
    save_parameters,
)


def _zero_model(input_shape=(2, 4)) -> MlpRegressor:
    model = fc_regressor(input_shape, rng=0)
    for value in model.parameters().values():
        value[...] = 0.0
    return model


def test_zero_parameters_give_half_outputs():
    model = _zero_model()
    np.testing.assert_array_equal(model.predict(np.ones((3, 2, 4))), np.full((3, 2), 0.5))


def test_inference_is_deterministic_and_bounded():
    model = fc_regressor((10, 50), rng=1)
    x = np.random.default_rng(2).normal(size=(16, 10, 50)) * 5
    first = model.predict(x)
    second = model.predict(x)
    assert first.tobytes() == second.tobytes()
    assert np.all((first > 0) & (first < 1))


def test_single_sample_input_is_accepted():
    model = fc_regressor((2, 4), rng=3)
    x = np.random.default_rng(4).normal(size=(2, 4))
    pred, cache = model.forward(x)
    assert pred.shape == (1, 2)
    grads = model.backward(cache, np.ones((1, 2)))
    assert grads.inputs.shape == (2, 4)


def test_wrong_input_shape_rejected():
    model = fc_regressor((2, 4), rng=3)
    with pytest.raises(NetworkError, match="expected input shape"):
        model.predict(np.ones((5, 3, 4)))


def test_zero_upstream_gradient_gives_zero_gradients():
    model = fc_regressor((2, 4), rng=5)
    _, cache = model.forward(np.ones((3, 2, 4)))
    grads = model.backward(cache, np.zeros((3, 2)))
    assert all(not np.any(g) for g in grads.params.values())
    assert not np.any(grads.inputs)


def test_linear_layer_closed_form_gradient():
    rng = np.random.default_rng(6)
    w = rng.normal(size=(2, 3))
    model = MlpRegressor((3,), [DenseLayer(w, np.zeros(2), "linear")])
    x = rng.normal(size=3)
    t = rng.normal(size=2)
    pred, cache = model.forward(x)
    grads = model.backward(cache, pred - t)
    np.testing.assert_allclose(grads.params["dense0.weights"], np.outer(w @ x - t, x))
    np.testing.assert_allclose(grads.params["dense0.biases"], w @ x - t)
    np.testing.assert_allclose(grads.inputs, w.T @ (w @ x - t))


def test_full_model_gradients_match_finite_differences():
    rng = np.random.default_rng(7)
    model = fc_regressor((2, 6), rng=8)
    x = rng.normal(size=(4, 2, 6))
    target = rng.uniform(0.1, 0.9, size=(4, 2))

    def loss() -> float:
        return mse_loss(model.predict(x), target)

    pred, cache = model.forward(x)
    grads = model.backward(cache, mse_grad(pred, target))
    h = 1e-6
    for name, value in model.parameters().items():
        flat = value.reshape(-1)
        for idx in rng.choice(flat.size, size=min(6, flat.size), replace=False):
            original = flat[idx]
            flat[idx] = original + h
            up = loss()
            flat[idx] = original - h
            down = loss()
            flat[idx] = original
            fd = (up - down) / (2 * h)
            analytic = grads.params[name].reshape(-1)[idx]
            assert fd == pytest.approx(analytic, rel=1e-5, abs=1e-9), name
    for idx in [(0, 0, 0), (3, 1, 5)]:
        original = x[idx]
        x[idx] = original + h
        up = loss()
        x[idx] = original - h
        down = loss()
        x[idx] = original
        assert (up - down) / (2 * h) == pytest.approx(grads.inputs[idx], rel=1e-5, abs=1e-9)


def test_stale_cache_rejected():
    model = fc_regressor((2, 4), rng=9)
    _, cache = model.forward(np.ones((1, 2, 4)))
    model.mark_updated()
    with pytest.raises(StaleCacheError):
        model.backward(cache, np.ones((1, 2)))
    other = fc_regressor((2, 4), rng=9)
    _, foreign = other.forward(np.ones((1, 2, 4)))
    with pytest.raises(StaleCacheError):
        model.backward(foreign, np.ones((1, 2)))


def test_dropout_mask_is_unbiased():
    dropout = DropoutSpec(0.25)
    masks = dropout.mask((200_000,), np.random.default_rng(10))
    assert set(np.unique(masks)) == {0.0, 1.0 / 0.75}
    assert masks.mean() == pytest.approx(1.0, abs=0.01)
    assert np.mean(masks == 0.0) == pytest.approx(0.25, abs=0.01)


def test_training_forward_uses_rng_and_inference_ignores_dropout():
    model = fc_regressor((2, 4), rng=11)
    x = np.random.default_rng(12).normal(size=(8, 2, 4))
    a, _ = model.forward(x, training=True, rng=13)
    b, _ = model.forward(x, training=True, rng=13)
    c, _ = model.forward(x, training=True, rng=14)
    assert a.tobytes() == b.tobytes()
    assert not np.array_equal(a, c)
    np.testing.assert_array_equal(model.forward(x, training=False, rng=13)[0], model.predict(x))


def test_dropout_spec_validation():
    with pytest.raises(NetworkError, match="dropout rate"):
        DropoutSpec(1.0)


def test_dense_layer_validation():
    with pytest.raises(NetworkError, match="do not match biases"):
        DenseLayer(np.zeros((2, 3)), np.zeros(3))
    with pytest.raises(NetworkError, match="unknown activation"):
        DenseLayer(np.zeros((2, 3)), np.zeros(2), "relu")
    with pytest.raises(NetworkError, match="previous width"):
        MlpRegressor((4,), [DenseLayer(np.zeros((2, 3)), np.zeros(2))])


def test_sigmoid_is_stable_for_large_inputs():
    with np.errstate(over="raise"):
        out = activate("sigmoid", np.array([-1000.0, 0.0, 1000.0]))
    np.testing.assert_allclose(out, [0.0, 0.5, 1.0])


def test_mse_loss_and_gradient():
    z = np.array([[0.2, 0.4], [0.6, 0.8]])
    t = np.array([[0.0, 0.4], [1.0, 0.8]])
    assert mse_loss(z, t) == pytest.approx((0.04 + 0.16) / 4)
    np.testing.assert_allclose(mse_grad(z, t), 2.0 / 4 * (z - t))
    with pytest.raises(NetworkError, match="does not match target shape"):
        mse_loss(z, t[:1])
    with pytest.raises(NetworkError, match="empty batch"):
        mse_loss(np.zeros((0, 2)), np.zeros((0, 2)))


def test_adam_first_step_moves_by_learning_rate():
    params = {"w": np.array([1.0, -2.0, 0.5])}
    grads = {"w": np.array([0.3, -4.0, 1e-3])}
    state = AdamState(learning_rate=0.01)
    adam_step(state, params, grads)
    expected = np.array([1.0, -2.0, 0.5]) - 0.01 * grads["w"] / (np.abs(grads["w"]) + 1e-8)
    np.testing.assert_allclose(params["w"], expected, rtol=1e-10)
    assert state.timestep == 1


def test_plain_gradient_descent_and_zero_learning_rate():
    params = {"w": np.array([1.0, 2.0])}
    adam_step(AdamState(learning_rate=0.1), params, {"w": np.array([1.0, -1.0])}, gradient_descent=True)
    np.testing.assert_allclose(params["w"], [0.9, 2.1])
    frozen = {"w": np.array([1.0, 2.0])}
    adam_step(AdamState(learning_rate=0.0), frozen, {"w": np.array([5.0, -5.0])})
    np.testing.assert_array_equal(frozen["w"], [1.0, 2.0])


def test_adam_rejects_unknown_or_misshaped_gradients():
    params = {"w": np.zeros(2)}
    with pytest.raises(NetworkError, match="unknown parameter"):
        adam_step(AdamState(), params, {"b": np.zeros(2)})
    with pytest.raises(NetworkError, match="does not match parameter"):
        adam_step(AdamState(), params, {"w": np.zeros(3)})


def test_plateau_scheduler_halves_after_patience():
    scheduler = ReduceLROnPlateau(factor=0.5, patience=5, min_lr=1e-5)
    lr = 0.015
    lr = scheduler.step(1.0, lr)
    for _ in range(4):
        lr = scheduler.step(1.0, lr)
    assert lr == 0.015
    lr = scheduler.step(1.0, lr)
    assert lr == pytest.approx(0.0075)
    lr = scheduler.step(0.5, lr)
    assert lr == pytest.approx(0.0075)


def test_plateau_scheduler_respects_floor():
    scheduler = ReduceLROnPlateau(factor=0.5, patience=1, min_lr=1e-5)
    lr = 1.5e-5
    scheduler.step(1.0, lr)
    lr = scheduler.step(1.0, lr)
    assert lr == pytest.approx(1e-5)
    assert scheduler.step(1.0, lr) == pytest.approx(1e-5)


def test_fc_parameter_count():
    model = fc_regressor((10, 50), rng=0)
    assert parameter_count(model) == 48_896
    assert model.parameters()["dense3.weights"].size + model.parameters()["dense3.biases"].size == 66
    assert model.n_outputs == 2


def test_artifact_round_trip_is_bit_exact(tmp_path):
    model = fc_regressor((10, 50), rng=15)
    path = save_parameters(tmp_path / "model.irsm", model.parameters(), {"seed": 3})
    params, meta = load_parameters(path)
    assert meta == {"seed": 3}
    assert list(params) == list(model.parameters())
    for name, value in model.parameters().items():
        assert params[name].tobytes() == value.tobytes()


def test_artifact_rejects_corruption(tmp_path):
    path = save_parameters(tmp_path / "model.irsm", {"w": np.arange(4.0)})
    data = path.read_bytes()

    bad_magic = tmp_path / "magic.irsm"
    bad_magic.write_bytes(b"NOTIRS\0" + data[7:])
    with pytest.raises(NetworkError, match="not an irslab model artifact"):
        load_parameters(bad_magic)

    wrong_version = tmp_path / "version.irsm"
    wrong_version.write_bytes(data[:7] + struct.pack("<I", FORMAT_VERSION + 1) + data[11:])
    with pytest.raises(NetworkError, match="artifact version"):
        load_parameters(wrong_version)

    truncated = tmp_path / "truncated.irsm"
    truncated.write_bytes(data[:-8])
    with pytest.raises(NetworkError, match="truncated"):
        load_parameters(truncated)

    trailing = tmp_path / "trailing.irsm"
    trailing.write_bytes(data + b"\0")
    with pytest.raises(NetworkError, match="trailing bytes"):
        load_parameters(trailing)
