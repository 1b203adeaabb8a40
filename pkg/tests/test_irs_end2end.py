from __future__ import annotations

import math

import numpy as np
import pytest

from channel import ChannelModel, deinterleave, interleave, real_channel_matrix
from dataset import DatasetConfig, TrainingSet, generate_training_set, irs_observations, received_matrices, source_samples
from geometry import SceneGeometry
from irs_end2end import (
    EndToEndModel,
    FixedChannelLayer,
    IrsLayer,
    TrainingConfig,
    TrainingError,
    channel_noise,
    export_phases,
    irs_backward,
    irs_forward,
    load_model,
    phases_sidecar,
    predict_doas,
    read_phases,
    received_to_input,
    save_model,
    train_end_to_end,
    validation_loss,
    write_learning_curve,
)
from neural_core import NetworkError, StaleCacheError, mse_grad, mse_loss

TINY = SceneGeometry(m_a_y=2, m_a_z=2, m_r_x=2, m_r_y=2)
TINY_DATA = DatasetConfig(n_train=48, n_test=8, snapshots=3, seed=1)
FAST = TrainingConfig(epochs=2, batch_size=16, seed=2)


@pytest.fixture(scope="module")
def data() -> TrainingSet:
    return generate_training_set(TINY, TINY_DATA)


def _params_copy(model: EndToEndModel) -> dict[str, np.ndarray]:
    return {name: value.copy() for name, value in model.parameters().items()}


def test_irs_forward_rotates_pairs():
    np.testing.assert_array_equal(irs_forward([1.0, 2.0, 3.0, 4.0], [0.0, 0.0]), [1.0, 2.0, 3.0, 4.0])
    z = irs_forward([1.0, 0.0], [math.pi / 2])
    np.testing.assert_allclose(z, [0.0, 1.0], atol=1e-15)
    rng = np.random.default_rng(0)
    v = rng.normal(size=(3, 4)) + 1j * rng.normal(size=(3, 4))
    phi = rng.uniform(-math.pi, math.pi, size=4)
    np.testing.assert_allclose(deinterleave(irs_forward(interleave(v), phi)), v * np.exp(1j * phi), atol=1e-14)


def test_irs_forward_matches_block_matrix():
    layer = IrsLayer.random(3, 1)
    x = np.random.default_rng(2).normal(size=6)
    np.testing.assert_allclose(layer.forward(x), layer.weight_matrix() @ x, atol=1e-15)


def test_irs_layer_rejects_bad_inputs():
    with pytest.raises(NetworkError, match="even trailing length"):
        irs_forward([1.0, 2.0, 3.0], [0.0])
    with pytest.raises(NetworkError, match="expects 4 interleaved values"):
        irs_forward([1.0, 2.0], [0.0, 0.0])
    with pytest.raises(NetworkError, match="finite"):
        IrsLayer(np.array([0.0, math.inf]))


def _central_differences(energy, point: np.ndarray, h: float = 1e-6) -> np.ndarray:
    grad = np.empty_like(point)
    for index in np.ndindex(point.shape):
        original = point[index]
        point[index] = original + h
        up = energy()
        point[index] = original - h
        down = energy()
        point[index] = original
        grad[index] = (up - down) / (2 * h)
    return grad


def _relative_error(approx: np.ndarray, exact: np.ndarray) -> float:
    return float(np.linalg.norm(approx - exact) / np.linalg.norm(exact))


def test_irs_backward_matches_finite_differences():
    for seed in range(100):
        rng = np.random.default_rng(1000 + seed)
        m_r = int(rng.integers(1, 5))
        x = rng.normal(size=(2, 3, 2 * m_r))
        phi = rng.uniform(-math.pi, math.pi, size=m_r)
        weights = rng.normal(size=x.shape)

        def energy() -> float:
            return float(np.sum(weights * irs_forward(x, phi)))

        grad_phi, grad_x = irs_backward(x, phi, weights)
        assert _relative_error(_central_differences(energy, phi), grad_phi) <= 1e-6
        assert _relative_error(_central_differences(energy, x), grad_x) <= 1e-6


def test_single_block_backward_closed_form():
    grad_phi, grad_x = irs_backward(np.array([1.0, 0.0]), np.array([0.0]), np.array([0.0, 1.0]))
    np.testing.assert_array_equal(grad_phi, [1.0])
    np.testing.assert_array_equal(grad_x, [0.0, 1.0])


def test_irs_weight_matrix_is_orthogonal_and_preserves_norm():
    for seed in range(10):
        layer = IrsLayer.random(6, seed)
        w = layer.weight_matrix()
        np.testing.assert_allclose(w.T @ w, np.eye(12), atol=1e-12)
        x = np.random.default_rng(50 + seed).normal(size=(4, 12))
        np.testing.assert_allclose(
            np.linalg.norm(layer.forward(x), axis=-1), np.linalg.norm(x, axis=-1), rtol=1e-14
        )


def test_fixed_channel_layer_shapes_and_readonly():
    channel = ChannelModel.from_geometry(TINY)
    layer = FixedChannelLayer.from_channel(channel)
    assert (layer.n_out, layer.n_in) == (8, 8)
    assert layer.parameters() == {}
    with pytest.raises(ValueError):
        layer.w_real[0, 0] = 1.0
    with pytest.raises(NetworkError, match="expects 8 inputs"):
        layer.forward(np.zeros(6))


def test_fixed_channel_layer_examples():
    unit = FixedChannelLayer(real_channel_matrix(np.array([[1.0 + 0j]])))
    np.testing.assert_array_equal(unit.forward(np.array([0.3, -0.7])), [0.3, -0.7])
    channel = ChannelModel.from_geometry(TINY)
    layer = FixedChannelLayer.from_channel(channel)
    assert not np.any(layer.forward(np.zeros(8)))
    z = np.random.default_rng(24).normal(size=8)
    np.testing.assert_allclose(deinterleave(layer.forward(z)), channel.gain @ deinterleave(z), atol=1e-14)
    grad = np.random.default_rng(25).normal(size=8)
    np.testing.assert_array_equal(layer.backward(grad), grad @ layer.w_real)


def test_training_path_matches_physical_pipeline():
    model = EndToEndModel.build(SceneGeometry(), 10, rng=4)
    channel = ChannelModel.from_geometry(model.geometry)
    rng = np.random.default_rng(5)
    for _ in range(100):
        model.irs.phi[:] = rng.uniform(-math.pi, math.pi, size=model.irs.size)
        doas = rng.uniform([0, 0], [90, 180], size=(1, 2))
        sources = source_samples(1, 10, rng)
        layered = model.training_path(irs_observations(model.geometry, doas, sources))
        physical = received_to_input(received_matrices(channel, export_phases(model), doas, sources))
        assert layered.shape == (1, 10, 50)
        assert np.max(np.abs(layered - physical)) <= 1e-10


def test_export_phases_wraps():
    model = EndToEndModel.build(TINY, 3, rng=4)
    model.irs.phi[:] = 2 * math.pi + 0.1
    np.testing.assert_allclose(export_phases(model).phases, 0.1, atol=1e-12)
    model.irs.phi[:] = -math.pi
    np.testing.assert_allclose(export_phases(model).phases, -math.pi, atol=1e-12)


def test_model_gradients_match_finite_differences(data):
    model = EndToEndModel.build(TINY, 3, rng=6)
    x = data.inputs[:4]
    target = data.labels[:4]
    noise = np.random.default_rng(7).normal(scale=0.01, size=(4, 3, 8))

    def loss() -> float:
        pred, _ = model.forward(x, noise)
        return mse_loss(pred, target)

    pred, cache = model.forward(x, noise)
    grads = model.backward(cache, mse_grad(pred, target))
    assert set(grads) == set(model.parameters())
    for name, value in model.parameters().items():
        assert _relative_error(_central_differences(loss, value, h=1e-5), grads[name]) <= 1e-6, name


def test_backward_rejects_stale_cache(data):
    model = EndToEndModel.build(TINY, 3, rng=8)
    pred, cache = model.forward(data.inputs[:2])
    model.mark_updated()
    with pytest.raises(StaleCacheError):
        model.backward(cache, np.ones_like(pred))


def test_noise_shape_is_checked(data):
    model = EndToEndModel.build(TINY, 3, rng=8)
    with pytest.raises(NetworkError, match="noise shape"):
        model.training_path(data.inputs[:2], np.zeros((2, 3, 6)))


def test_channel_noise_variance():
    clean = np.ones((2000, 10, 50))
    noise = channel_noise(clean, np.zeros(2000), np.random.default_rng(9), nominal_power=1.0)
    assert np.var(noise) == pytest.approx(1.0 / 500, rel=0.01)
    own = channel_noise(clean, np.full(2000, 10.0), np.random.default_rng(9))
    assert np.var(own) == pytest.approx(500 / (500 * 10), rel=0.01)


def test_training_is_deterministic(data):
    first = train_end_to_end(EndToEndModel.build(TINY, 3, rng=10), data, FAST)
    second = train_end_to_end(EndToEndModel.build(TINY, 3, rng=10), data, FAST)
    assert [r.val_loss for r in first.curve] == [r.val_loss for r in second.curve]
    for name, value in first.model.parameters().items():
        assert value.tobytes() == second.model.parameters()[name].tobytes()
    assert len(first.curve) == 2
    assert first.curve[0].epoch == 1


def test_zero_learning_rate_leaves_parameters_unchanged(data):
    model = EndToEndModel.build(TINY, 3, rng=11)
    before = _params_copy(model)
    train_end_to_end(model, data, FAST.model_copy(update={"learning_rate": 0.0}))
    for name, value in model.parameters().items():
        np.testing.assert_array_equal(value, before[name])


def test_zero_epochs_returns_initial_model(data):
    model = EndToEndModel.build(TINY, 3, rng=12)
    before = _params_copy(model)
    result = train_end_to_end(model, data, FAST.model_copy(update={"epochs": 0}))
    assert result.curve == []
    assert math.isnan(result.final_val_loss)
    for name, value in model.parameters().items():
        assert value.tobytes() == before[name].tobytes()


def test_frozen_irs_keeps_phases(data):
    model = EndToEndModel.build(TINY, 3, rng=13, train_irs=False)
    phi = model.irs.phi.copy()
    weights = model.regressor.parameters()["dense0.weights"].copy()
    train_end_to_end(model, data, FAST)
    np.testing.assert_array_equal(model.irs.phi, phi)
    assert not np.array_equal(model.regressor.parameters()["dense0.weights"], weights)
    assert "irs.phi" not in model.trainable_parameters()


def test_joint_training_moves_phases(data):
    model = EndToEndModel.build(TINY, 3, rng=14)
    phi = model.irs.phi.copy()
    train_end_to_end(model, data, FAST)
    assert not np.array_equal(model.irs.phi, phi)


def test_validation_loss_is_repeatable(data):
    model = EndToEndModel.build(TINY, 3, rng=15)
    assert validation_loss(model, data, FAST) == validation_loss(model, data, FAST)


def test_nan_inputs_abort_training(data):
    poisoned = TrainingSet(np.full_like(data.inputs, np.nan), data.labels, data.train_index, data.val_index)
    with pytest.raises(TrainingError, match="loss became nan"):
        train_end_to_end(EndToEndModel.build(TINY, 3, rng=16), poisoned, FAST)


def test_snapshot_mismatch_is_rejected(data):
    with pytest.raises(TrainingError, match="snapshots"):
        train_end_to_end(EndToEndModel.build(TINY, 5, rng=17), data, FAST)


def test_training_config_validation():
    with pytest.raises(ValueError, match="training.epochs must be >= 0"):
        TrainingConfig(epochs=-1)
    with pytest.raises(ValueError, match="training.lr_factor must be in"):
        TrainingConfig(lr_factor=1.0)


def test_predictions_are_in_field_of_view():
    model = EndToEndModel.build(TINY, 3, rng=18)
    ys = np.random.default_rng(19).normal(size=(5, 4, 3)) + 0j
    doas = predict_doas(model, ys)
    assert doas.shape == (5, 2)
    assert np.all((doas >= 0) & (doas <= [90.0, 180.0]))
    with pytest.raises(NetworkError, match="expected received matrices"):
        predict_doas(model, ys[:, :3])


def test_save_and_load_round_trip(tmp_path):
    model = EndToEndModel.build(TINY, 3, rng=20)
    model.irs.phi[0] = 4.0
    path = save_model(tmp_path / "model.irsm", model, {"seed": 20})
    sidecar = phases_sidecar(path)
    assert sidecar.name == "model.phases.txt"
    exported = read_phases(sidecar)
    assert np.all((exported.phases >= -math.pi) & (exported.phases < math.pi))
    np.testing.assert_array_equal(exported.phases, export_phases(model).phases)
    loaded = load_model(path, TINY)
    for name, value in model.parameters().items():
        assert loaded.parameters()[name].tobytes() == value.tobytes()
    x = np.random.default_rng(21).normal(size=(2, 3, 8))
    np.testing.assert_array_equal(loaded.predict_normalized(x), model.predict_normalized(x))


def test_load_rejects_other_geometry(tmp_path):
    path = save_model(tmp_path / "model.irsm", EndToEndModel.build(TINY, 3, rng=22))
    with pytest.raises(NetworkError, match="trained for geometry"):
        load_model(path, SceneGeometry())
    with pytest.raises(NetworkError, match="not found"):
        load_model(tmp_path / "missing.irsm")


def test_learning_curve_csv(data, tmp_path):
    result = train_end_to_end(EndToEndModel.build(TINY, 3, rng=23), data, FAST)
    path = write_learning_curve(tmp_path / "curve.csv", result.curve, "seed=2")
    lines = path.read_text().splitlines()
    assert lines[0] == "# seed=2"
    assert lines[1] == "epoch,train_loss,val_loss,learning_rate"
    assert len(lines) == 4
