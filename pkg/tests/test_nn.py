import numpy as np
import pytest

from aqf.errors import CorruptFile, EmptyDataset, EmptySequence, InsufficientHistory, ShapeMismatch, StaleCache, VersionMismatch
from aqf.nn import (
    AdamState,
    BiLstmLayer,
    BiLstmNetwork,
    DenseLayer,
    LstmCellParams,
    TrainingConfig,
    adam_step,
    bilstm_forward,
    load_model,
    lstm_cell_forward,
    mse_loss,
    one_step_predictions,
    predict,
    save_model,
    train,
)
from aqf.nn.io import dumps_model
from aqf.preprocess import DEFAULT_FEATURES, ScalerParams, WindowedDataset, fit_scaler, make_windows, transform
from aqf.synth import SynthSpec, synth_generate

TINY = (("bilstm", 3, "relu"), ("bilstm", 3, "tanh"), ("dense", 8, "relu"), ("dense", 2, "sigmoid"))


def sig(x):
    return 1.0 / (1.0 + np.exp(-x))


def numeric_grad(net, X, Y, name, step=1e-5):
    arr = net.parameters()[name]
    out = np.zeros_like(arr)
    for idx in np.ndindex(arr.shape):
        orig = arr[idx]
        arr[idx] = orig + step
        lp = mse_loss(net.forward(X)[0], Y)[0]
        arr[idx] = orig - step
        lm = mse_loss(net.forward(X)[0], Y)[0]
        arr[idx] = orig
        out[idx] = (lp - lm) / (2 * step)
    return out


def grad_close(analytic, numeric, rel=1e-4, floor=1e-6):
    err = np.abs(analytic - numeric)
    scale = np.maximum(np.abs(analytic), np.abs(numeric))
    return np.all((err <= floor) | (err <= rel * scale))


class TestCell:
    def test_zero_weights_zero_state(self):
        p = LstmCellParams.zeros(3, 4)
        h, c, _ = lstm_cell_forward(p, np.array([1.0, -2.0, 3.0]), np.zeros(4), np.zeros(4))
        assert np.all(h == 0) and np.all(c == 0)

    def test_scalar_hand_values(self):
        p = LstmCellParams(np.ones((4, 1)), np.zeros((4, 1)), np.zeros(4))
        h, c, cache = lstm_cell_forward(p, np.array([0.5]), np.zeros(1), np.zeros(1))
        s = sig(0.5)
        assert cache["i"][0] == pytest.approx(0.62246, abs=1e-5)
        assert cache["g"][0] == pytest.approx(0.46212, abs=1e-5)
        assert c[0] == pytest.approx(s * np.tanh(0.5), rel=1e-14)
        assert c[0] == pytest.approx(0.287649, abs=1e-6)
        assert h[0] == pytest.approx(s * np.tanh(s * np.tanh(0.5)), rel=1e-14)
        assert h[0] == pytest.approx(0.174270, abs=1e-6)

    def test_tanh_bounds(self):
        rng = np.random.default_rng(0)
        p = LstmCellParams.init(rng, 5, 6)
        for _ in range(20):
            h, c, _ = lstm_cell_forward(p, rng.normal(size=5) * 50, rng.normal(size=6), rng.normal(size=6) * 5)
            assert np.all(np.abs(h) < 1)

    def test_shape_mismatch(self):
        with pytest.raises(ShapeMismatch):
            lstm_cell_forward(LstmCellParams.zeros(3, 2), np.zeros(4), np.zeros(2), np.zeros(2))

    def test_sequence_matches_single_steps(self):
        rng = np.random.default_rng(2)
        p = LstmCellParams.init(rng, 3, 4)
        layer = BiLstmLayer(p, LstmCellParams.zeros(3, 4), "relu")
        X = rng.normal(size=(5, 3))
        out = bilstm_forward(layer, X)
        h, c = np.zeros(4), np.zeros(4)
        for t in range(5):
            h, c, _ = lstm_cell_forward(p, X[t], h, c, "relu")
            np.testing.assert_allclose(out[t, :4], h, rtol=0, atol=1e-14)


class TestBiLstm:
    def test_single_step_symmetry(self):
        rng = np.random.default_rng(1)
        cell = LstmCellParams.init(rng, 2, 3)
        layer = BiLstmLayer(cell, LstmCellParams(cell.W_x.copy(), cell.W_h.copy(), cell.b.copy()))
        out = bilstm_forward(layer, rng.normal(size=(1, 2)))
        np.testing.assert_array_equal(out[0, :3], out[0, 3:])

    def test_palindrome(self):
        rng = np.random.default_rng(4)
        cell = LstmCellParams.init(rng, 3, 5)
        twin = LstmCellParams(cell.W_x.copy(), cell.W_h.copy(), cell.b.copy())
        layer = BiLstmLayer(cell, twin)
        half = rng.normal(size=(4, 3))
        seq = np.vstack([half, half[::-1]])
        out = bilstm_forward(layer, seq)
        T = seq.shape[0]
        for t in range(T):
            assert np.max(np.abs(out[t, :5] - out[T - 1 - t, 5:])) <= 1e-12

    @pytest.mark.parametrize("T,F,H", [(1, 1, 1), (7, 3, 4), (12, 5, 2)])
    def test_shapes(self, T, F, H):
        layer = BiLstmLayer.init(np.random.default_rng(T), F, H)
        assert bilstm_forward(layer, np.zeros((T, F))).shape == (T, 2 * H)

    def test_empty(self):
        layer = BiLstmLayer.init(np.random.default_rng(0), 2, 2)
        with pytest.raises(EmptySequence):
            bilstm_forward(layer, np.zeros((0, 2)))

    def test_first_step_reaches_last_output(self):
        net = BiLstmNetwork.build(("a", "b"), 6, TINY, seed=5)
        layer = net.layers[0]
        rng = np.random.default_rng(8)
        a = rng.normal(size=(6, 2))
        b = a.copy()
        b[0] += 1.0
        assert not np.allclose(bilstm_forward(layer, a)[-1], bilstm_forward(layer, b)[-1])
        # the forward half alone also sees t=0, but only through the recurrence
        layer_rev = BiLstmLayer(layer.forward_cell, layer.backward_cell)
        perm = bilstm_forward(layer_rev, a[::-1])
        assert not np.allclose(perm, bilstm_forward(layer_rev, a))


class TestNetwork:
    def test_default_shapes(self):
        net = BiLstmNetwork.build(DEFAULT_FEATURES, 24, seed=0)
        widths = [(l.n_inputs, l.n_outputs) for l in net.layers]
        assert widths == [(7, 40), (40, 20), (20, 1024), (1024, 2)]
        assert [l.activation for l in net.layers] == ["relu", "tanh", "relu", "sigmoid"]

    def test_outputs_in_unit_interval(self):
        net = BiLstmNetwork.build(DEFAULT_FEATURES, 24, seed=1)
        X = np.random.default_rng(0).normal(size=(16, 24, 7)) * 10
        y = net.predict_scaled(X)
        assert y.shape == (16, 2)
        assert np.all((y > 0) & (y < 1))

    def test_zero_output_layer(self):
        net = BiLstmNetwork.build(DEFAULT_FEATURES, 24, seed=1)
        net.layers[-1].W[:] = 0
        net.layers[-1].b[:] = 0
        y = net.predict_scaled(np.random.default_rng(1).uniform(size=(24, 7)))
        assert np.array_equal(y, [0.5, 0.5])

    def test_deterministic(self):
        X = np.random.default_rng(3).uniform(size=(24, 7))
        a = BiLstmNetwork.build(DEFAULT_FEATURES, 24, seed=9).predict_scaled(X)
        b = BiLstmNetwork.build(DEFAULT_FEATURES, 24, seed=9).predict_scaled(X)
        assert a.tobytes() == b.tobytes()

    def test_wrong_feature_count(self):
        net = BiLstmNetwork.build(DEFAULT_FEATURES, 24)
        with pytest.raises(ShapeMismatch):
            net.forward(np.zeros((24, 5)))

    def test_bad_chain(self):
        rng = np.random.default_rng(0)
        with pytest.raises(ShapeMismatch):
            BiLstmNetwork([BiLstmLayer.init(rng, 2, 3), DenseLayer.init(rng, 5, 2)], 4, ("a", "b"))


class TestLoss:
    def test_perfect(self):
        loss, g = mse_loss([0.3, 0.4], [0.3, 0.4])
        assert loss == 0 and np.all(g == 0)

    def test_unit_errors(self):
        assert mse_loss([1.0, 1.0], [0.0, 0.0])[0] == 1.0

    def test_hand_batch(self):
        p = np.array([[0.1, 0.3], [0.0, 0.2]])
        loss, g = mse_loss(p, np.zeros((2, 2)))
        assert loss == pytest.approx(0.035, abs=1e-15)
        np.testing.assert_allclose(g, 2 * p / 4)

    def test_batch_mean_of_samples(self):
        rng = np.random.default_rng(0)
        p, y = rng.uniform(size=(9, 2)), rng.uniform(size=(9, 2))
        per = [mse_loss(p[i], y[i])[0] for i in range(9)]
        assert abs(mse_loss(p, y)[0] - np.mean(per)) <= 1e-12

    def test_shape(self):
        with pytest.raises(ShapeMismatch):
            mse_loss(np.zeros(2), np.zeros(3))


class TestBackward:
    def _setup(self, seed=3):
        net = BiLstmNetwork.build(("a", "b"), 4, TINY, seed=seed)
        rng = np.random.default_rng(seed)
        return net, rng.normal(size=(3, 4, 2)), rng.uniform(size=(3, 2))

    def test_finite_differences(self):
        net, X, Y = self._setup()
        pred, cache = net.forward(X)
        grads = net.backward(cache, mse_loss(pred, Y)[1])
        assert set(grads) == set(net.parameters())
        for name in net.parameters():
            assert grads[name].shape == net.parameters()[name].shape
            assert grad_close(grads[name], numeric_grad(net, X, Y, name)), name

    def test_zero_upstream(self):
        net, X, _ = self._setup()
        _, cache = net.forward(X)
        grads = net.backward(cache, np.zeros((3, 2)))
        assert all(np.all(g == 0) for g in grads.values())

    def test_dead_input_column(self):
        net, X, Y = self._setup()
        X[:, :, 1] = 0.0
        pred, cache = net.forward(X)
        grads = net.backward(cache, mse_loss(pred, Y)[1])
        for side in ("forward", "backward"):
            assert np.all(grads[f"0.{side}.W_x"][:, 1] == 0)

    def test_stale_cache(self):
        net, X, Y = self._setup()
        pred, cache = net.forward(X)
        net.mark_updated()
        with pytest.raises(StaleCache):
            net.backward(cache, mse_loss(pred, Y)[1])


class TestAdam:
    def test_first_step(self):
        p = {"w": np.zeros(1)}
        adam_step(AdamState(), p, {"w": np.ones(1)})
        assert p["w"][0] == pytest.approx(-9.99999990e-4, abs=1e-15)

    def test_zero_gradient(self):
        p = {"w": np.array([1.5, -2.0])}
        adam_step(AdamState(), p, {"w": np.zeros(2)})
        np.testing.assert_array_equal(p["w"], [1.5, -2.0])

    def test_second_step_magnitude(self):
        p = {"w": np.zeros(1)}
        s = AdamState()
        adam_step(s, p, {"w": np.ones(1)})
        before = p["w"][0]
        adam_step(s, p, {"w": np.ones(1)})
        # m_hat = v_hat = 1 again at t = 2
        assert before - p["w"][0] == pytest.approx(0.001 / (1 + 1e-8), rel=1e-12)
        assert s.t == 2 and np.all(s.v["w"] >= 0)

    def test_shape_mismatch(self):
        with pytest.raises(ShapeMismatch):
            adam_step(AdamState(), {"w": np.zeros(2)}, {"w": np.zeros(3)})


def _small_dataset(rows=300, lookback=6):
    f = synth_generate(SynthSpec(rows=rows, seed=1))
    sc = fit_scaler(f)
    return f, sc, make_windows(transform(sc, f), lookback)


class TestTrain:
    def test_loss_decreases(self):
        f, sc, ds = _small_dataset()
        net = BiLstmNetwork.build(DEFAULT_FEATURES, 6, TINY, seed=0, scaler=sc)
        log = train(net, ds, TrainingConfig(epochs=8, batch_size=16))
        assert log.losses[-1] < log.losses[0]
        assert log.steps_per_epoch == int(np.ceil(len(ds) / 16))

    def test_repeatable(self):
        f, sc, ds = _small_dataset(200, 4)
        runs = []
        for _ in range(2):
            net = BiLstmNetwork.build(DEFAULT_FEATURES, 4, TINY, seed=4, scaler=sc)
            log = train(net, ds, TrainingConfig(epochs=2, batch_size=32, seed=4))
            runs.append((log.to_csv(timing=False), dumps_model(net)))
        assert runs[0] == runs[1]

    def test_unshuffled_order(self):
        f, sc, ds = _small_dataset(200, 4)
        a = BiLstmNetwork.build(DEFAULT_FEATURES, 4, TINY, seed=4, scaler=sc)
        b = BiLstmNetwork.build(DEFAULT_FEATURES, 4, TINY, seed=4, scaler=sc)
        la = train(a, ds, TrainingConfig(epochs=1, shuffle=False, seed=1))
        lb = train(b, ds, TrainingConfig(epochs=1, shuffle=False, seed=2))
        # seed only drives the permutation, so temporal order ignores it
        assert la.losses == lb.losses

    def test_empty(self):
        net = BiLstmNetwork.build(("a", "b"), 4, TINY)
        empty = WindowedDataset(np.zeros((0, 4, 2)), np.zeros((0, 2)), ("a", "b"), np.zeros(0, int))
        with pytest.raises(EmptyDataset):
            train(net, empty)


@pytest.fixture(scope="module")
def trained():
    f, sc, ds = _small_dataset(300, 6)
    net = BiLstmNetwork.build(DEFAULT_FEATURES, 6, TINY, seed=2, scaler=sc)
    train(net, ds, TrainingConfig(epochs=2))
    return net, f


class TestPredict:
    def test_single_step_is_forward_plus_inverse(self, trained):
        net, f = trained
        fc = predict(net, f, steps=1)
        window = transform(net.scaler, f.matrix(DEFAULT_FEATURES)[-6:])
        raw = net.predict_scaled(window)
        expected = raw * (net.scaler.maxs[5:7] - net.scaler.mins[5:7]) + net.scaler.mins[5:7]
        np.testing.assert_array_equal(fc.values[0], expected)
        assert fc.timestamps[0] == f.timestamps[-1] + np.timedelta64(1, "h")

    def test_range(self, trained):
        net, f = trained
        fc = predict(net, f, steps=30)
        assert fc.values.shape == (30, 2)
        assert np.all(fc.values >= 0)
        assert np.all(fc.values <= net.scaler.maxs[5:7])
        assert np.all(fc.values >= net.scaler.mins[5:7])
        assert len(fc.aqi) == 30 and fc.aqi_mode == "trailing24h"

    def test_recursive_feeds_back(self, trained):
        net, f = trained
        two = predict(net, f, steps=2).values
        one = predict(net, f, steps=1).values
        np.testing.assert_array_equal(two[0], one[0])

    def test_insufficient_history(self, trained):
        net, f = trained
        with pytest.raises(InsufficientHistory):
            predict(net, f.take(slice(0, 3)))

    def test_one_step_predictions(self, trained):
        net, f = trained
        rows, pred, actual = one_step_predictions(net, f)
        assert rows[0] == 6 and pred.shape == actual.shape == (len(f) - 6, 2)


class TestPersistence:
    def test_roundtrip_bit_exact(self, tmp_path):
        f, sc, ds = _small_dataset(120, 6)
        net = BiLstmNetwork.build(DEFAULT_FEATURES, 6, TINY, seed=11, scaler=sc)
        train(net, ds, TrainingConfig(epochs=1))
        path = tmp_path / "m.json"
        save_model(net, path)
        back = load_model(path)
        assert predict(back, f, 5).values.tobytes() == predict(net, f, 5).values.tobytes()
        assert back.architecture() == net.architecture() and back.seed == 11
        assert dumps_model(back) == path.read_text()

    def test_truncated(self, tmp_path):
        net = BiLstmNetwork.build(("a", "b"), 4, TINY, scaler=ScalerParams(("a", "b"), [0, 0], [1, 1]))
        text = dumps_model(net)
        path = tmp_path / "m.json"
        path.write_text(text[: len(text) // 2])
        with pytest.raises(CorruptFile):
            load_model(path)

    def test_unknown_version(self, tmp_path):
        net = BiLstmNetwork.build(("a", "b"), 4, TINY)
        path = tmp_path / "m.json"
        path.write_text(dumps_model(net).replace('"format_version": 1', '"format_version": 99'))
        with pytest.raises(VersionMismatch):
            load_model(path)

    def test_wrong_shapes(self, tmp_path):
        import json

        net = BiLstmNetwork.build(("a", "b"), 4, TINY)
        doc = json.loads(dumps_model(net))
        doc["weights"]["3"]["W"] = [[0.0]]
        path = tmp_path / "m.json"
        path.write_text(json.dumps(doc))
        with pytest.raises(CorruptFile):
            load_model(path)
