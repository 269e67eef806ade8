import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from aqf.errors import DegenerateSplit, EmptyFrame, SeriesTooShort, ShapeMismatch, UnknownColumn
from aqf.preprocess import (
    DEFAULT_FEATURES,
    ScalerParams,
    chrono_split,
    fit_scaler,
    inverse_transform,
    make_windows,
    transform,
)
from aqf.timeseries import BASE_COLUMNS, ObservationFrame

from test_timeseries import SAMPLE_HEAD
from aqf.timeseries import parse_csv


def frame_of(n, **cols):
    stamps = np.datetime64("2018-05-01T00:00:00") + np.arange(n) * np.timedelta64(3600, "s")
    full = {c: np.asarray(cols.get(c, np.arange(n, dtype=float)), dtype=float) for c in BASE_COLUMNS}
    return ObservationFrame(stamps, full)


class TestScaler:
    def test_extrema(self):
        p = fit_scaler(frame_of(2, pm10=[0.0, 10.0]), ["pm10"])
        assert (p.mins[0], p.maxs[0]) == (0.0, 10.0)

    def test_constant_column(self):
        p = fit_scaler(frame_of(3, temp=[5.0, 5.0, 5.0]), ["temp"])
        assert (p.mins[0], p.maxs[0]) == (5.0, 5.0)
        assert np.all(transform(p, [[5.0], [7.0]]) == 0.0)

    def test_sample_temp(self):
        p = fit_scaler(parse_csv(SAMPLE_HEAD), ["temp"])
        assert (p.mins[0], p.maxs[0]) == (24.3, 24.9)

    def test_visible_sample_rows_temp(self):
        # both visible blocks of the dataset sample
        temps = [24.5, 24.9, 24.4, 24.3, 24.3, 29.7, 29.1, 28.6, 28.2, 28.0]
        p = fit_scaler(frame_of(len(temps), temp=temps), ["temp"])
        assert (p.mins[0], p.maxs[0]) == (24.3, 29.7)

    def test_unknown_column(self):
        with pytest.raises(UnknownColumn):
            fit_scaler(frame_of(3), ["nope"])

    def test_empty(self):
        with pytest.raises(EmptyFrame):
            fit_scaler(frame_of(0), ["pm10"])

    def test_midpoint_and_endpoints(self):
        p = ScalerParams(("x",), [0.0], [10.0])
        assert transform(p, [[5.0]])[0, 0] == 0.5
        assert transform(p, [[0.0]])[0, 0] == 0.0
        assert transform(p, [[10.0]])[0, 0] == 1.0

    def test_roundtrip_values(self):
        p = ScalerParams(("temp",), [24.3], [29.7])
        x = np.array([[24.3], [29.7], [26.0]])
        np.testing.assert_allclose(inverse_transform(p, transform(p, x)), x, rtol=0, atol=1e-12)

    def test_shape_mismatch(self):
        p = ScalerParams(("a", "b"), [0, 0], [1, 1])
        with pytest.raises(ShapeMismatch):
            transform(p, np.zeros((3, 3)))

    def test_no_test_leakage(self):
        f = frame_of(10)
        train, test = chrono_split(f, 0.8)
        p1 = fit_scaler(train)
        perturbed_test = test.with_column("pm10", test["pm10"] * 1000 + 7)
        # fitting only on the train slice ignores whatever the test rows hold
        p2 = fit_scaler(train)
        assert perturbed_test["pm10"][0] != test["pm10"][0]
        np.testing.assert_array_equal(p1.mins, p2.mins)
        np.testing.assert_array_equal(p1.maxs, p2.maxs)
        p_all = fit_scaler(f)
        assert p_all.maxs[-1] != p1.maxs[-1]


_cols = arrays(np.float64, st.tuples(st.integers(2, 30), st.just(3)),
               elements=st.floats(-1e4, 1e4, allow_nan=False))


@settings(max_examples=200, deadline=None)
@given(_cols)
def test_scaler_roundtrip_and_order(x):
    p = ScalerParams(("a", "b", "c"), x.min(axis=0), x.max(axis=0))
    y = transform(p, x)
    nonconst = p.maxs > p.mins
    back = inverse_transform(p, y)
    span = np.maximum(np.abs(x).max(axis=0), 1.0)
    # 1e-12 relative to the column magnitude
    assert np.all(np.abs(back - x)[:, nonconst] <= 1e-12 * span[nonconst])
    assert np.all((y >= 0) & (y <= 1))
    for j in range(3):
        order = np.argsort(x[:, j], kind="stable")
        assert np.all(np.diff(y[order, j]) >= 0)


class TestSplit:
    @pytest.mark.parametrize("frac,expected", [(0.8, (8, 2)), (0.99, (9, 1))])
    def test_floor(self, frac, expected):
        tr, te = chrono_split(frame_of(10), frac)
        assert (len(tr), len(te)) == expected
        assert tr.timestamps[-1] < te.timestamps[0]

    @pytest.mark.parametrize("frac", [1.0, 0.0, 0.05])
    def test_degenerate(self, frac):
        with pytest.raises(DegenerateSplit):
            chrono_split(frame_of(10), frac)


class TestWindows:
    def _matrix(self, n):
        return np.arange(n * 7, dtype=float).reshape(n, 7)

    def test_count_and_targets(self):
        m = self._matrix(5)
        ds = make_windows(m, 2)
        assert len(ds) == 3
        assert list(ds.target_rows) == [2, 3, 4]
        np.testing.assert_array_equal(ds.targets, m[2:, 5:7])

    def test_too_short(self):
        with pytest.raises(SeriesTooShort):
            make_windows(self._matrix(5), 5)

    def test_unit_lookback(self):
        m = self._matrix(3)
        ds = make_windows(m, 1)
        np.testing.assert_array_equal(ds.inputs[:, 0], m[:2])
        np.testing.assert_array_equal(ds.targets, m[1:, 5:7])

    def test_feature_mismatch(self):
        with pytest.raises(ShapeMismatch):
            make_windows(np.zeros((5, 3)), 2)


@settings(max_examples=100, deadline=None)
@given(st.integers(2, 40), st.integers(1, 10))
def test_window_reconstruction(n, lookback):
    if n <= lookback:
        return
    rng = np.random.default_rng(n * 31 + lookback)
    m = rng.normal(size=(n, len(DEFAULT_FEATURES)))
    ds = make_windows(m, lookback)
    assert len(ds) == n - lookback
    rebuilt = np.vstack([ds.inputs[0], ds.inputs[1:, -1], ds.inputs[-1:, -1]])[: n - 1]
    rebuilt = np.vstack([ds.inputs[0]] + [w[-1:] for w in ds.inputs[1:]])
    np.testing.assert_array_equal(rebuilt, m[: n - 1])
    np.testing.assert_array_equal(ds.targets[-1], m[-1, 5:7])
    np.testing.assert_array_equal(ds.targets, m[lookback:, 5:7])
