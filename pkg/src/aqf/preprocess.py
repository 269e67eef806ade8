"""Min-max scaling, chronological splitting and sliding-window framing."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateSplit, EmptyFrame, SeriesTooShort, ShapeMismatch, UnknownColumn
from .timeseries import ObservationFrame

DEFAULT_FEATURES = ("wd", "ws", "temp", "rh", "rfall", "pm25", "pm10")
TARGETS = ("pm25", "pm10")
DEFAULT_LOOKBACK = 24


@dataclass(frozen=True)
class ScalerParams:
    """Per-column extrema, in fixed column order."""

    columns: tuple[str, ...]
    mins: np.ndarray
    maxs: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "columns", tuple(self.columns))
        object.__setattr__(self, "mins", np.asarray(self.mins, dtype=np.float64))
        object.__setattr__(self, "maxs", np.asarray(self.maxs, dtype=np.float64))
        if not (len(self.columns) == self.mins.size == self.maxs.size):
            raise ShapeMismatch("columns, mins and maxs differ in length")
        if np.any(self.mins > self.maxs):
            raise ValueError("scaler min exceeds max")

    def subset(self, names) -> "ScalerParams":
        idx = [self.index(n) for n in names]
        return ScalerParams(tuple(names), self.mins[idx], self.maxs[idx])

    def index(self, name: str) -> int:
        try:
            return self.columns.index(name)
        except ValueError:
            raise UnknownColumn(f"scaler has no column {name!r}") from None

    def to_dict(self) -> dict:
        return {"columns": list(self.columns), "mins": self.mins.tolist(), "maxs": self.maxs.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "ScalerParams":
        return cls(tuple(d["columns"]), d["mins"], d["maxs"])


def fit_scaler(frame: ObservationFrame, columns=DEFAULT_FEATURES) -> ScalerParams:
    """Record min and max of each named column over the rows of ``frame``.

    Fit on the training slice only; the test rows must not leak into the
    extrema.
    """
    if len(frame) == 0:
        raise EmptyFrame("cannot fit a scaler on an empty frame")
    data = frame.matrix(columns)
    return ScalerParams(tuple(columns), data.min(axis=0), data.max(axis=0))


def _as_matrix(params: ScalerParams, values) -> np.ndarray:
    if isinstance(values, ObservationFrame):
        return values.matrix(params.columns)
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.shape[-1] != len(params.columns):
        raise ShapeMismatch(
            f"expected {len(params.columns)} columns, got trailing dimension {arr.shape[-1]}"
        )
    return arr


def transform(params: ScalerParams, values) -> np.ndarray:
    """Map each column to ``(x - min) / (max - min)``; constant columns map to 0."""
    x = _as_matrix(params, values)
    span = params.maxs - params.mins
    safe = np.where(span > 0, span, 1.0)
    return np.where(span > 0, (x - params.mins) / safe, 0.0)


def inverse_transform(params: ScalerParams, values) -> np.ndarray:
    x = _as_matrix(params, values)
    return x * (params.maxs - params.mins) + params.mins


def chrono_split(frame: ObservationFrame, train_fraction: float = 0.8):
    """First ``floor(n * train_fraction)`` rows train, the rest test.  No shuffling."""
    n = len(frame)
    if not 0.0 < train_fraction < 1.0:
        raise DegenerateSplit(f"train_fraction must lie in (0, 1), got {train_fraction}")
    cut = int(np.floor(n * train_fraction))
    if cut == 0 or cut == n:
        raise DegenerateSplit(f"split of {n} rows at {train_fraction} leaves one side empty")
    return frame.take(slice(0, cut)), frame.take(slice(cut, n))


@dataclass(frozen=True)
class WindowedDataset:
    """Supervised windows for next-step forecasting.

    ``inputs`` has shape ``(n, lookback, n_features)``; ``targets`` has shape
    ``(n, 2)`` holding the scaled (pm25, pm10) pair of the row right after
    each window.  ``target_rows`` are the source row indices of the targets.
    """

    inputs: np.ndarray
    targets: np.ndarray
    feature_order: tuple[str, ...]
    target_rows: np.ndarray

    def __len__(self) -> int:
        return self.inputs.shape[0]

    @property
    def lookback(self) -> int:
        return self.inputs.shape[1]

    def subset(self, index) -> "WindowedDataset":
        return WindowedDataset(
            self.inputs[index], self.targets[index], self.feature_order, self.target_rows[index]
        )


def make_windows(
    scaled: np.ndarray,
    lookback: int = DEFAULT_LOOKBACK,
    feature_order=DEFAULT_FEATURES,
    targets=TARGETS,
) -> WindowedDataset:
    """Frame an ``(n, F)`` matrix into ``n - lookback`` windows.

    Window ``i`` covers rows ``[i, i + lookback)`` and its target is the
    target-column pair at row ``i + lookback``.
    """
    scaled = np.asarray(scaled, dtype=np.float64)
    feature_order = tuple(feature_order)
    if scaled.ndim != 2 or scaled.shape[1] != len(feature_order):
        raise ShapeMismatch(f"matrix shape {scaled.shape} does not match {len(feature_order)} features")
    if lookback < 1:
        raise SeriesTooShort(f"lookback must be >= 1, got {lookback}")
    n = scaled.shape[0]
    if n <= lookback:
        raise SeriesTooShort(f"series of length {n} is too short for lookback {lookback}")
    missing = [t for t in targets if t not in feature_order]
    if missing:
        raise UnknownColumn(f"target columns {missing} are not among the features")

    tcols = [feature_order.index(t) for t in targets]
    windows = np.lib.stride_tricks.sliding_window_view(scaled, lookback, axis=0)[: n - lookback]
    # sliding_window_view puts the window axis last
    inputs = np.ascontiguousarray(windows.transpose(0, 2, 1))
    rows = np.arange(lookback, n)
    return WindowedDataset(inputs, scaled[rows][:, tcols].copy(), feature_order, rows)
