"""Mini-batch training loop and inference helpers."""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np

from ..aqi import AqiResult, aqi_series
from ..errors import EmptyDataset, InsufficientHistory, NonFiniteLoss, UsageError
from ..preprocess import TARGETS, WindowedDataset, inverse_transform, make_windows, transform
from ..timeseries import ObservationFrame
from .adam import AdamState, adam_step
from .network import BiLstmNetwork, mse_loss

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainingConfig:
    epochs: int = 20
    batch_size: int = 32
    seed: int = 0
    shuffle: bool = True
    lr: float = 0.001
    clip_norm: float | None = 5.0

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1:
            raise UsageError("epochs and batch_size must be >= 1")


@dataclass
class EpochRecord:
    epoch: int
    mean_loss: float
    seconds: float


@dataclass
class TrainingLog:
    epochs: list[EpochRecord] = field(default_factory=list)
    steps_per_epoch: int = 0
    clip_events: int = 0

    @property
    def losses(self) -> list[float]:
        return [e.mean_loss for e in self.epochs]

    def to_csv(self, timing: bool = True) -> str:
        head = "epoch,mean_loss,seconds" if timing else "epoch,mean_loss"
        rows = [head]
        for e in self.epochs:
            row = f"{e.epoch},{e.mean_loss!r}"
            rows.append(f"{row},{e.seconds:.3f}" if timing else row)
        return "\n".join(rows) + "\n"


def _global_norm(grads: dict[str, np.ndarray]) -> float:
    return math.sqrt(sum(float(np.vdot(g, g)) for g in grads.values()))


def train(net: BiLstmNetwork, data: WindowedDataset, config: TrainingConfig = TrainingConfig(), progress=None) -> TrainingLog:
    """Fit ``net`` on ``data`` with MSE loss and Adam.

    Windows are visited in a fresh permutation each epoch, drawn from a
    generator seeded with ``config.seed``; with ``shuffle=False`` batches
    follow temporal order.  The logged epoch loss is the sample-weighted mean of the batch losses.
    ``progress`` is an optional callable receiving each :class:`EpochRecord`.
    """
    n = len(data)
    if n == 0:
        raise EmptyDataset("no training windows")
    rng = np.random.default_rng(config.seed)
    state = AdamState(lr=config.lr)
    params = net.parameters()
    bs = config.batch_size
    steps = math.ceil(n / bs)
    result = TrainingLog(steps_per_epoch=steps)

    for epoch in range(1, config.epochs + 1):
        start = time.perf_counter()
        order = rng.permutation(n) if config.shuffle else np.arange(n)
        total = 0.0
        for b in range(steps):
            idx = order[b * bs : (b + 1) * bs]
            pred, cache = net.forward(data.inputs[idx])
            loss, d_out = mse_loss(pred, data.targets[idx])
            if not math.isfinite(loss):
                raise NonFiniteLoss(epoch, b + 1, loss)
            grads = net.backward(cache, d_out)
            if config.clip_norm is not None:
                norm = _global_norm(grads)
                if norm > config.clip_norm:
                    scale = config.clip_norm / norm
                    for g in grads.values():
                        g *= scale
                    result.clip_events += 1
                    log.debug("epoch %d batch %d: clipped gradient norm %.3g", epoch, b + 1, norm)
            adam_step(state, params, grads)
            net.mark_updated()
            total += loss * idx.size
        record = EpochRecord(epoch, total / n, time.perf_counter() - start)
        result.epochs.append(record)
        log.info("epoch %d/%d loss %.4e (%.1fs)", epoch, config.epochs, record.mean_loss, record.seconds)
        if progress is not None:
            progress(record)
    if result.clip_events:
        log.info("gradient clipping triggered on %d steps", result.clip_events)
    return result


def _scaled_features(net: BiLstmNetwork, frame: ObservationFrame) -> np.ndarray:
    if net.scaler is None:
        raise UsageError("network has no embedded scaler")
    return transform(net.scaler.subset(net.features), frame.matrix(net.features))


def _unscale_targets(net: BiLstmNetwork, scaled: np.ndarray) -> np.ndarray:
    return inverse_transform(net.scaler.subset(TARGETS), scaled)


def one_step_predictions(net: BiLstmNetwork, frame: ObservationFrame, batch_size: int = 256):
    """One-step-ahead forecasts for every row that has ``lookback`` predecessors.

    Returns ``(rows, predicted, actual)``: source row indices and the
    predicted and observed (pm25, pm10) in original units.
    """
    scaled = _scaled_features(net, frame)
    if scaled.shape[0] <= net.lookback:
        raise InsufficientHistory(f"need more than {net.lookback} rows, got {scaled.shape[0]}")
    ds = make_windows(scaled, net.lookback, net.features)
    out = np.concatenate(
        [net.predict_scaled(ds.inputs[i : i + batch_size]) for i in range(0, len(ds), batch_size)]
    )
    actual = frame.matrix(TARGETS)[ds.target_rows]
    return ds.target_rows, _unscale_targets(net, out), actual


@dataclass(frozen=True)
class Forecast:
    timestamps: np.ndarray
    values: np.ndarray  # (steps, 2) pm25, pm10 in ug/m3
    aqi: list[AqiResult]
    aqi_mode: str


def predict(net: BiLstmNetwork, frame: ObservationFrame, steps: int = 1, aqi_mode: str = "trailing24h") -> Forecast:
    """Forecast ``steps`` hours past the end of ``frame``.

    Each step feeds its scaled (pm25, pm10) prediction back into the
    pollutant slots of the next window; the other features keep their last
    observed values.  AQI uses observed history plus predictions.
    """
    if steps < 1:
        raise UsageError("steps must be >= 1")
    L = net.lookback
    if len(frame) < L:
        raise InsufficientHistory(f"need at least {L} rows of history, got {len(frame)}")
    scaled = _scaled_features(net, frame.take(slice(len(frame) - L, len(frame))))
    tcols = [net.features.index(t) for t in TARGETS]
    window = scaled.copy()
    preds = np.empty((steps, len(TARGETS)))
    for k in range(steps):
        p = net.predict_scaled(window)
        preds[k] = p
        nxt = window[-1].copy()
        nxt[tcols] = p
        window = np.vstack([window[1:], nxt])
    values = _unscale_targets(net, preds)

    hist = frame.matrix(TARGETS)[-(24 - 1) :] if len(frame) else np.empty((0, 2))
    both = np.vstack([hist, values])
    aqis = aqi_series(both[:, 0], both[:, 1], mode=aqi_mode)[-steps:]
    last = frame.timestamps[-1]
    stamps = last + np.arange(1, steps + 1) * np.timedelta64(3600, "s")
    return Forecast(stamps, values, aqis, aqi_mode)
