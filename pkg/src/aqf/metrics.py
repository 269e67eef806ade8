"""Regression metrics in original units: MSE, RMSE, MAE and R^2."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .errors import EmptyInput, LengthMismatch

TARGET_NAMES = ("pm25", "pm10")


@dataclass(frozen=True)
class Metrics:
    mse: float
    rmse: float
    mae: float
    r2: float  # NaN when the truth is constant
    n: int

    def to_dict(self) -> dict:
        d = asdict(self)
        if math.isnan(d["r2"]):
            d["r2"] = None
        return d


@dataclass(frozen=True)
class MetricsReport:
    pooled: Metrics
    per_target: dict[str, Metrics]
    units: str = "ug/m3"

    def __getitem__(self, name: str) -> Metrics:
        return self.pooled if name == "pooled" else self.per_target[name]

    def to_dict(self) -> dict:
        d = {"pooled": self.pooled.to_dict()}
        d.update({k: v.to_dict() for k, v in self.per_target.items()})
        d["n"] = self.pooled.n
        d["units"] = self.units
        return d


def regression_metrics(pred, truth) -> Metrics:
    pred = np.asarray(pred, dtype=np.float64).ravel()
    truth = np.asarray(truth, dtype=np.float64).ravel()
    if pred.size != truth.size:
        raise LengthMismatch(f"{pred.size} predictions for {truth.size} truths")
    if pred.size == 0:
        raise EmptyInput("no samples to evaluate")
    err = pred - truth
    mse = float(np.mean(err * err))
    mae = float(np.mean(np.abs(err)))
    ss_res = float(err @ err)
    dev = truth - truth.mean()
    ss_tot = float(dev @ dev)
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else math.nan
    return Metrics(mse, math.sqrt(mse), mae, r2, int(pred.size))


def evaluate(predictions, truths, names=TARGET_NAMES, units: str = "ug/m3") -> MetricsReport:
    """Pooled and per-target metrics for ``(n, k)`` prediction/truth arrays.

    Pooled metrics treat every target entry as one sample; R^2 for the pooled
    case is taken against the grand mean of all entries.
    """
    p = np.asarray(predictions, dtype=np.float64)
    t = np.asarray(truths, dtype=np.float64)
    if p.ndim == 1:
        p = p[:, None]
    if t.ndim == 1:
        t = t[:, None]
    if p.shape != t.shape:
        raise LengthMismatch(f"predictions {p.shape} vs truths {t.shape}")
    if p.shape[0] == 0:
        raise EmptyInput("no samples to evaluate")
    names = tuple(names)[: p.shape[1]]
    per = {name: regression_metrics(p[:, j], t[:, j]) for j, name in enumerate(names)}
    return MetricsReport(regression_metrics(p, t), per, units)
