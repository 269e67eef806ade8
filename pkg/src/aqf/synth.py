"""Deterministic synthetic hourly dataset with the base observation schema.

Construction, per hour ``t`` with hour-of-day ``h``:

* ``temp``: 27 C mean, 3.5 C daily swing peaking at 15:00, plus a slow
  AR(1) drift and small noise.
* ``rh``: decreasing linear function of ``temp`` plus noise, clipped to
  [0, 100], so humidity and temperature are strongly anti-correlated.
* ``wd``: uniform on [0, 360); ``ws``: gamma distributed.
* ``rfall``: zero except for sparse exponential showers.
* ``pm10``: ``base + diurnal_amplitude * sin(2 pi (h - 9) / 24)`` plus
  ``day_boost`` for hours 6..17, plus a persistent AR(1) component
  (coefficient ``persistence``, marginal size ``drift_scale``) and white
  noise of size ``noise_scale``; floored at 1.
* ``pm25``: ``pm25_ratio * pm10`` plus white noise, floored at 0.

Consequences relied on by the tests: daytime mean PM exceeds night-time mean
PM, pm25 and pm10 correlate above 0.9, every numeric column is stationary,
and ``pm10 > 0`` everywhere.  Values are rounded to one decimal.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime

import numpy as np

from .errors import BadSpec
from .timeseries import TIMESTAMP_FORMAT, ObservationFrame


@dataclass(frozen=True)
class SynthSpec:
    rows: int = 5000
    seed: int = 7
    start: str = "2018-05-01 00:00:00"
    diurnal_amplitude: float = 20.0
    day_boost: float = 15.0
    noise_scale: float = 0.8
    pm25_ratio: float = 0.4
    base_pm10: float = 90.0
    drift_scale: float = 12.0
    persistence: float = 0.99

    def validate(self) -> None:
        if self.rows < 100:
            raise BadSpec(f"rows must be >= 100, got {self.rows}")
        if self.noise_scale < 0 or self.drift_scale < 0 or self.day_boost < 0 or self.diurnal_amplitude < 0:
            raise BadSpec("amplitudes and noise scales must be non-negative")
        if not 0 <= self.persistence < 1:
            raise BadSpec("persistence must lie in [0, 1)")
        if not 0 < self.pm25_ratio <= 1:
            raise BadSpec("pm25_ratio must lie in (0, 1]")
        try:
            datetime.strptime(self.start, TIMESTAMP_FORMAT)
        except ValueError:
            raise BadSpec(f"start must look like 2018-05-01 00:00:00, got {self.start!r}") from None


def _ar1(rng: np.random.Generator, n: int, phi: float, sd: float) -> np.ndarray:
    # stationary start, marginal standard deviation sd
    out = np.empty(n)
    innov = rng.normal(0.0, sd * np.sqrt(1.0 - phi * phi), size=n)
    out[0] = rng.normal(0.0, sd)
    for t in range(1, n):
        out[t] = phi * out[t - 1] + innov[t]
    return out


def synth_generate(spec: SynthSpec = SynthSpec()) -> ObservationFrame:
    spec.validate()
    n = spec.rows
    rng = np.random.default_rng(spec.seed)
    start = np.datetime64(datetime.strptime(spec.start, TIMESTAMP_FORMAT), "s")
    stamps = start + np.arange(n) * np.timedelta64(3600, "s")
    hour = ((stamps - stamps.astype("datetime64[D]")).astype(np.int64) // 3600).astype(float)
    phase = 2 * np.pi * (hour - 9.0) / 24.0

    temp = 27.0 + 3.5 * np.sin(phase) + _ar1(rng, n, 0.97, 1.0) + rng.normal(0, 0.2, n)
    rh = np.clip(80.0 - 4.0 * (temp - 27.0) + rng.normal(0, 2.0, n), 0.0, 100.0)
    wd = rng.uniform(0.0, 360.0, n)
    ws = rng.gamma(2.0, 0.6, n)
    showers = rng.random(n) < 0.03
    rfall = np.where(showers, rng.exponential(3.0, n), 0.0)

    day = (hour >= 6) & (hour < 18)
    pm10 = (
        spec.base_pm10
        + spec.diurnal_amplitude * np.sin(phase)
        + spec.day_boost * day
        + _ar1(rng, n, spec.persistence, spec.drift_scale)
        + rng.normal(0.0, spec.noise_scale, n)
    )
    pm10 = np.maximum(pm10, 1.0)
    pm25 = np.maximum(spec.pm25_ratio * pm10 + rng.normal(0.0, spec.noise_scale * 0.5, n), 0.0)

    cols = {
        "wd": np.round(wd, 1) % 360.0,
        "ws": np.round(ws, 1),
        "temp": np.round(temp, 1),
        "rh": np.round(rh, 1),
        "rfall": np.round(rfall, 1),
        "pm25": np.round(pm25, 1),
        "pm10": np.maximum(np.round(pm10, 1), 1.0),
    }
    return ObservationFrame(stamps, cols)
