"""EPA Air Quality Index for PM2.5 and PM10.

Sub-indices are piecewise-linear interpolations over a breakpoint table.  The
table is data: the default ships in ``data/epa_pm_breakpoints.json`` and any
file with the same layout can replace it.  Arithmetic is done on exact
fractions so that breakpoints map to their index endpoints without floating
point drift and half-way values always round up.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from decimal import ROUND_DOWN, Decimal
from enum import Enum
from fractions import Fraction
from importlib import resources
from typing import Sequence

import numpy as np

from .errors import NegativeConcentration, OutOfRange, UnknownPollutant

POLLUTANTS = ("pm25", "pm10")
MAX_INDEX = 500


@dataclass(frozen=True)
class Segment:
    c_lo: Decimal
    c_hi: Decimal
    i_lo: int
    i_hi: int


@dataclass(frozen=True)
class BreakpointTable:
    """Ordered breakpoint segments per pollutant plus input truncation digits."""

    segments: dict[str, tuple[Segment, ...]]
    decimals: dict[str, int]
    version: str = ""

    def __post_init__(self):
        for pollutant, segs in self.segments.items():
            _validate(pollutant, segs, self.decimals[pollutant])

    @classmethod
    def from_dict(cls, d: dict) -> "BreakpointTable":
        decimals = d.get("decimals", {"pm25": 1, "pm10": 0})
        segs = {}
        for p in POLLUTANTS:
            if p not in d:
                continue
            segs[p] = tuple(
                Segment(Decimal(str(s["c_lo"])), Decimal(str(s["c_hi"])), int(s["i_lo"]), int(s["i_hi"]))
                for s in d[p]
            )
        return cls(segs, {p: int(decimals[p]) for p in segs}, str(d.get("version", "")))

    @classmethod
    def from_json(cls, path) -> "BreakpointTable":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self) -> dict:
        d = {"version": self.version, "decimals": dict(self.decimals)}
        for p, segs in self.segments.items():
            d[p] = [
                {"c_lo": float(s.c_lo), "c_hi": float(s.c_hi), "i_lo": s.i_lo, "i_hi": s.i_hi}
                for s in segs
            ]
        return d


def _validate(pollutant: str, segs: Sequence[Segment], decimals: int) -> None:
    step = Decimal(1).scaleb(-decimals)
    if not segs:
        raise ValueError(f"{pollutant}: empty breakpoint table")
    if segs[0].c_lo != 0 or segs[0].i_lo != 0:
        raise ValueError(f"{pollutant}: first segment must start at concentration 0, index 0")
    if segs[-1].i_hi != MAX_INDEX:
        raise ValueError(f"{pollutant}: last segment must end at index {MAX_INDEX}")
    for k, s in enumerate(segs):
        if not (s.c_lo < s.c_hi and s.i_lo < s.i_hi):
            raise ValueError(f"{pollutant}: segment {k} is not increasing")
        if k and (s.c_lo - segs[k - 1].c_hi != step or s.i_lo != segs[k - 1].i_hi + 1):
            raise ValueError(f"{pollutant}: segment {k} is not contiguous with segment {k - 1}")


def _load_default() -> BreakpointTable:
    text = resources.files("aqf").joinpath("data/epa_pm_breakpoints.json").read_text(encoding="utf-8")
    return BreakpointTable.from_dict(json.loads(text))


DEFAULT_TABLE = _load_default()


class Category(str, Enum):
    GOOD = "Good"
    MODERATE = "Moderate"
    UNHEALTHY_SENSITIVE = "UnhealthySensitive"
    UNHEALTHY = "Unhealthy"
    VERY_UNHEALTHY = "VeryUnhealthy"
    HAZARDOUS = "Hazardous"


_CATEGORY_UPPER = (
    (50, Category.GOOD),
    (100, Category.MODERATE),
    (150, Category.UNHEALTHY_SENSITIVE),
    (200, Category.UNHEALTHY),
    (300, Category.VERY_UNHEALTHY),
    (500, Category.HAZARDOUS),
)


def categorize(index: int) -> Category:
    if not 0 <= index <= MAX_INDEX:
        raise OutOfRange(f"AQI {index} outside 0..{MAX_INDEX}")
    for upper, cat in _CATEGORY_UPPER:
        if index <= upper:
            return cat
    raise AssertionError("unreachable")


def truncate(pollutant: str, concentration: float, table: BreakpointTable = DEFAULT_TABLE) -> Decimal:
    """Truncate (never round) to the pollutant's reporting resolution."""
    q = Decimal(1).scaleb(-table.decimals[pollutant])
    return Decimal(repr(float(concentration))).quantize(q, rounding=ROUND_DOWN)


def _sub_index(pollutant: str, concentration: float, table: BreakpointTable) -> tuple[int, bool]:
    if pollutant not in table.segments:
        raise UnknownPollutant(f"no breakpoints for {pollutant!r}")
    if not math.isfinite(concentration):
        raise OutOfRange(f"non-finite concentration {concentration!r}")
    if concentration < 0:
        raise NegativeConcentration(f"{pollutant} concentration {concentration} < 0")
    c = truncate(pollutant, concentration, table)
    segs = table.segments[pollutant]
    if c > segs[-1].c_hi:
        return MAX_INDEX, True
    seg = next(s for s in segs if s.c_lo <= c <= s.c_hi)
    value = Fraction(seg.i_hi - seg.i_lo) / Fraction(seg.c_hi - seg.c_lo) * Fraction(c - seg.c_lo) + seg.i_lo
    return math.floor(value + Fraction(1, 2)), False


def sub_index(pollutant: str, concentration: float, table: BreakpointTable = DEFAULT_TABLE) -> int:
    """Integer sub-index for one pollutant; above-scale inputs clamp to 500."""
    return _sub_index(pollutant, concentration, table)[0]


@dataclass(frozen=True)
class AqiResult:
    sub_index_pm25: int
    sub_index_pm10: int
    composite: int
    dominant: str
    category: Category
    clamped: bool = False

    def to_dict(self) -> dict:
        return {
            "sub_index_pm25": self.sub_index_pm25,
            "sub_index_pm10": self.sub_index_pm10,
            "composite": self.composite,
            "dominant": self.dominant,
            "category": self.category.value,
            "clamped": self.clamped,
        }


def composite_aqi(pm25: float, pm10: float, table: BreakpointTable = DEFAULT_TABLE) -> AqiResult:
    """Both sub-indices, their maximum and its category.  Ties credit PM2.5."""
    i25, clamp25 = _sub_index("pm25", pm25, table)
    i10, clamp10 = _sub_index("pm10", pm10, table)
    composite = max(i25, i10)
    dominant = "pm25" if i25 >= i10 else "pm10"
    return AqiResult(i25, i10, composite, dominant, categorize(composite), clamp25 or clamp10)


AQI_MODES = ("instant", "trailing24h")


def aqi_series(pm25, pm10, mode: str = "trailing24h", window: int = 24, table: BreakpointTable = DEFAULT_TABLE):
    """AQI for each step of paired concentration series.

    ``instant`` uses each hourly value as is.  ``trailing24h`` averages the
    current and up to ``window - 1`` preceding values, so the first entries
    use shorter windows.
    """
    pm25 = np.asarray(pm25, dtype=np.float64)
    pm10 = np.asarray(pm10, dtype=np.float64)
    if pm25.shape != pm10.shape:
        raise ValueError("pm25 and pm10 series differ in length")
    if mode == "instant":
        a, b = pm25, pm10
    elif mode == "trailing24h":
        a, b = _trailing_mean(pm25, window), _trailing_mean(pm10, window)
    else:
        raise ValueError(f"unknown AQI mode {mode!r}; use one of {AQI_MODES}")
    return [composite_aqi(x, y, table) for x, y in zip(a, b)]


def _trailing_mean(x: np.ndarray, window: int) -> np.ndarray:
    csum = np.concatenate(([0.0], np.cumsum(x)))
    idx = np.arange(1, x.size + 1)
    lo = np.maximum(idx - window, 0)
    return (csum[idx] - csum[lo]) / (idx - lo)
