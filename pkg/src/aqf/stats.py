"""Exploratory statistics: correlation matrix, ADF unit-root test, grouped means."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.special import ndtr

from .errors import AqfError, ConstantSeries, EmptyFrame, SeriesTooShort, SingularRegression, TooFewRows
from .timeseries import RATIO_COLUMN, ObservationFrame, add_ratio_column, epoch_seconds, hour_of_day

# ---------------------------------------------------------------------------
# Pearson correlation


@dataclass(frozen=True)
class CorrelationMatrix:
    columns: tuple[str, ...]
    matrix: np.ndarray

    def __getitem__(self, pair) -> float:
        a, b = pair
        return float(self.matrix[self.columns.index(a), self.columns.index(b)])

    def to_dict(self) -> dict:
        return {
            "columns": list(self.columns),
            "matrix": [[None if math.isnan(v) else float(v) for v in row] for row in self.matrix],
        }


def pearson_corr_matrix(data, columns=None) -> CorrelationMatrix:
    """Pairwise Pearson coefficients.

    ``data`` is an :class:`ObservationFrame` (with ``columns`` naming the
    columns to use) or an ``(n, k)`` array.  Entries involving a constant
    column are NaN.  The result is exactly symmetric with a unit diagonal for
    every non-constant column.
    """
    if isinstance(data, ObservationFrame):
        columns = tuple(columns or data.names)
        x = data.matrix(columns)
    else:
        x = np.asarray(data, dtype=np.float64)
        columns = tuple(columns or (f"c{i}" for i in range(x.shape[1])))
    n, k = x.shape
    if n < 2:
        raise TooFewRows(f"correlation needs at least 2 rows, got {n}")

    centered = x - x.mean(axis=0)
    ss = np.einsum("ij,ij->j", centered, centered)
    r = np.full((k, k), np.nan)
    for i in range(k):
        if ss[i] == 0:
            continue
        r[i, i] = 1.0
        for j in range(i + 1, k):
            if ss[j] == 0:
                continue
            v = centered[:, i] @ centered[:, j] / math.sqrt(ss[i] * ss[j])
            r[i, j] = r[j, i] = min(1.0, max(-1.0, v))
    return CorrelationMatrix(columns, r)


# ---------------------------------------------------------------------------
# Augmented Dickey-Fuller

# MacKinnon (1994) response-surface coefficients, constant-only case, one
# integrated series.  p = Phi(poly(tau)), with separate polynomials below and
# above tau_star.
_TAU_MAX = 2.74
_TAU_MIN = -18.83
_TAU_STAR = -1.61
_SMALLP = (2.1659, 1.4412, 3.8269e-2)
_LARGEP = (1.7339, 9.3202e-1, -1.2745e-1, -1.0368e-2)


def mackinnon_pvalue(stat: float) -> float:
    """Approximate p-value of an ADF statistic (constant, no trend)."""
    if stat > _TAU_MAX:
        return 1.0
    if stat < _TAU_MIN:
        return 0.0
    coef = _SMALLP if stat <= _TAU_STAR else _LARGEP
    z = sum(c * stat**i for i, c in enumerate(coef))
    return float(ndtr(z))


class Verdict(str, Enum):
    STATIONARY = "Stationary"
    NON_STATIONARY = "NonStationary"


@dataclass(frozen=True)
class AdfResult:
    statistic: float
    p_value: float
    lags_used: int
    n_obs: int
    threshold: float

    @property
    def verdict(self) -> Verdict:
        return Verdict.STATIONARY if self.p_value <= self.threshold else Verdict.NON_STATIONARY


@dataclass(frozen=True)
class _Ols:
    coef: np.ndarray
    se: np.ndarray
    ssr: float
    nobs: int

    @property
    def aic(self) -> float:
        llf = -0.5 * self.nobs * (math.log(2 * math.pi) + math.log(self.ssr / self.nobs) + 1.0)
        return -2.0 * llf + 2.0 * self.coef.size


def _ols(y: np.ndarray, X: np.ndarray) -> _Ols:
    nobs, k = X.shape
    if nobs <= k:
        raise SingularRegression(f"{nobs} observations for {k} regressors")
    q, r = np.linalg.qr(X)
    d = np.abs(np.diag(r))
    if d.min() <= 1e-12 * d.max():
        raise SingularRegression("design matrix is rank deficient")
    coef = np.linalg.solve(r, q.T @ y)
    resid = y - X @ coef
    ssr = float(resid @ resid)
    if ssr <= 1e-24 * float(y @ y):
        raise SingularRegression("regression fits exactly; the test statistic is undefined")
    rinv = np.linalg.solve(r, np.eye(k))
    cov_diag = np.einsum("ij,ij->i", rinv, rinv) * ssr / (nobs - k)
    return _Ols(coef, np.sqrt(cov_diag), ssr, nobs)


def _adf_design(x: np.ndarray, dx: np.ndarray, nlags: int, nobs: int) -> tuple[np.ndarray, np.ndarray]:
    # rows use the last nobs differences; columns: const, level, dx lags 1..nlags
    end = dx.size
    start = end - nobs
    cols = [np.ones(nobs), x[start:end]]
    for lag in range(1, nlags + 1):
        cols.append(dx[start - lag : end - lag])
    return dx[start:end], np.column_stack(cols)


def default_max_lag(n: int) -> int:
    return int(math.floor(12.0 * (n / 100.0) ** 0.25))


def adf_test(series, max_lag: int | None = None, threshold: float = 0.05) -> AdfResult:
    """Augmented Dickey-Fuller test with an intercept and no trend.

    Regresses the first difference on a constant, the lagged level and ``p``
    lagged differences.  ``p`` minimizes AIC over ``0..max_lag``, with every
    candidate fitted on the same sample; the chosen order is then refitted on
    all usable observations.  The statistic is the t-ratio of the level
    coefficient and the p-value comes from MacKinnon's response surface.
    """
    x = np.asarray(series, dtype=np.float64)
    n = x.size
    if n == 0 or not np.all(np.isfinite(x)):
        raise SeriesTooShort("series is empty or contains non-finite values")
    if np.ptp(x) == 0:
        raise ConstantSeries("series is constant")
    if max_lag is None:
        max_lag = max(0, min(default_max_lag(n), n // 2 - 2))
    if max_lag < 0:
        raise ValueError("max_lag must be non-negative")
    if n < 10 + max_lag:
        raise SeriesTooShort(f"series of length {n} is too short for max_lag {max_lag}")

    dx = np.diff(x)
    if np.ptp(dx) == 0:
        raise SingularRegression("differenced series is constant (deterministic linear trend)")

    nobs_common = dx.size - max_lag
    best = None
    for p in range(max_lag + 1):
        y, X = _adf_design(x, dx, p, nobs_common)
        aic = _ols(y, X).aic
        if best is None or aic < best[0]:
            best = (aic, p)
    lags = best[1]

    y, X = _adf_design(x, dx, lags, dx.size - lags)
    fit = _ols(y, X)
    stat = float(fit.coef[1] / fit.se[1])
    return AdfResult(stat, mackinnon_pvalue(stat), lags, fit.nobs, threshold)


ADF_COLUMNS = ("date", "wd", "ws", "temp", "rh", "rfall", "pm25", "pm10", "pm25/pm10")


def adf_report(frame: ObservationFrame, max_lag=None, threshold: float = 0.05):
    """ADF result per column, in the order date, base columns, pm25/pm10.

    The date column is tested as elapsed seconds.  A failure in one column is
    returned in place of its result; the remaining columns still run.
    Returns a list of ``(column, AdfResult | AqfError)``.
    """
    if RATIO_COLUMN not in frame.columns:
        frame, _ = add_ratio_column(frame)
    out = []
    for name in ADF_COLUMNS:
        if name == "date":
            secs = epoch_seconds(frame)
            values = secs - secs[0] if secs.size else secs
        elif name == "pm25/pm10":
            values = frame[RATIO_COLUMN]
        else:
            values = frame[name]
        try:
            out.append((name, adf_test(values, max_lag=max_lag, threshold=threshold)))
        except AqfError as err:
            out.append((name, err))
    return out


def format_adf_report(report) -> str:
    """Plain-text rendering in the familiar ``===== col =====`` layout."""
    lines = []
    for name, res in report:
        lines.append(f"===== {name} =====")
        if isinstance(res, AdfResult):
            lines.append(f"ADF Statistic: {res.statistic:f}")
            lines.append(f"p-value: {res.p_value:f}")
            lines.append(res.verdict.value)
        else:
            lines.append(f"error: {type(res).__name__}: {res}")
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# Grouped means

RH_BINS = ((0, 20), (20, 40), (40, 60), (60, 80), (80, 100))
WD_SECTORS = ("N", "NE", "E", "SE", "S", "SW", "W", "NW")
DAY_START, DAY_END = 6, 18


@dataclass(frozen=True)
class GroupedMeans:
    grouping: str
    labels: tuple[str, ...]
    counts: np.ndarray
    mean_pm25: np.ndarray
    mean_pm10: np.ndarray

    def row(self, label: str) -> dict:
        i = self.labels.index(label)
        return {
            "group": label,
            "count": int(self.counts[i]),
            "mean_pm25": float(self.mean_pm25[i]),
            "mean_pm10": float(self.mean_pm10[i]),
        }

    def to_records(self) -> list[dict]:
        recs = [self.row(label) for label in self.labels]
        for r in recs:
            for k in ("mean_pm25", "mean_pm10"):
                if math.isnan(r[k]):
                    r[k] = None
        return recs


def _group_codes(frame: ObservationFrame, grouping: str):
    if grouping == "rh_bins":
        rh = frame["rh"]
        # last bin is closed on the right
        codes = np.minimum((rh // 20).astype(int), len(RH_BINS) - 1)
        labels = tuple(f"[{lo},{hi})" for lo, hi in RH_BINS[:-1]) + ("[80,100]",)
        return codes, labels
    if grouping == "wd_sectors":
        codes = (np.mod(frame["wd"] + 22.5, 360.0) // 45).astype(int)
        return codes, WD_SECTORS
    if grouping == "day_night":
        hours = hour_of_day(frame)
        day = (hours >= DAY_START) & (hours < DAY_END)
        return np.where(day, 0, 1), ("Day", "Night")
    raise ValueError(f"unknown grouping {grouping!r}; use rh_bins, wd_sectors or day_night")


def grouped_means(frame: ObservationFrame, grouping: str) -> GroupedMeans:
    """Mean pm25 and pm10 per relative-humidity bin, wind sector or day/night."""
    if len(frame) == 0:
        raise EmptyFrame("cannot group an empty frame")
    codes, labels = _group_codes(frame, grouping)
    k = len(labels)
    counts = np.bincount(codes, minlength=k)
    with np.errstate(invalid="ignore", divide="ignore"):
        m25 = np.bincount(codes, weights=frame["pm25"], minlength=k) / counts
        m10 = np.bincount(codes, weights=frame["pm10"], minlength=k) / counts
    return GroupedMeans(grouping, tuple(labels), counts, m25, m10)


GROUPINGS = ("rh_bins", "wd_sectors", "day_night")


def analysis_report(frame: ObservationFrame, threshold: float = 0.05, max_lag=None) -> dict:
    """Full exploratory report as a JSON-ready dict."""
    if RATIO_COLUMN not in frame.columns:
        frame, _ = add_ratio_column(frame)
    corr = pearson_corr_matrix(frame, ("wd", "ws", "temp", "rh", "rfall", "pm25", "pm10", RATIO_COLUMN))
    adf = []
    for name, res in adf_report(frame, max_lag=max_lag, threshold=threshold):
        if isinstance(res, AdfResult):
            adf.append(
                {
                    "column": name,
                    "statistic": res.statistic,
                    "p_value": res.p_value,
                    "lags": res.lags_used,
                    "n_obs": res.n_obs,
                    "verdict": res.verdict.value,
                }
            )
        else:
            adf.append({"column": name, "error": f"{type(res).__name__}: {res}"})
    groups = {g: grouped_means(frame, g).to_records() for g in GROUPINGS}
    return {"correlation": corr.to_dict(), "adf": adf, "groups": groups}
