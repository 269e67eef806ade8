"""Hourly observation records: parsing, cleaning and the pm25/pm10 ratio.

The frame is a small immutable column store keyed by name.  Timestamps are
``datetime64[s]`` and every numeric column is a float64 array; missing values
are NaN until :func:`clean` removes the rows that carry them.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from datetime import datetime
from typing import Iterable, Mapping

import numpy as np

from .errors import AllRowsDropped, BadTimestamp, EmptyInput, MissingColumn, UnknownColumn

TIMESTAMP_FORMAT = "%Y-%m-%d %H:%M:%S"
BASE_COLUMNS = ("wd", "ws", "temp", "rh", "rfall", "pm25", "pm10")
RATIO_COLUMN = "pm25_pm10_ratio"

# inclusive physical bounds enforced by clean()
VALID_RANGES = {
    "wd": (0.0, 360.0),
    "ws": (0.0, np.inf),
    "rh": (0.0, 100.0),
    "rfall": (0.0, np.inf),
    "pm25": (0.0, np.inf),
    "pm10": (0.0, np.inf),
}


@dataclass(frozen=True)
class ObservationFrame:
    """Ordered table of hourly records.

    Parameters
    ----------
    timestamps : numpy.ndarray
        ``datetime64[s]`` array, one entry per record.
    columns : mapping of str to numpy.ndarray
        Numeric columns in schema order.  The base columns are always present;
        ``pm25_pm10_ratio`` appears after :func:`add_ratio_column`.
    """

    timestamps: np.ndarray
    columns: Mapping[str, np.ndarray] = field(repr=False)

    def __post_init__(self):
        ts = np.asarray(self.timestamps, dtype="datetime64[s]")
        cols = {}
        for name, values in self.columns.items():
            arr = np.array(values, dtype=np.float64)
            if arr.shape != ts.shape:
                raise ValueError(f"column {name!r} has {arr.size} rows, expected {ts.size}")
            arr.flags.writeable = False
            cols[name] = arr
        missing = [c for c in BASE_COLUMNS if c not in cols]
        if missing:
            raise MissingColumn(f"frame lacks columns {missing}")
        ts = ts.copy()
        ts.flags.writeable = False
        object.__setattr__(self, "timestamps", ts)
        object.__setattr__(self, "columns", cols)

    def __len__(self) -> int:
        return self.timestamps.size

    def __getitem__(self, name: str) -> np.ndarray:
        try:
            return self.columns[name]
        except KeyError:
            raise UnknownColumn(f"no column named {name!r}") from None

    @property
    def names(self) -> list[str]:
        return list(self.columns)

    def take(self, index) -> "ObservationFrame":
        """Row subset (boolean mask, slice or integer indices), order as given."""
        return ObservationFrame(
            self.timestamps[index], {k: v[index] for k, v in self.columns.items()}
        )

    def with_column(self, name: str, values) -> "ObservationFrame":
        cols = dict(self.columns)
        cols[name] = values
        return ObservationFrame(self.timestamps, cols)

    def matrix(self, names: Iterable[str]) -> np.ndarray:
        """Stack the named columns into an ``(n_rows, n_names)`` array."""
        return np.column_stack([self[n] for n in names]) if len(self) else np.empty((0, 0))

    def equals(self, other: "ObservationFrame") -> bool:
        """Exact equality, treating NaN as equal to NaN."""
        if self.names != other.names or len(self) != len(other):
            return False
        if not np.array_equal(self.timestamps, other.timestamps):
            return False
        return all(np.array_equal(self[n], other[n], equal_nan=True) for n in self.names)


@dataclass(frozen=True)
class CleanReport:
    rows_in: int
    rows_out: int
    dropped: dict[str, int]

    @property
    def total_dropped(self) -> int:
        return sum(self.dropped.values())


def _parse_float(cell: str) -> float:
    cell = cell.strip()
    if not cell or cell.lower() == "nan":
        return np.nan
    try:
        return float(cell)
    except ValueError:
        return np.nan


def parse_csv(text) -> ObservationFrame:
    """Parse CSV text (or an open text stream) into a frame.

    The header must name ``date`` and the seven base columns.  Any other
    column, including an unnamed leading index, is ignored, except
    ``pm25_pm10_ratio`` which is kept when present.
    """
    stream = io.StringIO(text) if isinstance(text, str) else text
    reader = csv.reader(stream)
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise EmptyInput("input has no header row") from None

    required = ("date",) + BASE_COLUMNS
    absent = [name for name in required if name not in header]
    if absent:
        raise MissingColumn(f"header lacks required columns: {', '.join(absent)}")
    wanted = list(BASE_COLUMNS) + ([RATIO_COLUMN] if RATIO_COLUMN in header else [])
    date_idx = header.index("date")
    idx = {name: header.index(name) for name in wanted}

    stamps: list[datetime] = []
    values: dict[str, list[float]] = {name: [] for name in wanted}
    for row in reader:
        if not row or all(not c.strip() for c in row):
            continue
        line = reader.line_num
        raw = row[date_idx].strip() if date_idx < len(row) else ""
        try:
            stamps.append(datetime.strptime(raw, TIMESTAMP_FORMAT))
        except ValueError:
            raise BadTimestamp(line, raw) from None
        for name, j in idx.items():
            values[name].append(_parse_float(row[j]) if j < len(row) else np.nan)

    if not stamps:
        raise EmptyInput("input has a header but no data rows")
    return ObservationFrame(np.array(stamps, dtype="datetime64[s]"), values)


def to_csv(frame: ObservationFrame) -> str:
    """Serialize a frame; floats use their shortest round-trip representation."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["date"] + frame.names)
    stamps = frame.timestamps.astype(object)
    cols = [frame[n] for n in frame.names]
    for i, ts in enumerate(stamps):
        cells = [ts.strftime(TIMESTAMP_FORMAT)]
        for col in cols:
            v = float(col[i])
            cells.append("NaN" if np.isnan(v) else repr(v))
        writer.writerow(cells)
    return out.getvalue()


def read_csv(path) -> ObservationFrame:
    with open(path, encoding="utf-8", newline="") as fh:
        return parse_csv(fh)


def write_csv(frame: ObservationFrame, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(to_csv(frame))


def clean(frame: ObservationFrame) -> tuple[ObservationFrame, CleanReport]:
    """Remove incomplete, out-of-range and duplicate rows, then sort by time.

    Rows with any missing value are dropped first, then rows whose values
    violate the physical bounds, then repeated timestamps (the earliest row in
    input order wins).  Missing values are never imputed.
    """
    n = len(frame)
    data = frame.matrix(frame.names)
    missing = np.isnan(data).any(axis=1)

    bad_range = np.zeros(n, dtype=bool)
    for name, (lo, hi) in VALID_RANGES.items():
        col = frame[name]
        with np.errstate(invalid="ignore"):
            bad_range |= (col < lo) | (col > hi)
    bad_range &= ~missing

    keep = ~(missing | bad_range)
    candidates = np.flatnonzero(keep)
    _, first = np.unique(frame.timestamps[candidates], return_index=True)
    unique_rows = np.sort(candidates[first])
    duplicate = keep.sum() - unique_rows.size

    if unique_rows.size == 0:
        raise AllRowsDropped(f"cleaning removed all {n} rows")
    order = unique_rows[np.argsort(frame.timestamps[unique_rows], kind="stable")]
    report = CleanReport(
        rows_in=n,
        rows_out=order.size,
        dropped={
            "missing": int(missing.sum()),
            "out_of_range": int(bad_range.sum()),
            "duplicate": int(duplicate),
        },
    )
    return frame.take(order), report


def add_ratio_column(frame: ObservationFrame) -> tuple[ObservationFrame, int]:
    """Append ``pm25_pm10_ratio``; rows with ``pm10 == 0`` are dropped.

    Returns the new frame and the number of rows dropped.
    """
    ok = frame["pm10"] > 0
    kept = frame.take(ok)
    ratio = kept["pm25"] / kept["pm10"]
    return kept.with_column(RATIO_COLUMN, ratio), int((~ok).sum())


def epoch_seconds(frame: ObservationFrame) -> np.ndarray:
    return frame.timestamps.astype(np.int64).astype(np.float64)


def hour_of_day(frame: ObservationFrame) -> np.ndarray:
    secs = frame.timestamps.astype(np.int64)
    return (secs // 3600) % 24
