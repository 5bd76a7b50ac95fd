"""Uniformly sampled series: CSV ingestion, statistics, splitting, windowing, scaling."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from datetime import timedelta
from pathlib import Path
from typing import Sequence

import numpy as np


class DataError(ValueError):
    """Raised when input data cannot be used (missing file, bad cell, too short...)."""


@dataclass(frozen=True)
class TimeSeries:
    """A scalar wind-speed series (m/s) sampled on a fixed interval."""

    values: np.ndarray
    sample_interval: timedelta = timedelta(minutes=10)
    origin_label: str = ""

    def __post_init__(self):
        arr = np.array(self.values, dtype=np.float64).reshape(-1)
        if arr.size < 1:
            raise DataError("time series must contain at least one value")
        if not np.all(np.isfinite(arr)):
            bad = int(np.flatnonzero(~np.isfinite(arr))[0])
            raise DataError(f"non-finite value at index {bad}")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    def __len__(self) -> int:
        return self.values.size

    def with_values(self, values) -> "TimeSeries":
        return TimeSeries(values, self.sample_interval, self.origin_label)


@dataclass(frozen=True)
class SeriesStats:
    mean: float
    std: float
    min: float
    max: float
    count: int


@dataclass(frozen=True)
class WindowedDataset:
    """Supervised pairs built by delay embedding.

    ``inputs[i]`` holds ``window_dim`` values spaced ``delay`` apart and
    ``targets[i, k]`` is the value ``horizons[k]`` steps after the last of them.
    ``origins[i]`` is the source index of that last input value.
    """

    inputs: np.ndarray
    targets: np.ndarray
    origins: np.ndarray
    window_dim: int = 20
    delay: int = 1
    horizons: tuple[int, ...] = (1, 2, 3)

    def __len__(self) -> int:
        return self.inputs.shape[0]


@dataclass(frozen=True)
class Scaler:
    mean: float
    std: float

    def __post_init__(self):
        if not (self.std > 0 and math.isfinite(self.std)):
            raise DataError("scaler std must be positive and finite")


IDENTITY_SCALER = Scaler(0.0, 1.0)


def _parse_float(cell: str) -> float | None:
    try:
        value = float(cell.strip())
    except ValueError:
        return None
    return value


def load_csv(path, column: str | int = 0, label: str | None = None) -> TimeSeries:
    """Read one column of a comma-delimited file as a series.

    A first row whose selected cell is not numeric is treated as a header.
    ``column`` is a header name or a 0-based index. Errors name the offending
    1-based data row.
    """
    path = Path(path)
    if not path.is_file():
        raise DataError(f"data file not found: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    if not rows:
        raise DataError(f"empty data: {path}")

    header = None
    first = rows[0]
    if isinstance(column, int):
        idx = column
        if idx < 0 or idx >= len(first):
            raise DataError(f"column index {column} out of range in {path}")
        if _parse_float(first[idx]) is None:
            header = first
    else:
        header = [c.strip() for c in first]
        if column not in header:
            raise DataError(f"column {column!r} not found in {path}")
        idx = header.index(column)
    data_rows = rows[1:] if header is not None else rows
    if not data_rows:
        raise DataError(f"empty data: {path}")

    values = np.empty(len(data_rows))
    for i, row in enumerate(data_rows, start=1):
        cell = row[idx] if idx < len(row) else ""
        v = _parse_float(cell)
        if v is None or not math.isfinite(v):
            raise DataError(f"non-numeric value {cell!r} at data row {i} of {path}")
        values[i - 1] = v
    return TimeSeries(values, origin_label=label if label is not None else path.stem)


def save_csv(path, columns: dict[str, Sequence], float_fmt: str = "%.10g") -> None:
    """Write equal-length columns with a header row (UTF-8, LF endings)."""
    names = list(columns)
    cols = [list(columns[n]) for n in names]
    lengths = {len(c) for c in cols}
    if len(lengths) > 1:
        raise ValueError("columns must have equal length")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(names)
        for row in zip(*cols):
            writer.writerow(
                float_fmt % v if isinstance(v, (float, np.floating)) else v for v in row
            )


def summarize(ts: TimeSeries) -> SeriesStats:
    """Mean, population standard deviation, min, max and count."""
    v = ts.values
    return SeriesStats(
        mean=float(v.mean()),
        std=float(v.std()),
        min=float(v.min()),
        max=float(v.max()),
        count=int(v.size),
    )


def split_train_test(ts: TimeSeries, n_test: int) -> tuple[TimeSeries, TimeSeries | None]:
    """Hold out the last ``n_test`` values. The test part is ``None`` when ``n_test == 0``."""
    n = len(ts)
    if not 0 <= n_test < n:
        raise DataError(f"n_test must satisfy 0 <= n_test < {n}, got {n_test}")
    train = ts.with_values(ts.values[: n - n_test])
    if n_test == 0:
        return train, None
    return train, ts.with_values(ts.values[n - n_test :])


def min_length(window_dim: int, delay: int, horizons: Sequence[int]) -> int:
    return (window_dim - 1) * delay + max(horizons) + 1


def make_windows(
    ts: TimeSeries | np.ndarray,
    window_dim: int = 20,
    delay: int = 1,
    horizons: Sequence[int] = (1, 2, 3),
) -> WindowedDataset:
    """Delay-embed a series into (input window, multi-horizon target) rows."""
    values = ts.values if isinstance(ts, TimeSeries) else np.asarray(ts, dtype=np.float64)
    horizons = tuple(int(h) for h in horizons)
    if window_dim < 1 or delay < 1:
        raise ValueError("window_dim and delay must be >= 1")
    if not horizons or min(horizons) < 1:
        raise ValueError("horizons must be a non-empty list of positive integers")
    need = min_length(window_dim, delay, horizons)
    n = values.size
    if n < need:
        raise DataError(f"series too short for windowing: need at least {need} values, got {n}")

    span = (window_dim - 1) * delay
    n_samples = n - span - max(horizons)
    starts = np.arange(n_samples)
    input_idx = starts[:, None] + delay * np.arange(window_dim)[None, :]
    origins = starts + span
    target_idx = origins[:, None] + np.array(horizons)[None, :]
    return WindowedDataset(
        inputs=values[input_idx],
        targets=values[target_idx],
        origins=origins,
        window_dim=window_dim,
        delay=delay,
        horizons=horizons,
    )


def fit_scaler(train: TimeSeries | np.ndarray) -> Scaler:
    values = train.values if isinstance(train, TimeSeries) else np.asarray(train, dtype=np.float64)
    std = float(values.std())
    if std == 0.0:
        raise DataError("cannot fit scaler: zero variance training series")
    return Scaler(float(values.mean()), std)


def transform(scaler: Scaler, ts):
    """z-score with the fitted statistics; accepts a TimeSeries or an array."""
    if isinstance(ts, TimeSeries):
        return ts.with_values(transform(scaler, ts.values))
    return (np.asarray(ts, dtype=np.float64) - scaler.mean) / scaler.std


def inverse(scaler: Scaler, ts):
    if isinstance(ts, TimeSeries):
        return ts.with_values(inverse(scaler, ts.values))
    return np.asarray(ts, dtype=np.float64) * scaler.std + scaler.mean
