"""Turn raw rollout logs into supervised training matrices and splits.

The windowing convention matches the runtime input vector exactly, so
training rows and controller inputs are byte-compatible:

* the label for row k is the output sampled at step k;
* the actuator block holds the inputs applied during the transitions that
  led to step k, most recent first: u[k-1], u[k-2], ..., u[k-n_d];
* the output-history block holds y[k-1], ..., y[k-d_d], most recent first;
* the sensor block is the unshifted sensor row at step k.

Block bounds are derived from the label anchor (labels start at row
max(n_d, d_d)), which fixes the off-by-one choices once and for all.
All transforms are pure.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ArgumentError, DataError

__all__ = [
    "RawLog",
    "Normalizer",
    "fit_normalizer",
    "window_dataset",
    "timeseries_splits",
    "downsample",
    "resample_prior",
    "write_raw_csv",
    "read_raw_csv",
]


@dataclass(frozen=True)
class RawLog:
    """Aligned rollout history: inputs, outputs, sensors, one row per step."""

    U_hist: np.ndarray
    Y_hist: np.ndarray
    S_hist: np.ndarray
    dt: float

    def __post_init__(self):
        q = self.U_hist.shape[0]
        if self.Y_hist.shape[0] != q or self.S_hist.shape[0] != q:
            raise DataError(
                f"row counts differ: U={self.U_hist.shape[0]}, "
                f"Y={self.Y_hist.shape[0]}, S={self.S_hist.shape[0]}"
            )
        if self.dt <= 0:
            raise DataError(f"dt must be positive, got {self.dt}")

    @property
    def rows(self) -> int:
        return self.U_hist.shape[0]


@dataclass(frozen=True)
class Normalizer:
    """Per-column min-max map onto [-0.5, 0.5]."""

    col_min: np.ndarray
    col_max: np.ndarray

    @property
    def span(self) -> np.ndarray:
        return self.col_max - self.col_min

    def apply(self, data: np.ndarray) -> np.ndarray:
        return (np.asarray(data, dtype=np.float64) - self.col_min) / self.span - 0.5

    def invert(self, data: np.ndarray) -> np.ndarray:
        return (np.asarray(data, dtype=np.float64) + 0.5) * self.span + self.col_min


def fit_normalizer(data: np.ndarray, min_span: float = 1e-6) -> Normalizer:
    """Fit per-column bounds; constant columns get a widened ``min_span`` range."""
    a = np.asarray(data, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] < 1:
        raise DataError(f"need a non-empty 2-D matrix to fit, got shape {a.shape}")
    lo = a.min(axis=0)
    hi = a.max(axis=0)
    narrow = (hi - lo) < min_span
    lo = np.where(narrow, lo - min_span / 2.0, lo)
    hi = np.where(narrow, hi + min_span / 2.0, hi)
    return Normalizer(col_min=lo, col_max=hi)


def window_dataset(log: RawLog, n_d: int, d_d: int) -> tuple[np.ndarray, np.ndarray]:
    """Assemble lagged feature rows X and one-step labels Y from a log.

    X has q - max(n_d, d_d) rows and n_d*m + d_d*n + w columns laid out
    [actuator blocks | output blocks | sensors] as described in the module
    docstring. Y holds the matching output rows.
    """
    if n_d < 1 or d_d < 1:
        raise ArgumentError(f"history depths must be >= 1, got n_d={n_d}, d_d={d_d}")
    q = log.rows
    first = max(n_d, d_d)
    if q <= first:
        raise DataError(f"need more than max(n_d, d_d)={first} rows, got {q}")
    count = q - first
    blocks = []
    # Lag i block: source rows (first-1-i) .. (q-2-i), i.e. u[k-1-i] for labels k.
    for i in range(n_d):
        blocks.append(log.U_hist[first - 1 - i : q - 1 - i])
    for i in range(d_d):
        blocks.append(log.Y_hist[first - 1 - i : q - 1 - i])
    if log.S_hist.shape[1] > 0:
        blocks.append(log.S_hist[first:q])
    X = np.hstack(blocks) if blocks else np.zeros((count, 0))
    Y = log.Y_hist[first:q].copy()
    return X, Y


def timeseries_splits(rows: int, folds: int = 10) -> list[tuple[tuple[int, int], tuple[int, int]]]:
    """Expanding-window splits preserving temporal order.

    The rows are cut into ``folds + 1`` contiguous chunks whose sizes
    differ by at most one. Split i trains on chunks 0..i and tests on
    chunk i+1, so no test index ever precedes a training index; the last
    split is the conventional held-out test set. Each range is a
    half-open (start, stop) pair.
    """
    if folds < 1:
        raise ArgumentError(f"folds must be >= 1, got {folds}")
    if rows < folds + 1:
        raise DataError(f"need at least folds+1={folds + 1} rows, got {rows}")
    base = rows // (folds + 1)
    rem = rows % (folds + 1)
    sizes = [base + (1 if i < rem else 0) for i in range(folds + 1)]
    bounds = np.cumsum([0] + sizes)
    out = []
    for i in range(folds):
        out.append(((0, int(bounds[i + 1])), (int(bounds[i + 1]), int(bounds[i + 2]))))
    return out


def downsample(log: RawLog, factor: int) -> RawLog:
    """Keep every ``factor``-th row, scaling dt to match."""
    if int(factor) != factor or factor < 1:
        raise ArgumentError(f"factor must be a positive integer, got {factor}")
    factor = int(factor)
    return RawLog(
        U_hist=log.U_hist[::factor].copy(),
        Y_hist=log.Y_hist[::factor].copy(),
        S_hist=log.S_hist[::factor].copy(),
        dt=log.dt * factor,
    )


def resample_prior(log: RawLog, target_dt: float) -> RawLog:
    """Resample to an arbitrary rate by nearest-prior-timestamp selection.

    Covers non-integer rate changes (e.g. 200 Hz capture replayed at
    130 Hz): each target instant takes the latest source row at or before
    it.
    """
    if target_dt <= 0:
        raise ArgumentError(f"target_dt must be positive, got {target_dt}")
    q = log.rows
    t_last = (q - 1) * log.dt
    n_out = int(np.floor(t_last / target_dt + 1e-9)) + 1
    idx = np.floor(np.arange(n_out) * target_dt / log.dt + 1e-9).astype(int)
    idx = np.minimum(idx, q - 1)
    return RawLog(
        U_hist=log.U_hist[idx].copy(),
        Y_hist=log.Y_hist[idx].copy(),
        S_hist=log.S_hist[idx].copy(),
        dt=target_dt,
    )


def write_raw_csv(path, log: RawLog, t0: float = 0.0) -> None:
    """Write a log as CSV with header t,u0..,y0..,l0.. in full precision."""
    m = log.U_hist.shape[1]
    n = log.Y_hist.shape[1]
    w = log.S_hist.shape[1]
    header = (
        ["t"]
        + [f"u{i}" for i in range(m)]
        + [f"y{i}" for i in range(n)]
        + [f"l{i}" for i in range(w)]
    )
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for k in range(log.rows):
            row = [repr(t0 + k * log.dt)]
            row += [repr(float(v)) for v in log.U_hist[k]]
            row += [repr(float(v)) for v in log.Y_hist[k]]
            row += [repr(float(v)) for v in log.S_hist[k]]
            writer.writerow(row)


def read_raw_csv(path) -> RawLog:
    """Read a CSV produced by :func:`write_raw_csv` back into a log."""
    path = Path(path)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path} is empty") from None
        rows = [list(map(float, row)) for row in reader if row]
    if not rows:
        raise DataError(f"{path} has no data rows")
    if header[0] != "t":
        raise DataError(f"{path} has an unexpected header {header[:4]}")
    m = sum(1 for h in header if h.startswith("u"))
    n = sum(1 for h in header if h.startswith("y"))
    w = sum(1 for h in header if h.startswith("l"))
    data = np.asarray(rows, dtype=np.float64)
    if data.shape[1] != 1 + m + n + w:
        raise DataError(f"{path} row width does not match its header")
    dt = float(data[1, 0] - data[0, 0]) if data.shape[0] > 1 else 1.0
    return RawLog(
        U_hist=data[:, 1 : 1 + m],
        Y_hist=data[:, 1 + m : 1 + m + n],
        S_hist=data[:, 1 + m + n :],
        dt=dt,
    )
