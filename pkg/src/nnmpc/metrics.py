"""Tracking metrics and the controller energy model.

Step metrics follow fixed definitions so reports are comparable across
controllers: rise time is the first crossing of 90% of the step amplitude
measured from the step onset, overshoot is the peak excursion past the
target as a percentage of the amplitude, and steady-state error averages
the final 10% of the dwell.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ArgumentError

__all__ = [
    "StepMetrics",
    "step_metrics",
    "segment_bounds",
    "rise_time",
    "overshoot",
    "steady_state_error",
    "rmse",
    "max_abs_error",
    "energy_estimate",
    "linear_trend",
]


def rise_time(t: np.ndarray, y: np.ndarray, base: float, target: float) -> float | None:
    """Time from segment start to the first crossing of base + 0.9*(target-base).

    Returns None when the response never reaches the threshold.
    """
    amp = target - base
    if amp == 0.0:
        return 0.0
    thresh = base + 0.9 * amp
    crossed = (y >= thresh) if amp > 0 else (y <= thresh)
    idx = np.flatnonzero(crossed)
    if idx.size == 0:
        return None
    return float(t[idx[0]] - t[0])


def overshoot(y: np.ndarray, base: float, target: float) -> float:
    """Peak excursion beyond the target, as % of the step amplitude."""
    amp = target - base
    if amp == 0.0:
        return 0.0
    peak = float(np.max(y)) if amp > 0 else float(np.min(y))
    return max(0.0, (peak - target) / amp * 100.0) if amp > 0 else max(
        0.0, (target - peak) / (-amp) * 100.0
    )


def steady_state_error(y: np.ndarray, target: float, tail_frac: float = 0.1) -> float:
    """Absolute error of the mean over the final ``tail_frac`` of the dwell."""
    tail = max(1, int(round(tail_frac * y.shape[0])))
    return float(abs(np.mean(y[-tail:]) - target))


def rmse(y: np.ndarray, yref: np.ndarray) -> float:
    d = np.asarray(y, dtype=np.float64) - np.asarray(yref, dtype=np.float64)
    return float(np.sqrt(np.mean(d * d)))


def max_abs_error(y: np.ndarray, yref: np.ndarray) -> float:
    d = np.asarray(y, dtype=np.float64) - np.asarray(yref, dtype=np.float64)
    return float(np.max(np.abs(d)))


@dataclass(frozen=True)
class StepMetrics:
    target: float
    base: float
    amplitude: float
    rise_time_s: float | None
    overshoot_pct: float
    ss_error: float
    ss_error_pct_of_level: float


def segment_bounds(t: np.ndarray, levels, dwell: float) -> list[tuple[int, int]]:
    """Index ranges of each dwell segment of a step schedule."""
    bounds = []
    for i in range(len(levels)):
        start = i * dwell
        stop = (i + 1) * dwell if i + 1 < len(levels) else float(t[-1]) + 1.0
        idx = np.flatnonzero((t >= start - 1e-12) & (t < stop - 1e-12))
        if idx.size:
            bounds.append((int(idx[0]), int(idx[-1]) + 1))
    return bounds


def step_metrics(t: np.ndarray, y: np.ndarray, levels, dwell: float) -> list[StepMetrics]:
    """Per-step tracking metrics over a piecewise-constant schedule."""
    out = []
    prev_level = 0.0
    for (i0, i1), level in zip(segment_bounds(t, levels, dwell), levels):
        seg_t = t[i0:i1]
        seg_y = y[i0:i1]
        amp = level - prev_level
        out.append(
            StepMetrics(
                target=float(level),
                base=float(prev_level),
                amplitude=float(amp),
                rise_time_s=rise_time(seg_t, seg_y, prev_level, level),
                overshoot_pct=overshoot(seg_y, prev_level, level),
                ss_error=steady_state_error(seg_y, level),
                ss_error_pct_of_level=(
                    steady_state_error(seg_y, level) / abs(level) * 100.0
                    if level != 0.0
                    else float("nan")
                ),
            )
        )
        prev_level = level
    return out


def energy_estimate(n_size: int, t: float) -> float:
    """Energy model in microamp-hours for a controller of ``n_size`` parameters.

    E = (0.0008 * n_size + 1.3) * t - 17.104. The affine fit extrapolates
    below zero for very short runs; display-side clamping is up to the
    caller.
    """
    if t < 0:
        raise ArgumentError(f"t must be non-negative, got {t}")
    return (0.0008 * n_size + 1.3) * t - 17.104


def linear_trend(x, y) -> tuple[float, float]:
    """Least-squares slope and intercept of y against x."""
    slope, intercept = np.polyfit(np.asarray(x, float), np.asarray(y, float), 1)
    return float(slope), float(intercept)
