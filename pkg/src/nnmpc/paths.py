"""Reference-path generators for the benchmark tasks.

All periodic paths use a single angular frequency ``omega`` in rad/s, so
every one of them repeats with period 2*pi/omega (the chirped line is the
one exception). The figure-eight family lives in three output dimensions;
the step family is the 1-D benchmark schedule. Pure functions throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ArgumentError

__all__ = ["PathParams", "path_point", "step_sequence", "PERIODIC_KINDS", "PATH_KINDS"]

PERIODIC_KINDS = ("infinity", "pringle", "swirl")
PATH_KINDS = PERIODIC_KINDS + ("line", "step")


@dataclass(frozen=True)
class PathParams:
    """Amplitudes, frequency, neutral offset, and the path family.

    ``levels`` and ``dwell`` only apply to the piecewise-constant step
    schedule; the other families ignore them.
    """

    kind: str
    A: float = 1.0
    B: float = 1.0
    C: float = 1.0
    omega: float = 1.0
    y0: np.ndarray = field(default_factory=lambda: np.zeros(3))
    levels: tuple[float, ...] = ()
    dwell: float = 1.0

    def __post_init__(self):
        if self.kind not in PATH_KINDS:
            raise ArgumentError(f"unknown path kind {self.kind!r}")
        if self.kind in PERIODIC_KINDS and self.omega <= 0:
            raise ArgumentError(f"omega must be positive for {self.kind!r}")
        if self.kind == "step":
            if not self.levels:
                raise ArgumentError("step paths need at least one level")
            if self.dwell <= 0:
                raise ArgumentError(f"dwell must be positive, got {self.dwell}")
        object.__setattr__(self, "y0", np.asarray(self.y0, dtype=np.float64))


def _paraboloid_first(p: PathParams, lateral1: float, lateral2: float) -> float:
    # Hyperbolic-paraboloid height over the centered lateral components.
    return p.A * (lateral2**2 / p.B**2 - lateral1**2 / p.C**2) + p.y0[0]


def path_point(p: PathParams, t: float) -> np.ndarray:
    """Evaluate the reference path at time t (seconds)."""
    if p.kind == "step":
        idx = min(int(t // p.dwell), len(p.levels) - 1)
        return p.y0 + p.levels[idx]
    wt = p.omega * t
    if p.kind == "infinity":
        s, c = math.sin(wt), math.cos(wt)
        return np.array(
            [p.A * s * s + p.y0[0], p.B * s * c + p.y0[1], p.C * s + p.y0[2]]
        )
    if p.kind in ("pringle", "swirl"):
        lat1 = p.B * math.cos(wt)
        lat2 = p.C * math.sin(wt)
        return np.array(
            [_paraboloid_first(p, lat1, lat2), lat1 + p.y0[1], lat2 + p.y0[2]]
        )
    if p.kind == "line":
        phase = wt + 1e-6 * t * t
        lat1 = p.B * math.sin(phase)
        lat2 = p.C * math.sin(phase)
        return np.array(
            [_paraboloid_first(p, lat1, lat2), lat1 + p.y0[1], lat2 + p.y0[2]]
        )
    raise ArgumentError(f"unknown path kind {p.kind!r}")


def step_sequence(levels, dwell: float, y0=None) -> PathParams:
    """Piecewise-constant reference holding each level for ``dwell`` seconds.

    Dwell intervals are half-open [t_i, t_i+dwell); the final level holds
    forever.
    """
    levels = tuple(float(v) for v in levels)
    if not levels:
        raise ArgumentError("need at least one level")
    if y0 is None:
        y0 = np.zeros(1)
    return PathParams(kind="step", y0=np.asarray(y0, dtype=np.float64), levels=levels, dwell=float(dwell))
