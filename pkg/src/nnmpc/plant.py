"""Simulated plants and the PID baseline.

A single mass on a spring and damper, driven by a specific force (N/kg),
integrated with fixed-step classical RK4 under zero-order-hold inputs.
The fixed step keeps every rollout bit-reproducible, which the golden
dataset and determinism checks rely on. Stepping is pure-functional;
independent simulations can run in parallel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .datapipe import RawLog
from .errors import ArgumentError

__all__ = [
    "MsdParams",
    "PlantState",
    "ObservationMap",
    "PidGains",
    "PidState",
    "msd_deriv",
    "integrate",
    "synth_forcing",
    "generate_msd_dataset",
    "pid_step",
]


@dataclass(frozen=True)
class MsdParams:
    """Spring constant (N/m), damping (N*s/m), and mass (kg)."""

    k: float = 40.0
    c: float = 0.5
    m: float = 0.1

    def __post_init__(self):
        if self.k <= 0 or self.c <= 0 or self.m <= 0:
            raise ArgumentError(f"plant parameters must be positive, got {self}")


@dataclass
class PlantState:
    """Position (m), velocity (m/s), and simulation time (s)."""

    x0: float = 0.0
    x1: float = 0.0
    t: float = 0.0


@dataclass(frozen=True)
class ObservationMap:
    """Output-selection matrix mapping the state vector to measured outputs."""

    C: np.ndarray

    def observe(self, state: PlantState) -> np.ndarray:
        return self.C @ np.array([state.x0, state.x1])

    @staticmethod
    def position() -> "ObservationMap":
        """Measure position only (a 1x2 selector)."""
        return ObservationMap(C=np.array([[1.0, 0.0]]))


def msd_deriv(state: PlantState, u: float, p: MsdParams) -> tuple[float, float]:
    """State derivative: dx0 = x1, dx1 = -(k/m) x0 - (c/m) x1 + u."""
    return state.x1, -(p.k / p.m) * state.x0 - (p.c / p.m) * state.x1 + u


def integrate(state: PlantState, u: float, p: MsdParams, dt: float) -> PlantState:
    """One classical RK4 step with the input held constant over dt."""
    if dt <= 0:
        raise ArgumentError(f"dt must be positive, got {dt}")
    a = p.k / p.m
    b = p.c / p.m
    x0, x1 = state.x0, state.x1
    k1_0 = x1
    k1_1 = -a * x0 - b * x1 + u
    k2_0 = x1 + 0.5 * dt * k1_1
    k2_1 = -a * (x0 + 0.5 * dt * k1_0) - b * k2_0 + u
    k3_0 = x1 + 0.5 * dt * k2_1
    k3_1 = -a * (x0 + 0.5 * dt * k2_0) - b * k3_0 + u
    k4_0 = x1 + dt * k3_1
    k4_1 = -a * (x0 + dt * k3_0) - b * k4_0 + u
    return PlantState(
        x0=x0 + dt / 6.0 * (k1_0 + 2.0 * k2_0 + 2.0 * k3_0 + k4_0),
        x1=x1 + dt / 6.0 * (k1_1 + 2.0 * k2_1 + 2.0 * k3_1 + k4_1),
        t=state.t + dt,
    )


def synth_forcing(t: float) -> float:
    """Synthetic excitation 1000 sin(t) cos(t) in N/kg."""
    return 1000.0 * math.sin(t) * math.cos(t)


def generate_msd_dataset(
    p: MsdParams, t_end: float = 2000.0, dt: float = 1e-3, hold_dt: float | None = None
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Roll the plant out under the synthetic forcing.

    Returns (t, u, x0, x1) arrays of length t_end/dt + 1. Row k samples
    the state at t_k before u_k acts; u_k is then held over [t_k, t_k+dt).
    ``hold_dt`` stair-steps the forcing at a coarser period, mimicking an
    excitation applied through the actuation loop it will later share
    with a controller; by default the forcing is re-evaluated every row.
    The inner loop inlines the RK4 update for speed; it matches
    :func:`integrate` step for step.
    """
    if dt <= 0:
        raise ArgumentError(f"dt must be positive, got {dt}")
    if hold_dt is not None and hold_dt < dt:
        raise ArgumentError(f"hold_dt must be >= dt, got {hold_dt}")
    steps = int(round(t_end / dt))
    hold_every = 1 if hold_dt is None else max(1, int(round(hold_dt / dt)))
    a = p.k / p.m
    b = p.c / p.m
    x0 = 0.0
    x1 = 0.0
    ts = np.empty(steps + 1)
    us = np.empty(steps + 1)
    xs0 = np.empty(steps + 1)
    xs1 = np.empty(steps + 1)
    sin = math.sin
    cos = math.cos
    u = 0.0
    for k in range(steps + 1):
        t = k * dt
        if k % hold_every == 0:
            u = 1000.0 * sin(t) * cos(t)
        ts[k] = t
        us[k] = u
        xs0[k] = x0
        xs1[k] = x1
        if k == steps:
            break
        k1_0 = x1
        k1_1 = -a * x0 - b * x1 + u
        k2_0 = x1 + 0.5 * dt * k1_1
        k2_1 = -a * (x0 + 0.5 * dt * k1_0) - b * k2_0 + u
        k3_0 = x1 + 0.5 * dt * k2_1
        k3_1 = -a * (x0 + 0.5 * dt * k2_0) - b * k3_0 + u
        k4_0 = x1 + dt * k3_1
        k4_1 = -a * (x0 + dt * k3_0) - b * k4_0 + u
        x0 = x0 + dt / 6.0 * (k1_0 + 2.0 * k2_0 + 2.0 * k3_0 + k4_0)
        x1 = x1 + dt / 6.0 * (k1_1 + 2.0 * k2_1 + 2.0 * k3_1 + k4_1)
    return ts, us, xs0, xs1


def msd_raw_log(
    p: MsdParams, t_end: float = 2000.0, dt: float = 1e-3, hold_dt: float | None = None
) -> RawLog:
    """Dataset rollout packaged for the data pipeline (position observed)."""
    ts, us, xs0, _ = generate_msd_dataset(p, t_end, dt, hold_dt=hold_dt)
    q = ts.shape[0]
    return RawLog(
        U_hist=us[:, None].copy(),
        Y_hist=xs0[:, None].copy(),
        S_hist=np.zeros((q, 0)),
        dt=dt,
    )


@dataclass(frozen=True)
class PidGains:
    """Parallel-form PID gains with an anti-windup clamp on the error sum."""

    Kp: float = 1.93
    Ki: float = 4.01
    Kd: float = 5.99
    integral_clamp: float = 1e3

    def __post_init__(self):
        if self.Kp < 0 or self.Ki < 0 or self.Kd < 0:
            raise ArgumentError(f"gains must be non-negative, got {self}")


@dataclass
class PidState:
    integral: float = 0.0
    prev_error: float = 0.0


def pid_step(g: PidGains, e: float, dt: float, state: PidState) -> float:
    """One discrete PID update; returns the control output.

    The integral state is the clamped running sum of per-sample errors
    and the derivative is the per-sample first difference of the error,
    so the gains are specified for a given loop rate rather than being
    rate-invariant.
    """
    if dt <= 0:
        raise ArgumentError(f"dt must be positive, got {dt}")
    integral = state.integral + e
    clamp = g.integral_clamp
    integral = min(max(integral, -clamp), clamp)
    derivative = e - state.prev_error
    state.integral = integral
    state.prev_error = e
    return g.Kp * e + g.Ki * integral + g.Kd * derivative
