"""Closed-loop benchmark harness: dataset, training pipeline, simulations.

Ties the plant, data pipeline, trainer, and controller together for the
mass-spring-damper benchmark and for reference tracking against a plant
that is itself a network. The controller always works in normalized
units; this module owns the conversions at the plant boundary.

Everything is driven by one nested config dict (see
:func:`msd_benchmark_config`) so runs are reproducible from a single
file plus a seed.
"""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import metrics
from .datapipe import (
    Normalizer,
    RawLog,
    downsample,
    fit_normalizer,
    resample_prior,
    timeseries_splits,
    window_dataset,
)
from .errors import ArgumentError, DataError
from .mpc import ControlState, ControllerConfig, build_input_vector, control_step
from .nn import ModelSpec, Normalization, forward, param_count
from .paths import PathParams, path_point, step_sequence
from .plant import MsdParams, ObservationMap, PidGains, PidState, PlantState, integrate, pid_step
from .trainer import TrainConfig, TrainResult, train_mlp

__all__ = [
    "msd_benchmark_config",
    "merge_config",
    "load_config",
    "controller_from_config",
    "train_msd_model",
    "stream_normalizers",
    "SimLog",
    "run_msd",
    "run_tracking_selfplant",
    "write_run_csv",
    "build_report",
    "write_report",
]


def msd_benchmark_config() -> dict:
    """Default tunings for the mass-spring-damper benchmark."""
    return {
        "plant": {"k": 40.0, "c": 0.5, "m": 0.1},
        # Excitation is stair-stepped at the control period (hold_dt): the
        # applied inputs must go through the same zero-order-hold channel
        # the controller will use, or the identified one-step map will not
        # be the map the control loop runs against.
        "gen": {"t_end": 2000.0, "dt": 1e-3, "hold_dt": 0.158},
        # The benchmark plant is linear, and its single-tone excitation
        # cannot pin the off-manifold behavior of a wider network, so the
        # forward model is a single dense layer trained on one-step output
        # transitions by damped Gauss-Newton (see the trainer module).
        "train": {
            "downsample": "auto",
            "folds": 10,
            "epochs": 30,
            "batch_size": 256,
            "lr": 1e-3,
            "seed": 0,
            "hidden": [],
            "out_activation": "linear",
            "optimizer": "lm",
        },
        "controller": {
            "m": 1,
            "n": 1,
            "w": 0,
            "n_d": 2,
            "d_d": 2,
            "N": 1,
            "N1": 1,
            "N2": 1,
            "Nc": 1,
            "Q": [1.0],
            "Lambda": [1.0],
            "s": 1e-20,
            "b": 1e-5,
            "r": 4e2,
            "eps": 1e-3,
            "max_iters": 3,
            "tol": 1e-4,
            "u_neutral": [0.0],
        },
        # The PID runs at its own loop rate: its discrete gains are
        # rate-sensitive, and the benchmark pins its nominal step
        # response, while the predictive controller works best with a
        # control period near half the plant's damped period.
        "pid": {
            "Kp": 1.93,
            "Ki": 4.01,
            "Kd": 5.99,
            "integral_clamp": 1e3,
            "control_dt": 0.0044,
        },
        "path": {"kind": "step", "levels": [0.5, 1.0, 2.0], "dwell": 20.0},
        "sim": {"control_dt": 0.158, "plant_dt": 1e-3},
    }


def merge_config(base: dict, override: dict | None) -> dict:
    """Deep-merge ``override`` into a copy of ``base``."""
    out = copy.deepcopy(base)
    for key, value in (override or {}).items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = merge_config(out[key], value)
        else:
            out[key] = copy.deepcopy(value)
    return out


def load_config(path=None) -> dict:
    """Benchmark defaults, optionally overridden by a JSON config file."""
    cfg = msd_benchmark_config()
    if path is None:
        return cfg
    doc = json.loads(Path(path).read_text())
    if not isinstance(doc, dict):
        raise DataError(f"config file {path} must hold a JSON object")
    return merge_config(cfg, doc)


def controller_from_config(config: dict) -> ControllerConfig:
    return ControllerConfig.from_dict(config["controller"])


def make_path(config: dict) -> PathParams:
    section = dict(config["path"])
    kind = section.pop("kind")
    if kind == "step":
        return step_sequence(
            section.get("levels", (0.0,)),
            section.get("dwell", 1.0),
            y0=section.get("y0"),
        )
    return PathParams(
        kind=kind,
        A=section.get("A", 1.0),
        B=section.get("B", 1.0),
        C=section.get("C", 1.0),
        omega=section.get("omega", 1.0),
        y0=np.asarray(section.get("y0", np.zeros(3)), dtype=np.float64),
    )


def _resample_to_control_rate(log: RawLog, config: dict) -> RawLog:
    """Bring the capture down to the controller's rate.

    ``train.downsample`` may be an explicit integer factor or "auto", in
    which case the target is ``sim.control_dt``; integer ratios use plain
    decimation, anything else nearest-prior-timestamp selection.
    """
    requested = config["train"].get("downsample", "auto")
    if requested != "auto":
        return downsample(log, int(requested))
    target_dt = float(config["sim"]["control_dt"])
    ratio = target_dt / log.dt
    if abs(ratio - round(ratio)) < 1e-9:
        return downsample(log, int(round(ratio)))
    return resample_prior(log, target_dt)


def train_msd_model(log: RawLog, config: dict, seed: int | None = None) -> TrainResult:
    """Full training pipeline: resample, normalize, window, split, fit.

    Returns the trainer result with the fitted normalization bounds
    attached to the model, so the emitted document is self-contained.
    """
    section = config["train"]
    ctrl = config["controller"]
    work = _resample_to_control_rate(log, config)
    u_norm = fit_normalizer(work.U_hist)
    y_norm = fit_normalizer(work.Y_hist)
    s_norm = fit_normalizer(work.S_hist) if work.S_hist.shape[1] else None
    normalized = RawLog(
        U_hist=u_norm.apply(work.U_hist),
        Y_hist=y_norm.apply(work.Y_hist),
        S_hist=s_norm.apply(work.S_hist) if s_norm else work.S_hist,
        dt=work.dt,
    )
    n_d, d_d = int(ctrl["n_d"]), int(ctrl["d_d"])
    X, Y = window_dataset(normalized, n_d, d_d)
    # Train on the one-step output transition: the absolute next output is
    # nearly collinear with the lag features on smooth excitation, which
    # buries the input sensitivity the controller depends on. The change
    # since the newest output-history entry keeps it first order. Per-row
    # prediction error is identical either way, so fold MSEs still measure
    # one-step forward-kinematics accuracy.
    n = int(ctrl["n"])
    m = int(ctrl["m"])
    targets = Y - X[:, n_d * m : n_d * m + n]
    splits = timeseries_splits(X.shape[0], folds=int(section["folds"]))
    tc = TrainConfig(
        hidden=tuple((int(u), str(a)) for u, a in section["hidden"]),
        out_activation=str(section["out_activation"]),
        epochs=int(section["epochs"]),
        batch_size=int(section["batch_size"]),
        lr=float(section["lr"]),
        seed=int(section["seed"] if seed is None else seed),
        optimizer=str(section.get("optimizer", "sgd")),
    )
    result = train_mlp(X, targets, tc, splits=splits)
    norm = Normalization(
        input_min=np.concatenate(
            [np.tile(u_norm.col_min, n_d), np.tile(y_norm.col_min, d_d)]
            + ([s_norm.col_min] if s_norm else [])
        ),
        input_max=np.concatenate(
            [np.tile(u_norm.col_max, n_d), np.tile(y_norm.col_max, d_d)]
            + ([s_norm.col_max] if s_norm else [])
        ),
        output_min=y_norm.col_min.copy(),
        output_max=y_norm.col_max.copy(),
    )
    model = ModelSpec(
        input_dim=result.model.input_dim,
        layers=result.model.layers,
        normalization=norm,
        output_mode="delta",
    )
    return TrainResult(model=model, loss_history=result.loss_history, fold_mses=result.fold_mses)


def stream_normalizers(model: ModelSpec, cfg: ControllerConfig) -> tuple[Normalizer, Normalizer]:
    """Actuator and output normalizers recovered from a model document.

    The input bounds repeat each stream's per-column bounds across its
    history blocks, so the first actuator block carries the actuator
    stream bounds.
    """
    norm = model.normalization
    if norm is None:
        raise DataError("model document carries no normalization block")
    u_norm = Normalizer(col_min=norm.input_min[: cfg.m], col_max=norm.input_max[: cfg.m])
    y_norm = Normalizer(col_min=norm.output_min, col_max=norm.output_max)
    return u_norm, y_norm


@dataclass
class SimLog:
    """Per-step closed-loop log in raw plant units."""

    t: np.ndarray
    yref: np.ndarray
    y: np.ndarray
    u: np.ndarray
    J: np.ndarray
    iters: np.ndarray
    controller: str
    control_dt: float


def run_msd(
    config: dict, controller: str = "mpc", model: ModelSpec | None = None
) -> SimLog:
    """Closed-loop step tracking on the mass-spring-damper plant.

    The measured position is fed back into the controller's output
    history each cycle; the plant integrates with fixed RK4 substeps
    under a zero-order-hold input.
    """
    if controller not in ("mpc", "pid"):
        raise ArgumentError(f"unknown controller {controller!r}")
    params = MsdParams(**config["plant"])
    path = make_path(config)
    obs = ObservationMap.position()
    sim = config["sim"]
    if controller == "pid":
        dt_c = float(config["pid"].get("control_dt", sim["control_dt"]))
    else:
        dt_c = float(sim["control_dt"])
    substeps = max(1, int(round(dt_c / float(sim["plant_dt"]))))
    dt_p = dt_c / substeps
    duration = len(path.levels) * path.dwell if path.kind == "step" else float(
        sim.get("duration", 10.0)
    )
    steps = int(round(duration / dt_c))

    if controller == "mpc":
        if model is None:
            raise ArgumentError("mpc runs need a trained model")
        cfg = controller_from_config(config)
        u_norm, y_norm = stream_normalizers(model, cfg)
        state = ControlState.fresh(cfg)
    else:
        gain_keys = {k: v for k, v in config["pid"].items() if k != "control_dt"}
        gains = PidGains(**gain_keys)
        pid_state = PidState()

    plant = PlantState()
    t_log = np.empty(steps)
    yref_log = np.empty(steps)
    y_log = np.empty(steps)
    u_log = np.empty(steps)
    J_log = np.zeros(steps)
    iters_log = np.zeros(steps, dtype=int)

    for k in range(steps):
        t_now = k * dt_c
        y_meas = float(obs.observe(plant)[0])
        yref_now = float(path_point(path, t_now)[0])
        if controller == "mpc":
            window = np.array(
                [path_point(path, (k + 1 + j) * dt_c) for j in range(cfg.N2)]
            )
            u_n = control_step(
                model,
                state,
                cfg,
                y_norm.apply(window),
                l_t=(),
                y_feedback=y_norm.apply(np.array([y_meas])),
            )
            u_raw = float(u_norm.invert(u_n)[0])
            J_log[k] = state.last_cost
            iters_log[k] = state.last_iters
        else:
            u_raw = pid_step(gains, yref_now - y_meas, dt_c, pid_state)
        t_log[k] = t_now
        yref_log[k] = yref_now
        y_log[k] = y_meas
        u_log[k] = u_raw
        for _ in range(substeps):
            plant = integrate(plant, u_raw, params, dt_p)

    return SimLog(
        t=t_log,
        yref=yref_log,
        y=y_log,
        u=u_log,
        J=J_log,
        iters=iters_log,
        controller=controller,
        control_dt=dt_c,
    )


def run_tracking_selfplant(
    model: ModelSpec, cfg: ControllerConfig, path: PathParams, steps: int, dt: float
) -> SimLog:
    """Track a reference with a plant that is the network itself.

    The plant holds its own true input/output history window and advances
    by one forward call per cycle; the controller sees the measured (true)
    outputs. Everything runs in the network's normalized units.
    """
    state = ControlState.fresh(cfg)
    plant_state = ControlState.fresh(cfg)
    y_true = np.zeros(cfg.n)
    sensors = np.zeros(cfg.w)
    t_log = np.empty(steps)
    yref_log = np.empty((steps, cfg.n))
    y_log = np.empty((steps, cfg.n))
    u_log = np.empty((steps, cfg.m))
    J_log = np.zeros(steps)
    iters_log = np.zeros(steps, dtype=int)
    for k in range(steps):
        t_log[k] = k * dt
        yref_log[k] = path_point(path, k * dt)
        y_log[k] = y_true
        window = np.array([path_point(path, (k + 1 + j) * dt) for j in range(cfg.N2)])
        u = control_step(model, state, cfg, window, l_t=sensors, y_feedback=y_true)
        build_input_vector(plant_state, u, y_true, sensors, cfg)
        y_true = forward(model, plant_state.x_inputs)
        u_log[k] = u
        J_log[k] = state.last_cost
        iters_log[k] = state.last_iters
    return SimLog(
        t=t_log,
        yref=yref_log,
        y=y_log,
        u=u_log,
        J=J_log,
        iters=iters_log,
        controller="mpc",
        control_dt=dt,
    )


def write_run_csv(path, log: SimLog) -> None:
    """Deterministic per-step CSV: t, reference, output, input, cost, iters."""
    yref = np.atleast_2d(log.yref.T).T
    y = np.atleast_2d(log.y.T).T
    u = np.atleast_2d(log.u.T).T
    n = yref.shape[1]
    m = u.shape[1]
    header = (
        ["t"]
        + [f"yref{i}" for i in range(n)]
        + [f"y{i}" for i in range(n)]
        + [f"u{i}" for i in range(m)]
        + ["J", "iters"]
    )
    lines = [",".join(header)]
    for k in range(log.t.shape[0]):
        cells = [repr(float(log.t[k]))]
        cells += [repr(float(v)) for v in yref[k]]
        cells += [repr(float(v)) for v in y[k]]
        cells += [repr(float(v)) for v in u[k]]
        cells.append(repr(float(log.J[k])))
        cells.append(str(int(log.iters[k])))
        lines.append(",".join(cells))
    Path(path).write_text("\n".join(lines) + "\n")


def build_report(log: SimLog, config: dict, model: ModelSpec | None, seed: int | None) -> dict:
    """Summary metrics for a run, deterministic for a given config and seed."""
    path = config["path"]
    report: dict = {
        "controller": log.controller,
        "task": path["kind"],
        "seed": seed,
        "control_dt": log.control_dt,
        "duration_s": float(log.t[-1] + log.control_dt) if log.t.size else 0.0,
        "rmse": metrics.rmse(log.y, log.yref),
        "max_abs_error": metrics.max_abs_error(log.y, log.yref),
        "mean_iters": float(np.mean(log.iters)) if log.controller == "mpc" else 0.0,
    }
    if path["kind"] == "step":
        series = log.y if log.y.ndim == 1 else log.y[:, 0]
        report["steps"] = [
            {
                "target": s.target,
                "amplitude": s.amplitude,
                "rise_time_s": s.rise_time_s,
                "overshoot_pct": s.overshoot_pct,
                "ss_error": s.ss_error,
                "ss_error_pct_of_level": s.ss_error_pct_of_level,
            }
            for s in metrics.step_metrics(log.t, series, path["levels"], path["dwell"])
        ]
    if model is not None:
        n_params = param_count(model)
        raw = metrics.energy_estimate(n_params, report["duration_s"])
        report["model_params"] = n_params
        report["energy_uAh"] = max(0.0, raw)
        report["energy_uAh_raw"] = raw
    return report


def write_report(path, report: dict) -> None:
    Path(path).write_text(json.dumps(report, sort_keys=True, indent=2) + "\n")
