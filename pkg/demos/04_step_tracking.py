"""Predictive controller against the PID baseline on the step schedule.

Runs both closed loops on the same 0.5 / 1 / 2 m reference schedule and
plots tracking plus the error on a log scale. The predictive controller
uses a learned one-step forward model and a Newton solver; the PID runs
at its own loop rate with its nominal gains.
"""

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from nnmpc import bench, metrics
from nnmpc.plant import MsdParams, msd_raw_log

config = bench.msd_benchmark_config()

print("building the forward model ...")
log = msd_raw_log(
    MsdParams(**config["plant"]),
    t_end=config["gen"]["t_end"],
    dt=config["gen"]["dt"],
    hold_dt=config["gen"]["hold_dt"],
)
model = bench.train_msd_model(log, config, seed=0).model

print("running closed loops ...")
runs = {
    "mpc": bench.run_msd(config, controller="mpc", model=model),
    "pid": bench.run_msd(config, controller="pid"),
}

for name, sim in runs.items():
    print(f"\n{name} step metrics:")
    for s in metrics.step_metrics(sim.t, sim.y, config["path"]["levels"], config["path"]["dwell"]):
        rise = "never" if s.rise_time_s is None else f"{s.rise_time_s:.3f}s"
        print(
            f"  target {s.target} m: rise {rise}, overshoot {s.overshoot_pct:.2f}%, "
            f"steady-state error {s.ss_error * 1000:.3f} mm"
        )

fig, axes = plt.subplots(2, 1, figsize=(8, 6), sharex=True)
mpc, pid = runs["mpc"], runs["pid"]
axes[0].plot(mpc.t / mpc.t[-1] * 100, mpc.yref, "k--", label="reference")
axes[0].plot(mpc.t / mpc.t[-1] * 100, mpc.y, label="predictive")
axes[0].plot(pid.t / pid.t[-1] * 100, pid.y, label="pid")
axes[0].set_ylabel("position [m]")
axes[0].legend()
axes[1].semilogy(mpc.t / mpc.t[-1] * 100, np.abs(mpc.y - mpc.yref) + 1e-12, label="predictive")
axes[1].semilogy(pid.t / pid.t[-1] * 100, np.abs(pid.y - pid.yref) + 1e-12, label="pid")
axes[1].set_ylabel("|error| [m]")
axes[1].set_xlabel("task completion [%]")
axes[1].legend()
out = Path(__file__).parent / "out"
out.mkdir(exist_ok=True)
fig.savefig(out / "step_tracking.png", dpi=120, bbox_inches="tight")
print(f"\nwrote {out / 'step_tracking.png'}")
