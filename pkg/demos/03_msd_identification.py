"""Forward-kinematics learning on the mass-spring-damper plant.

Generates the excitation dataset, trains the one-step forward model
through the full pipeline (resample to the control rate, normalize,
window, expanding-window splits), and plots held-out predictions
against ground truth.
"""

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from nnmpc import bench
from nnmpc.datapipe import RawLog, downsample, fit_normalizer, window_dataset
from nnmpc.nn import forward_batch
from nnmpc.plant import MsdParams, msd_raw_log

config = bench.msd_benchmark_config()
config["gen"]["t_end"] = 400.0  # plenty for a demo

print("generating excitation rollout ...")
log = msd_raw_log(
    MsdParams(**config["plant"]),
    t_end=config["gen"]["t_end"],
    dt=config["gen"]["dt"],
    hold_dt=config["gen"]["hold_dt"],
)

print("training through the benchmark pipeline ...")
result = bench.train_msd_model(log, config, seed=0)
for i, (train_mse, test_mse) in enumerate(result.fold_mses):
    print(f"  split {i}: train mse {train_mse:.2e}  test mse {test_mse:.2e}")

# Rebuild the held-out slice of the final split for plotting.
work = downsample(log, round(config["sim"]["control_dt"] / log.dt))
u_norm = fit_normalizer(work.U_hist)
y_norm = fit_normalizer(work.Y_hist)
normalized = RawLog(
    U_hist=u_norm.apply(work.U_hist),
    Y_hist=y_norm.apply(work.Y_hist),
    S_hist=work.S_hist,
    dt=work.dt,
)
X, Y = window_dataset(normalized, 2, 2)
tail = slice(int(X.shape[0] * 10 / 11), X.shape[0])
pred_delta = forward_batch(result.model, X[tail])
pred = X[tail, 2:3] + pred_delta  # transition added to the newest output
truth = Y[tail]

t = np.arange(truth.shape[0]) * work.dt
fig, axes = plt.subplots(2, 1, figsize=(7, 5), sharex=True)
axes[0].plot(t, y_norm.invert(truth)[:, 0], label="true position")
axes[0].plot(t, y_norm.invert(pred)[:, 0], "--", label="one-step prediction")
axes[0].set_ylabel("position [m]")
axes[0].legend()
axes[1].plot(t, (y_norm.invert(pred) - y_norm.invert(truth))[:, 0])
axes[1].set_ylabel("error [m]")
axes[1].set_xlabel("time in held-out split [s]")
fig.suptitle("Held-out one-step forward-kinematics predictions")
out = Path(__file__).parent / "out"
out.mkdir(exist_ok=True)
fig.savefig(out / "msd_identification.png", dpi=120, bbox_inches="tight")
print(f"wrote {out / 'msd_identification.png'}")
