"""Per-cycle solve time as the prediction horizon grows.

The rollout and stencil work scale linearly with the horizon, so solve
time follows a straight line in N. This script measures it on this
machine and fits the trend (absolute numbers are host-dependent; the
linearity is the point).
"""

import time
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from nnmpc.metrics import linear_trend
from nnmpc.mpc import ControlState, ControllerConfig, newton_step
from nnmpc.nn import LayerSpec, ModelSpec

rng = np.random.default_rng(5)
m = n = 2
n_d = d_d = 2
p = n_d * m + d_d * n
W1 = 0.3 * rng.normal(size=(p, 6))
W2 = 0.3 * rng.normal(size=(6, n))
model = ModelSpec(
    input_dim=p,
    layers=(
        LayerSpec("dense", 6, "tanh", W1, np.zeros(6)),
        LayerSpec("dense", n, "linear", W2, np.zeros(n)),
    ),
)

horizons = list(range(1, 9))
times_ms = []
for N in horizons:
    cfg = ControllerConfig(
        m=m, n=n, Q=np.eye(n), Lambda=np.eye(m), n_d=n_d, d_d=d_d,
        N=N, Nc=min(N, 3), s=1e-20, b=0.0, r=4e2, eps=1e-3,
        max_iters=3, tol=0.0,
    )
    state = ControlState.fresh(cfg)
    state.x_inputs = rng.uniform(-0.3, 0.3, size=p)
    Yref = rng.uniform(-0.3, 0.3, size=(cfg.N2, n))
    newton_step(cfg, state, Yref, model)  # warm the caches
    reps = 50
    t0 = time.perf_counter()
    for _ in range(reps):
        newton_step(cfg, state, Yref, model)
    times_ms.append((time.perf_counter() - t0) / reps * 1e3)
    print(f"N={N}: {times_ms[-1]:.3f} ms per solve")

slope, intercept = linear_trend(horizons, times_ms)
print(f"\nfitted trend: dt(N) = {slope:.4f} N + {intercept:.4f} ms on this host")

fig, ax = plt.subplots(figsize=(5, 4))
ax.plot(horizons, times_ms, "o", label="measured")
ax.plot(horizons, [slope * N + intercept for N in horizons], "--", label="linear fit")
ax.set_xlabel("prediction horizon N")
ax.set_ylabel("solve time [ms]")
ax.legend()
out = Path(__file__).parent / "out"
out.mkdir(exist_ok=True)
fig.savefig(out / "solve_time_vs_horizon.png", dpi=120, bbox_inches="tight")
print(f"wrote {out / 'solve_time_vs_horizon.png'}")
