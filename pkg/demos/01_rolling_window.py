"""The rolling queue that carries the controller's input window.

Every control cycle shifts a block of history out of the window and
writes the newest input, output, and sensor readings in. This script
walks through the mechanics step by step.
"""

import numpy as np

from nnmpc.linalg import roll
from nnmpc.mpc import ControlState, ControllerConfig, build_input_vector

# A bare queue first: shift the whole window right by a block of two.
queue = np.arange(6.0)
print("queue before:", queue)
roll(queue, start=0, end=5, bsize=2)
print("queue after roll (head duplicated, ready for overwrite):", queue)
queue[:2] = [9.0, 8.0]
print("after writing the fresh block:", queue)

# The controller keeps one flat window [inputs | outputs | sensors],
# each region most-recent-first. Watch it evolve over a few cycles.
cfg = ControllerConfig(m=2, n=1, w=3, n_d=2, d_d=2, Q=[1.0], Lambda=[1.0, 1.0])
state = ControlState.fresh(cfg)
print("\nwindow layout: [u(t) u(t-1) | y(t-1) y(t-2) | sensors]")
for cycle in range(3):
    u_t = np.array([cycle + 1.0, -(cycle + 1.0)])
    y_prev = np.array([10.0 * (cycle + 1)])
    sensors = np.full(3, 0.1 * (cycle + 1))
    build_input_vector(state, u_t, y_prev, sensors, cfg)
    print(f"after cycle {cycle}: {state.x_inputs}")

print("\nNote the actuator and output regions shift by one block per cycle")
print("while the sensor tail is simply overwritten with the latest reading.")
