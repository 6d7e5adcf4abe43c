"""Finite-difference network derivatives and their convergence order.

The controller differentiates its forward model with a central stencil:
one batched evaluation per control cycle yields both the gradient and
the diagonal curvature. Here we compare the stencil against the exact
chain-rule jacobian of a small smooth network and show the O(eps^2)
error decay.
"""

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from nnmpc.nn import LayerSpec, ModelSpec, grad_fd, hess_diag_fd

rng = np.random.default_rng(0)
p, hidden, n = 6, 8, 2
W1 = rng.normal(size=(p, hidden)) * 0.6
W2 = rng.normal(size=(hidden, n)) * 0.6
model = ModelSpec(
    input_dim=p,
    layers=(
        LayerSpec("dense", hidden, "tanh", W1, rng.normal(size=hidden) * 0.1),
        LayerSpec("dense", n, "linear", W2, np.zeros(n)),
    ),
)
x = rng.uniform(-0.4, 0.4, size=p)

# Exact jacobian by the chain rule.
z = x @ W1 + model.layers[0].bias
a = np.tanh(z)
exact = (W1 * (1 - a * a)[None, :]) @ W2

eps_grid = np.logspace(-6, -1, 24)
errors = [np.max(np.abs(grad_fd(model, x, eps, rows=p) - exact)) for eps in eps_grid]

print("stencil step  max abs gradient error")
for eps, err in zip(eps_grid[::6], errors[::6]):
    print(f"  {eps:8.1e}   {err:.3e}")

chi = hess_diag_fd(model, x, 1e-3, rows=p)
print(f"\ndiagonal curvature at the same point, first row: {chi[0]}")

fig, ax = plt.subplots(figsize=(5, 4))
ax.loglog(eps_grid, errors, "o-", label="measured")
ax.loglog(eps_grid, errors[-1] * (eps_grid / eps_grid[-1]) ** 2, "--", label="slope 2")
ax.set_xlabel("stencil step")
ax.set_ylabel("max abs gradient error")
ax.legend()
ax.set_title("Central differences converge at second order")
out = Path(__file__).parent / "out"
out.mkdir(exist_ok=True)
fig.savefig(out / "derivative_convergence.png", dpi=120, bbox_inches="tight")
print(f"\nwrote {out / 'derivative_convergence.png'}")
