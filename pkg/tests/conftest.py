"""Shared builders and independent oracles for the test suite."""

from __future__ import annotations

import numpy as np
import pytest

from nnmpc.nn import LayerSpec, ModelSpec


def dense_model(weight_bias_pairs, activations, normalization=None) -> ModelSpec:
    """Build a dense ModelSpec from explicit (weights, bias) pairs."""
    layers = []
    for (w, b), act in zip(weight_bias_pairs, activations):
        w = np.asarray(w, dtype=np.float64)
        b = np.asarray(b, dtype=np.float64)
        layers.append(LayerSpec("dense", w.shape[1], act, w, b))
    return ModelSpec(
        input_dim=np.asarray(weight_bias_pairs[0][0]).shape[0],
        layers=tuple(layers),
        normalization=normalization,
    )


def random_mlp(rng, p, n, hidden=(5,), activations=None, out_activation="tanh", scale=1.0):
    """Random small MLP with Xavier-ish weights."""
    sizes = [p] + list(hidden) + [n]
    if activations is None:
        activations = ["tanh"] * len(hidden)
    acts = list(activations) + [out_activation]
    pairs = []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        limit = scale * np.sqrt(6.0 / (fan_in + fan_out))
        w = rng.uniform(-limit, limit, size=(fan_in, fan_out))
        b = rng.uniform(-0.1, 0.1, size=fan_out)
        pairs.append((w, b))
    return dense_model(pairs, acts)


def linear_model(W, b=None) -> ModelSpec:
    """Single linear dense layer y = x W + b."""
    W = np.asarray(W, dtype=np.float64)
    if b is None:
        b = np.zeros(W.shape[1])
    return dense_model([(W, b)], ["linear"])


def analytic_input_jacobian(model: ModelSpec, x: np.ndarray) -> np.ndarray:
    """Exact d(output)/d(input) for dense models, straight-line chain rule.

    Returns a (p, n) matrix to match the finite-difference layout (row =
    input coordinate).
    """
    a = np.asarray(x, dtype=np.float64)
    J = np.eye(model.input_dim)
    for layer in model.layers:
        assert layer.kind == "dense"
        z = a @ layer.weights + layer.bias
        if layer.activation == "relu":
            act = np.maximum(z, 0.0)
            grad = (z > 0.0).astype(float)
        elif layer.activation == "tanh":
            act = np.tanh(z)
            grad = 1.0 - act * act
        elif layer.activation == "sigmoid":
            act = 1.0 / (1.0 + np.exp(-z))
            grad = act * (1.0 - act)
        else:
            act = z
            grad = np.ones_like(z)
        J = J @ layer.weights * grad[None, :]
        a = act
    return J


def deque_roll_oracle(queue, start, end, bsize):
    """Reference semantics for the in-place window roll, via list slicing."""
    window = list(queue[start : end + 1])
    if bsize:
        window = window[:bsize] + window[: len(window) - bsize]
    out = list(queue)
    out[start : end + 1] = window
    return np.asarray(out, dtype=np.asarray(queue).dtype)


# ------------------------------------------------------------------
# Controller-cost oracles: independent restatements of the cost, the
# plan-response model, and the anchored gradient, built from plain loops
# so the analytic derivative assembly is checked against a separate path.


def random_psd(rng, dim):
    a = rng.normal(size=(dim, dim))
    return a @ a.T + 0.5 * np.eye(dim)


def make_cfg(m=1, n=1, **overrides):
    from nnmpc.mpc import ControllerConfig

    kwargs = dict(
        m=m,
        n=n,
        Q=np.eye(n),
        Lambda=np.eye(m),
        w=0,
        n_d=2,
        d_d=2,
        N=1,
        N1=1,
        N2=None,
        Nc=1,
        s=1e-20,
        b=1e-5,
        r=4e2,
        eps=1e-3,
        max_iters=3,
        tol=1e-4,
    )
    kwargs.update(overrides)
    return ControllerConfig(**kwargs)


def tau_only_linear_model(cfg, gain):
    """Linear model reading only the newest actuator block: y = u @ gain."""
    W = np.zeros((cfg.p, cfg.n))
    W[: cfg.m, :] = np.asarray(gain, dtype=np.float64)
    return linear_model(W)


def random_instance(rng, m=2, n=2, Nc=2, N=3, n_d=2, d_d=1, w=0, **cfg_overrides):
    from nnmpc.mpc import ControlState

    cfg = make_cfg(
        m=m,
        n=n,
        Nc=Nc,
        N=N,
        n_d=n_d,
        d_d=d_d,
        w=w,
        Q=random_psd(rng, n),
        Lambda=random_psd(rng, m),
        s=1e-3,
        b=0.0,
        r=4.0,
        **cfg_overrides,
    )
    model = random_mlp(rng, p=cfg.p, n=n, hidden=(5,), activations=["tanh"])
    state = ControlState.fresh(cfg)
    state.x_inputs = rng.uniform(-0.4, 0.4, size=cfg.p)
    state.U = rng.uniform(-0.3, 0.3, size=(Nc, m))
    state.last_applied = rng.uniform(-0.3, 0.3, size=m)
    Yref = rng.uniform(-0.4, 0.4, size=(cfg.N2, n))
    return cfg, model, state, Yref


def anchor_of(model, state, cfg):
    from nnmpc.mpc import network_sensitivities, predict_horizon

    hp = predict_horizon(model, state, cfg)
    D, X2 = network_sensitivities(model, hp.last_input, cfg)
    return hp, (hp.Yhat, state.U.copy(), D, X2)


def cost_direct(Yhat, Yref, U, u_prev, cfg):
    """Direct summation of the cost, independent loops."""
    total = 0.0
    for k in range(cfg.N1 - 1, cfg.N2):
        e = Yref[k] - Yhat[k]
        total += float(e @ cfg.Q @ e)
    prev = u_prev
    for j in range(cfg.Nc):
        du = U[j] - prev
        total += float(du @ cfg.Lambda @ du)
        prev = U[j]
    lo = cfg.b - cfg.r / 2.0
    hi = cfg.b + cfg.r / 2.0
    for u in np.asarray(U).ravel():
        total += cfg.s / (u - lo) + cfg.s / (hi - u) - 4.0 / cfg.r
    return total


def modeled_rollout(Yhat0, D, X2, U, U0, cfg):
    """Inline restatement of the plan-response model."""
    out = np.asarray(Yhat0, dtype=float).copy()
    for k in range(out.shape[0]):
        h = min(k, cfg.Nc - 1)
        d = U[h] - U0[h]
        out[k] = Yhat0[k] + D @ d + 0.5 * (X2 @ (d * d))
    return out


def local_cost(U, anchor, Yref, u_prev, cfg):
    Yhat0, U0, D, X2 = anchor
    return cost_direct(modeled_rollout(Yhat0, D, X2, U, U0, cfg), Yref, U, u_prev, cfg)


def local_jacobian(U, anchor, Yref, u_prev, cfg):
    """Exact gradient of the anchored local cost, independent loops."""
    Yhat0, U0, D, X2 = anchor
    modeled = modeled_rollout(Yhat0, D, X2, U, U0, cfg)
    G = np.zeros((cfg.Nc, cfg.m))
    for k in range(cfg.N1 - 1, cfg.N2):
        h = min(k, cfg.Nc - 1)
        e = Yref[k] - modeled[k]
        d = U[h] - U0[h]
        for i in range(cfg.m):
            slope = D[:, i] + X2[:, i] * d[i]
            G[h, i] += -2.0 * float(e @ cfg.Q @ slope)
    prev = u_prev
    deltas = []
    for j in range(cfg.Nc):
        deltas.append(U[j] - prev)
        prev = U[j]
    for h in range(cfg.Nc):
        for j in range(cfg.Nc):
            coef = (1.0 if h == j else 0.0) - (1.0 if h == j - 1 else 0.0)
            if coef:
                G[h] += coef * 2.0 * (deltas[j] @ cfg.Lambda)
    lo = cfg.b - cfg.r / 2.0
    hi = cfg.b + cfg.r / 2.0
    G += -cfg.s / (U - lo) ** 2 + cfg.s / (hi - U) ** 2
    return G


def fd_gradient(func, U, delta=1e-6):
    U = np.asarray(U, dtype=float)
    out = np.zeros_like(U)
    it = np.nditer(U, flags=["multi_index"])
    for _ in it:
        idx = it.multi_index
        up = U.copy()
        up[idx] += delta
        down = U.copy()
        down[idx] -= delta
        out[idx] = (func(up) - func(down)) / (2 * delta)
    return out


def fd_jacobian_matrix(func, U, delta=1e-5):
    """FD of a (Nc, m)-valued function over the flattened plan."""
    U = np.asarray(U, dtype=float)
    dim = U.size
    H = np.zeros((dim, dim))
    flat = U.ravel()
    for j in range(dim):
        up = flat.copy()
        up[j] += delta
        down = flat.copy()
        down[j] -= delta
        H[:, j] = (
            func(up.reshape(U.shape)).ravel() - func(down.reshape(U.shape)).ravel()
        ) / (2 * delta)
    return H


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
