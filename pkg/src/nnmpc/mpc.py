"""Newton-Raphson model-predictive control over a learned forward model.

The controller keeps a rolling input window ``x_inputs`` of length
p = n_d*m + d_d*n + w laid out [actuator history | output history |
sensors], each history block most recent first. Each control cycle rolls
the applied input and newest output into the window, predicts N steps
ahead by recursive network calls, and improves the plan U (Nc rows of m
actuators) by Newton iterations H dU = -grad solved with the LU module.

Derivatives use one finite-difference stencil per iteration, taken at the
final rollout input vector. The stencil rows covering the actuator-history
region are collapsed over the history axis (see
:func:`nnmpc.nn.reduce_to_dU`), giving a single sensitivity pair

    D  = total first derivative of the output w.r.t. one actuator     (n, m)
    X2 = total diagonal second derivative                              (n, m)

shared by every horizon step. The cost derivatives below are the exact
gradient and Hessian of the controller's local model of how the plan
moves predictions:

    yhat_j(U) = yhat_j0 + D d_j + 0.5 * X2 (d_j o d_j),
    d_j = U[sigma(j)] - U0[sigma(j)],   sigma(j) = min(j, Nc - 1)

around the current plan U0 with rollout yhat0, i.e. each prediction
follows the plan row that feeds its rollout step. Smoothness and barrier
terms are exact. :func:`predict_response` exposes the model so tests and
callers can evaluate the same functional the solver differentiates.

The quadratic tracking term is weighted by Q, input increments by Lambda,
and a pole barrier with tunings (s, b, r) keeps every input inside the
open interval (b - r/2, b + r/2) in normalized units.

One ControlState per control loop; distinct controllers may run in
parallel. All math functions are pure given their inputs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    ArgumentError,
    BarrierDomainError,
    DimensionError,
    ModelShapeError,
    NumericsError,
    SingularMatrix,
)
from .linalg import lu_factor, lu_solve, roll
from .nn import ModelSpec, forward, grad_fd, hess_diag_fd, reduce_to_dU

__all__ = [
    "ControllerConfig",
    "ControlState",
    "HorizonPrediction",
    "NewtonResult",
    "build_input_vector",
    "predict_horizon",
    "predict_response",
    "network_sensitivities",
    "delta_u_jacobian",
    "cost",
    "cost_jacobian",
    "cost_hessian",
    "newton_step",
    "control_step",
]


def _as_weight_matrix(value, dim: int, name: str) -> np.ndarray:
    """Accept a scalar, a diagonal vector, or a full matrix."""
    a = np.asarray(value, dtype=np.float64)
    if a.ndim == 0:
        a = np.eye(dim) * float(a)
    elif a.ndim == 1:
        if a.shape[0] != dim:
            raise DimensionError(f"{name} diagonal must have length {dim}")
        a = np.diag(a)
    if a.shape != (dim, dim):
        raise DimensionError(f"{name} must be {dim}x{dim}, got {a.shape}")
    if not np.allclose(a, a.T, rtol=1e-10, atol=1e-12):
        raise ArgumentError(f"{name} must be symmetric")
    eigs = np.linalg.eigvalsh(a)
    if eigs.min() < -1e-10 * max(eigs.max(), 1.0):
        raise ArgumentError(f"{name} must be positive semi-definite")
    return a


@dataclass
class ControllerConfig:
    """All controller tunings and dimensions.

    ``N`` is the prediction horizon (number of recursive model calls),
    ``N1``/``N2`` the 1-based inclusive bounds of the costed sub-window,
    ``Nc`` the number of optimized plan rows (later steps reuse the last
    row). ``n_d``/``d_d`` are the input/output history depths and
    ``m``/``n``/``w`` the actuator, output, and sensor counts. ``eps``
    is the finite-difference stencil step, conventionally the control
    period.
    """

    m: int
    n: int
    Q: np.ndarray
    Lambda: np.ndarray
    w: int = 0
    n_d: int = 2
    d_d: int = 2
    N: int = 1
    N1: int = 1
    N2: int | None = None
    Nc: int = 1
    s: float = 1e-20
    b: float = 1e-5
    r: float = 4e2
    eps: float = 1e-3
    max_iters: int = 3
    tol: float = 1e-4
    u_neutral: np.ndarray | None = None

    def __post_init__(self):
        if min(self.m, self.n, self.n_d, self.d_d) < 1 or self.w < 0:
            raise ArgumentError("dimensions must be positive (w may be zero)")
        if self.N2 is None:
            self.N2 = self.N
        if not (1 <= self.N1 <= self.N2 <= self.N):
            raise ArgumentError(
                f"need 1 <= N1 <= N2 <= N, got N1={self.N1}, N2={self.N2}, N={self.N}"
            )
        if not (1 <= self.Nc <= self.N):
            raise ArgumentError(f"need 1 <= Nc <= N, got Nc={self.Nc}, N={self.N}")
        if self.s <= 0 or self.r <= 0:
            raise ArgumentError(
                f"barrier tunings s and r must be positive, got s={self.s}, r={self.r}"
            )
        if self.eps <= 0:
            raise ArgumentError(f"stencil step must be positive, got {self.eps}")
        if self.max_iters < 1 or self.tol < 0:
            raise ArgumentError("max_iters must be >= 1 and tol >= 0")
        self.Q = _as_weight_matrix(self.Q, self.n, "Q")
        self.Lambda = _as_weight_matrix(self.Lambda, self.m, "Lambda")
        if self.u_neutral is None:
            self.u_neutral = np.zeros(self.m)
        else:
            self.u_neutral = np.asarray(self.u_neutral, dtype=np.float64)
            if self.u_neutral.shape != (self.m,):
                raise DimensionError(f"u_neutral must have length {self.m}")
        lo, hi = self.barrier_interval
        if np.any(self.u_neutral <= lo) or np.any(self.u_neutral >= hi):
            raise ArgumentError("u_neutral must lie inside the barrier interval")

    @property
    def p(self) -> int:
        return self.n_d * self.m + self.d_d * self.n + self.w

    @property
    def barrier_interval(self) -> tuple[float, float]:
        return self.b - self.r / 2.0, self.b + self.r / 2.0

    def to_dict(self) -> dict:
        return {
            "m": self.m,
            "n": self.n,
            "w": self.w,
            "n_d": self.n_d,
            "d_d": self.d_d,
            "N": self.N,
            "N1": self.N1,
            "N2": self.N2,
            "Nc": self.Nc,
            "Q": self.Q.tolist(),
            "Lambda": self.Lambda.tolist(),
            "s": self.s,
            "b": self.b,
            "r": self.r,
            "eps": self.eps,
            "max_iters": self.max_iters,
            "tol": self.tol,
            "u_neutral": self.u_neutral.tolist(),
        }

    @staticmethod
    def from_dict(doc: dict) -> "ControllerConfig":
        return ControllerConfig(**doc)


@dataclass
class ControlState:
    """Mutable per-loop state: the input window, plan, and last outputs."""

    x_inputs: np.ndarray
    U: np.ndarray
    last_applied: np.ndarray
    last_y: np.ndarray
    last_cost: float = float("nan")
    last_iters: int = 0
    last_residual: float = float("nan")

    @staticmethod
    def fresh(cfg: ControllerConfig) -> "ControlState":
        """Zeroed history with the plan warm-started at the neutral input."""
        return ControlState(
            x_inputs=np.zeros(cfg.p),
            U=np.tile(cfg.u_neutral, (cfg.Nc, 1)),
            last_applied=cfg.u_neutral.copy(),
            last_y=np.zeros(cfg.n),
        )


@dataclass(frozen=True)
class HorizonPrediction:
    """Rollout outputs, the plan rows consumed, and the final network input."""

    Yhat: np.ndarray
    inputs_used: np.ndarray
    last_input: np.ndarray


def _check_model(model: ModelSpec, cfg: ControllerConfig) -> None:
    if model.input_dim != cfg.p:
        raise ModelShapeError(
            f"model takes {model.input_dim} inputs but the controller window "
            f"has p = {cfg.p}"
        )
    if model.output_dim != cfg.n:
        raise ModelShapeError(
            f"model emits {model.output_dim} outputs but the controller expects {cfg.n}"
        )


def build_input_vector(state: ControlState, u_t, y_prev, l_t, cfg: ControllerConfig) -> None:
    """Roll the newest input, output, and sensor reading into the window.

    In place: the actuator region shifts by one block and takes ``u_t`` at
    its head, the output region shifts and takes ``y_prev``, and the sensor
    tail is overwritten with ``l_t`` regardless of history.
    """
    u_t = np.asarray(u_t, dtype=np.float64)
    y_prev = np.asarray(y_prev, dtype=np.float64)
    l_t = np.asarray(l_t, dtype=np.float64)
    if u_t.shape != (cfg.m,):
        raise DimensionError(f"u_t must have length {cfg.m}, got {u_t.shape}")
    if y_prev.shape != (cfg.n,):
        raise DimensionError(f"y_prev must have length {cfg.n}, got {y_prev.shape}")
    if l_t.shape != (cfg.w,):
        raise DimensionError(f"l_t must have length {cfg.w}, got {l_t.shape}")
    if state.x_inputs.shape != (cfg.p,):
        raise DimensionError(f"state window must have length {cfg.p}")
    x = state.x_inputs
    tau_end = cfg.n_d * cfg.m
    roll(x, 0, tau_end - 1, cfg.m)
    x[: cfg.m] = u_t
    alpha_end = tau_end + cfg.d_d * cfg.n
    roll(x, tau_end, alpha_end - 1, cfg.n)
    x[tau_end : tau_end + cfg.n] = y_prev
    if cfg.w:
        x[cfg.p - cfg.w :] = l_t


def predict_horizon(
    model: ModelSpec, state: ControlState, cfg: ControllerConfig, U: np.ndarray | None = None
) -> HorizonPrediction:
    """Recursive N-step rollout feeding the plan and its own predictions.

    Assumes the output-history head of the state window already holds the
    newest output (maintained by :func:`build_input_vector`), so step 0
    only rolls the first plan row into the actuator region. Later steps
    feed each prediction back into the output history; sensor slots stay
    at the latest reading. Rollout step k consumes plan row min(k, Nc-1).
    """
    _check_model(model, cfg)
    plan = state.U if U is None else np.asarray(U, dtype=np.float64)
    if plan.shape != (cfg.Nc, cfg.m):
        raise DimensionError(f"plan must be ({cfg.Nc}, {cfg.m}), got {plan.shape}")
    x = state.x_inputs.copy()
    tau_end = cfg.n_d * cfg.m
    alpha_end = tau_end + cfg.d_d * cfg.n
    delta_mode = model.output_mode == "delta"
    Yhat = np.empty((cfg.N, cfg.n))
    used = np.empty((cfg.N, cfg.m))
    for k in range(cfg.N):
        u_k = plan[min(k, cfg.Nc - 1)]
        roll(x, 0, tau_end - 1, cfg.m)
        x[: cfg.m] = u_k
        if k > 0:
            roll(x, tau_end, alpha_end - 1, cfg.n)
            x[tau_end : tau_end + cfg.n] = Yhat[k - 1]
        out = forward(model, x)
        # Transition networks emit the one-step change on top of the
        # newest output-history entry.
        Yhat[k] = x[tau_end : tau_end + cfg.n] + out if delta_mode else out
        used[k] = u_k
    return HorizonPrediction(Yhat=Yhat, inputs_used=used, last_input=x)


def network_sensitivities(
    model: ModelSpec, x_last: np.ndarray, cfg: ControllerConfig
) -> tuple[np.ndarray, np.ndarray]:
    """Shared per-actuator first and diagonal second derivatives (D, X2).

    One stencil evaluation at the latest network input covers the whole
    horizon; only the actuator-history rows are computed.
    """
    rows = cfg.n_d * cfg.m
    theta = grad_fd(model, x_last, cfg.eps, rows)
    chi = hess_diag_fd(model, x_last, cfg.eps, rows)
    return reduce_to_dU(theta, cfg.n_d, cfg.m), reduce_to_dU(chi, cfg.n_d, cfg.m)


def _barrier_distances(U: np.ndarray, cfg: ControllerConfig):
    lo, hi = cfg.barrier_interval
    if np.any(U <= lo) or np.any(U >= hi):
        bad = U[(U <= lo) | (U >= hi)]
        raise BarrierDomainError(
            f"plan entries {bad.tolist()} outside the open interval ({lo}, {hi})"
        )
    return U - lo, hi - U


def _barrier_value(U: np.ndarray, cfg: ControllerConfig) -> float:
    below, above = _barrier_distances(U, cfg)
    return float(np.sum(cfg.s / below + cfg.s / above - 4.0 / cfg.r))


def _barrier_grad(U: np.ndarray, cfg: ControllerConfig) -> np.ndarray:
    below, above = _barrier_distances(U, cfg)
    return -cfg.s / below**2 + cfg.s / above**2


def _barrier_curv(U: np.ndarray, cfg: ControllerConfig) -> np.ndarray:
    below, above = _barrier_distances(U, cfg)
    return 2.0 * cfg.s / below**3 + 2.0 * cfg.s / above**3


def delta_u_jacobian(h: int, j: int) -> float:
    """Derivative pattern of the j-th input increment w.r.t. plan row h."""
    return (1.0 if h == j else 0.0) - (1.0 if h == j - 1 else 0.0)


def _deltas(U: np.ndarray, u_prev: np.ndarray) -> np.ndarray:
    """Input increments du_j = U_j - U_{j-1} with U_{-1} = the last applied input.

    The row replicated past Nc makes the increment after the final plan row
    identically zero, so it never contributes to cost or derivatives.
    """
    shifted = np.vstack([u_prev[None, :], U[:-1]])
    return U - shifted


def _window(cfg: ControllerConfig) -> range:
    # 1-based window [N1, N2] over predictions -> 0-based rollout rows.
    return range(cfg.N1 - 1, cfg.N2)


def cost(Yhat, Yref, U, u_prev, cfg: ControllerConfig) -> float:
    """Tracking + smoothness + barrier cost of a plan given its rollout.

    Raises :class:`BarrierDomainError` if any plan entry sits on or past a
    barrier pole.
    """
    Yhat = Yhat.Yhat if isinstance(Yhat, HorizonPrediction) else np.asarray(Yhat, dtype=np.float64)
    Yref = np.asarray(Yref, dtype=np.float64)
    U = np.asarray(U, dtype=np.float64)
    u_prev = np.asarray(u_prev, dtype=np.float64)
    if Yref.shape[0] < cfg.N2:
        raise DimensionError(f"reference window needs at least N2={cfg.N2} rows")
    total = 0.0
    for k in _window(cfg):
        e = Yref[k] - Yhat[k]
        total += float(e @ cfg.Q @ e)
    for du in _deltas(U, u_prev):
        total += float(du @ cfg.Lambda @ du)
    return total + _barrier_value(U, cfg)


def predict_response(
    Yhat0: np.ndarray, D: np.ndarray, X2: np.ndarray, U, U0, cfg: ControllerConfig
) -> np.ndarray:
    """The controller's local model of the rollout at a candidate plan.

    Each prediction row moves with the plan row that feeds its rollout
    step through the shared sensitivities: linear in D plus a diagonal
    quadratic term in X2. Exact at U = U0.
    """
    U = np.asarray(U, dtype=np.float64)
    U0 = np.asarray(U0, dtype=np.float64)
    out = np.asarray(Yhat0, dtype=np.float64).copy()
    for k in range(out.shape[0]):
        d = U[min(k, cfg.Nc - 1)] - U0[min(k, cfg.Nc - 1)]
        out[k] += D @ d + 0.5 * (X2 @ (d * d))
    return out


def _jacobian_core(U, u_prev, Yhat, Yref, D, cfg: ControllerConfig) -> np.ndarray:
    G = np.zeros((cfg.Nc, cfg.m))
    for k in _window(cfg):
        e = Yref[k] - Yhat[k]
        G[min(k, cfg.Nc - 1)] += -2.0 * (e @ cfg.Q) @ D
    deltas = _deltas(U, u_prev)
    for j in range(cfg.Nc):
        lam_du = 2.0 * (deltas[j] @ cfg.Lambda)
        for h in range(cfg.Nc):
            coef = delta_u_jacobian(h, j)
            if coef:
                G[h] += coef * lam_du
    return G + _barrier_grad(U, cfg)


def _hessian_core(U, Yhat, Yref, D, X2, cfg: ControllerConfig) -> np.ndarray:
    dim = cfg.Nc * cfg.m
    H = np.zeros((dim, dim))
    gauss = 2.0 * (D.T @ cfg.Q @ D)
    for k in _window(cfg):
        e = Yref[k] - Yhat[k]
        h = min(k, cfg.Nc - 1)
        block = gauss - 2.0 * np.diag(X2.T @ (cfg.Q @ e))
        H[h * cfg.m : (h + 1) * cfg.m, h * cfg.m : (h + 1) * cfg.m] += block
    two_lambda = 2.0 * cfg.Lambda
    for j in range(cfg.Nc):
        for h in range(cfg.Nc):
            ch = delta_u_jacobian(h, j)
            if not ch:
                continue
            for h2 in range(cfg.Nc):
                ch2 = delta_u_jacobian(h2, j)
                if ch2:
                    H[h * cfg.m : (h + 1) * cfg.m, h2 * cfg.m : (h2 + 1) * cfg.m] += (
                        ch * ch2 * two_lambda
                    )
    H[np.diag_indices(dim)] += _barrier_curv(U, cfg).ravel()
    return H


def cost_jacobian(model, state: ControlState, Yhat, Yref, cfg: ControllerConfig) -> np.ndarray:
    """Gradient of the cost w.r.t. the plan, one row per plan row.

    Tracking errors pull on the plan row feeding each horizon step through
    the shared sensitivity D; increment and barrier terms are exact.
    """
    hp = Yhat if isinstance(Yhat, HorizonPrediction) else None
    Yhat_m = hp.Yhat if hp is not None else np.asarray(Yhat, dtype=np.float64)
    x_last = hp.last_input if hp is not None else state.x_inputs
    D, _ = network_sensitivities(model, x_last, cfg)
    return _jacobian_core(state.U, state.last_applied, Yhat_m, np.asarray(Yref, dtype=np.float64), D, cfg)


def cost_hessian(model, state: ControlState, Yhat, Yref, cfg: ControllerConfig) -> np.ndarray:
    """Hessian of the cost over the row-major flattened plan vector.

    Prediction curvature lands on the per-step diagonal blocks; the
    increment term couples neighbouring rows (4*Lambda interior diagonal,
    2*Lambda on the final row, -2*Lambda off-diagonal); the barrier adds
    to the diagonal. The increment term's own second derivative w.r.t.
    the plan is identically zero and is omitted.
    """
    hp = Yhat if isinstance(Yhat, HorizonPrediction) else None
    Yhat_m = hp.Yhat if hp is not None else np.asarray(Yhat, dtype=np.float64)
    x_last = hp.last_input if hp is not None else state.x_inputs
    D, X2 = network_sensitivities(model, x_last, cfg)
    return _hessian_core(state.U, Yhat_m, np.asarray(Yref, dtype=np.float64), D, X2, cfg)


def _clamp_into_barrier(U: np.ndarray, cfg: ControllerConfig) -> np.ndarray:
    lo, hi = cfg.barrier_interval
    margin = 1e-6 * cfg.r
    return np.clip(U, lo + margin, hi - margin)


@dataclass(frozen=True)
class NewtonResult:
    """Final plan, iteration count, and per-iteration step sizes."""

    U: np.ndarray
    iters: int
    residual: float
    residuals: tuple[float, ...]


def newton_step(
    cfg: ControllerConfig, state: ControlState, Yref, model: ModelSpec
) -> NewtonResult:
    """Improve the plan by up to ``max_iters`` Newton iterations.

    Each iteration re-predicts the horizon at the current plan, refreshes
    the shared sensitivities at the final rollout input, assembles the
    gradient and Hessian, and solves H dU = -grad with the LU module. A
    singular Hessian is retried once with Levenberg damping. Iterates are
    clamped into the barrier interval (with a small margin) before and
    after every step, so returned plans always lie strictly inside it.
    Stops early once the realized max-abs plan change drops below ``tol``.
    """
    _check_model(model, cfg)
    Yref = np.asarray(Yref, dtype=np.float64)
    U = _clamp_into_barrier(np.asarray(state.U, dtype=np.float64).copy(), cfg)
    residuals: list[float] = []
    for _ in range(cfg.max_iters):
        hp = predict_horizon(model, state, cfg, U=U)
        D, X2 = network_sensitivities(model, hp.last_input, cfg)
        G = _jacobian_core(U, state.last_applied, hp.Yhat, Yref, D, cfg)
        H = _hessian_core(U, hp.Yhat, Yref, D, X2, cfg)
        if not (np.all(np.isfinite(G)) and np.all(np.isfinite(H))):
            raise NumericsError("cost derivatives became non-finite")
        rhs = -G.ravel()
        try:
            step = lu_solve(lu_factor(H), rhs)
        except SingularMatrix:
            lam = 1e-6 * np.trace(H) / H.shape[0]
            step = lu_solve(lu_factor(H + lam * np.eye(H.shape[0])), rhs)
        if not np.all(np.isfinite(step)):
            raise NumericsError("Newton step became non-finite")
        U_new = _clamp_into_barrier(U + step.reshape(cfg.Nc, cfg.m), cfg)
        res = float(np.max(np.abs(U_new - U)))
        residuals.append(res)
        U = U_new
        if res < cfg.tol:
            break
    return NewtonResult(
        U=U, iters=len(residuals), residual=residuals[-1], residuals=tuple(residuals)
    )


def control_step(
    model: ModelSpec,
    state: ControlState,
    cfg: ControllerConfig,
    y_ref_window,
    l_t=(),
    y_feedback=None,
) -> np.ndarray:
    """One full control cycle; returns the input to apply.

    Rolls the previously applied input and the newest output into the
    window (``y_feedback`` supplies a measured output when the plant is
    observable; otherwise the controller feeds back its own last
    prediction), runs the Newton solver from the warm-started plan, and
    advances the state. Diagnostics from the cycle are stashed on the
    state (``last_cost``, ``last_iters``, ``last_residual``).
    """
    l_t = np.asarray(l_t, dtype=np.float64).reshape(cfg.w)
    y_prev = state.last_y if y_feedback is None else np.asarray(y_feedback, dtype=np.float64)
    build_input_vector(state, state.last_applied, y_prev, l_t, cfg)
    result = newton_step(cfg, state, y_ref_window, model)
    hp = predict_horizon(model, state, cfg, U=result.U)
    state.last_cost = cost(hp, y_ref_window, result.U, state.last_applied, cfg)
    state.last_iters = result.iters
    state.last_residual = result.residual
    state.U = result.U
    state.last_y = hp.Yhat[0].copy()
    u_apply = result.U[0].copy()
    state.last_applied = u_apply.copy()
    return u_apply
