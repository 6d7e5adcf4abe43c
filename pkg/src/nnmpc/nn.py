"""Load, evaluate, and numerically differentiate small dense/GRU networks.

A model is a stack of layers read from a JSON document (see
:func:`load_model` for the schema). Inputs and outputs live in normalized
units, nominally bounded by [-0.5, 0.5]; :func:`forward` emits a
:class:`~nnmpc.errors.NormalizationWarning` once when fed values outside
that range plus a small slack, since mild extrapolation is expected.

Derivatives come from second-order central finite differences: a stencil
of perturbed copies of the input vector is pushed through the network in
one batch, which keeps the hot control path cheap. Only the leading rows
of the stencil (the actuator-history region of the input window) are ever
requested by the controller.

Models are immutable after loading; every function here is pure and safe
for concurrent callers.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    ArgumentError,
    DimensionError,
    ModelFormatError,
    ModelShapeError,
    NormalizationWarning,
)

__all__ = [
    "ACTIVATIONS",
    "LayerSpec",
    "Normalization",
    "ModelSpec",
    "load_model",
    "model_from_dict",
    "model_to_dict",
    "save_model",
    "param_count",
    "forward",
    "forward_batch",
    "build_stencil",
    "grad_fd",
    "hess_diag_fd",
    "reduce_to_dU",
]

ACTIVATIONS = ("relu", "tanh", "sigmoid", "linear")

# Inputs are min-max normalized into [-0.5, 0.5]; warn beyond this slack.
RANGE_SLACK = 0.05


def _apply_activation(name: str, z: np.ndarray) -> np.ndarray:
    if name == "relu":
        return np.maximum(z, 0.0)
    if name == "tanh":
        return np.tanh(z)
    if name == "sigmoid":
        return 1.0 / (1.0 + np.exp(-z))
    if name == "linear":
        return z
    raise ArgumentError(f"unknown activation {name!r}")


@dataclass(frozen=True)
class LayerSpec:
    """One layer: a dense map or a single-step GRU cell.

    Dense: ``weights`` is (fan_in, units), row = input index, ``bias`` is
    (units,). GRU: ``weights`` is the input kernel (fan_in, 3*units) with
    gate columns ordered [update | reset | candidate], ``recurrent_weights``
    is (units, 3*units) and ``bias`` is (3*units,).
    """

    kind: str
    units: int
    activation: str
    weights: np.ndarray
    bias: np.ndarray
    recurrent_weights: np.ndarray | None = None

    @property
    def fan_in(self) -> int:
        return self.weights.shape[0]


@dataclass(frozen=True)
class Normalization:
    """Per-column min/max bounds mapping raw data into [-0.5, 0.5]."""

    input_min: np.ndarray
    input_max: np.ndarray
    output_min: np.ndarray
    output_max: np.ndarray


@dataclass(frozen=True)
class ModelSpec:
    """A validated feed-forward network plus optional normalization bounds.

    ``output_mode`` declares what the network emits: "absolute" for the
    next output itself, "delta" for the one-step output transition, to be
    added onto the newest entry of the output-history region by whoever
    rolls the model forward. Both live in normalized output units.
    """

    input_dim: int
    layers: tuple[LayerSpec, ...] = field(default_factory=tuple)
    normalization: Normalization | None = None
    output_mode: str = "absolute"

    @property
    def output_dim(self) -> int:
        return self.layers[-1].units


def param_count(model: ModelSpec) -> int:
    """Total number of trainable parameters."""
    total = 0
    for layer in model.layers:
        total += layer.weights.size + layer.bias.size
        if layer.recurrent_weights is not None:
            total += layer.recurrent_weights.size
    return total


def _validate_layer(kind: str, units: int, activation: str, w, b, rw, fan_in: int) -> LayerSpec:
    if kind not in ("dense", "gru"):
        raise ModelFormatError(f"unknown layer kind {kind!r}")
    if activation not in ACTIVATIONS:
        raise ModelFormatError(f"unknown activation {activation!r}")
    if units < 1:
        raise ModelShapeError(f"layer units must be >= 1, got {units}")
    w = np.asarray(w, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if kind == "dense":
        if w.shape != (fan_in, units):
            raise ModelShapeError(
                f"dense weights must be ({fan_in}, {units}), got {w.shape}"
            )
        if b.shape != (units,):
            raise ModelShapeError(f"dense bias must be ({units},), got {b.shape}")
        if rw is not None:
            raise ModelShapeError("dense layers take no recurrent weights")
        return LayerSpec(kind, units, activation, w, b, None)
    if rw is None:
        raise ModelShapeError("gru layers need recurrent weights")
    rw = np.asarray(rw, dtype=np.float64)
    if w.shape != (fan_in, 3 * units):
        raise ModelShapeError(
            f"gru kernel must be ({fan_in}, {3 * units}), got {w.shape}"
        )
    if rw.shape != (units, 3 * units):
        raise ModelShapeError(
            f"gru recurrent kernel must be ({units}, {3 * units}), got {rw.shape}"
        )
    if b.shape != (3 * units,):
        raise ModelShapeError(f"gru bias must be ({3 * units},), got {b.shape}")
    return LayerSpec(kind, units, activation, w, b, rw)


def model_from_dict(doc: dict) -> ModelSpec:
    """Validate a model document and build an immutable :class:`ModelSpec`."""
    if not isinstance(doc, dict):
        raise ModelFormatError("model document must be a JSON object")
    try:
        input_dim = int(doc["input_dim"])
        raw_layers = doc["layers"]
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"missing or malformed required field: {exc}") from exc
    if input_dim < 1:
        raise ModelShapeError(f"input_dim must be >= 1, got {input_dim}")
    if not isinstance(raw_layers, list) or not raw_layers:
        raise ModelFormatError("'layers' must be a non-empty list")

    layers = []
    fan_in = input_dim
    for i, entry in enumerate(raw_layers):
        if not isinstance(entry, dict):
            raise ModelFormatError(f"layer {i} must be an object")
        try:
            kind = entry["kind"]
            units = int(entry["units"])
            activation = entry["activation"]
            w = entry["weights"]
            b = entry["bias"]
        except (KeyError, TypeError, ValueError) as exc:
            raise ModelFormatError(f"layer {i} is missing a field: {exc}") from exc
        rw = entry.get("recurrent_weights")
        layer = _validate_layer(kind, units, activation, w, b, rw, fan_in)
        layers.append(layer)
        fan_in = units

    norm = None
    if "normalization" in doc and doc["normalization"] is not None:
        block = doc["normalization"]
        try:
            norm = Normalization(
                input_min=np.asarray(block["input_min"], dtype=np.float64),
                input_max=np.asarray(block["input_max"], dtype=np.float64),
                output_min=np.asarray(block["output_min"], dtype=np.float64),
                output_max=np.asarray(block["output_max"], dtype=np.float64),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ModelFormatError(f"malformed normalization block: {exc}") from exc
        if norm.input_min.shape != (input_dim,) or norm.input_max.shape != (input_dim,):
            raise ModelShapeError("normalization input bounds must have length input_dim")
        n_out = layers[-1].units
        if norm.output_min.shape != (n_out,) or norm.output_max.shape != (n_out,):
            raise ModelShapeError("normalization output bounds must have length output_dim")

    output_mode = doc.get("output_mode", "absolute")
    if output_mode not in ("absolute", "delta"):
        raise ModelFormatError(f"unknown output_mode {output_mode!r}")

    return ModelSpec(
        input_dim=input_dim,
        layers=tuple(layers),
        normalization=norm,
        output_mode=output_mode,
    )


def load_model(source) -> ModelSpec:
    """Load a model from a path, JSON text/bytes, or an already parsed dict."""
    if isinstance(source, dict):
        return model_from_dict(source)
    if isinstance(source, (str, Path)) and not (
        isinstance(source, str) and source.lstrip().startswith("{")
    ):
        try:
            text = Path(source).read_text()
        except OSError as exc:
            raise ModelFormatError(f"cannot read model file {source}: {exc}") from exc
    elif isinstance(source, bytes):
        text = source.decode("utf-8", errors="replace")
    else:
        text = str(source)
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"model document is not valid JSON: {exc}") from exc
    return model_from_dict(doc)


def model_to_dict(model: ModelSpec) -> dict:
    doc = {
        "input_dim": model.input_dim,
        **({"output_mode": "delta"} if model.output_mode == "delta" else {}),
        "layers": [
            {
                "kind": layer.kind,
                "units": layer.units,
                "activation": layer.activation,
                "weights": layer.weights.tolist(),
                "bias": layer.bias.tolist(),
                **(
                    {"recurrent_weights": layer.recurrent_weights.tolist()}
                    if layer.recurrent_weights is not None
                    else {}
                ),
            }
            for layer in model.layers
        ],
    }
    if model.normalization is not None:
        doc["normalization"] = {
            "input_min": model.normalization.input_min.tolist(),
            "input_max": model.normalization.input_max.tolist(),
            "output_min": model.normalization.output_min.tolist(),
            "output_max": model.normalization.output_max.tolist(),
        }
    return doc


def save_model(model: ModelSpec, path) -> None:
    Path(path).write_text(json.dumps(model_to_dict(model), sort_keys=True, indent=1))


def _gru_step(layer: LayerSpec, x: np.ndarray) -> np.ndarray:
    # Single timestep from a zero hidden state: the recurrent kernel drops
    # out and the cell reduces to (1 - update_gate) * candidate.
    u = layer.units
    zrh = x @ layer.weights + layer.bias
    z = 1.0 / (1.0 + np.exp(-zrh[..., :u]))
    candidate = np.tanh(zrh[..., 2 * u :])
    return (1.0 - z) * candidate


def forward_batch(model: ModelSpec, x: np.ndarray) -> np.ndarray:
    """Evaluate the network on a (batch, input_dim) matrix of inputs."""
    a = np.asarray(x, dtype=np.float64)
    if a.ndim != 2 or a.shape[1] != model.input_dim:
        raise DimensionError(
            f"expected inputs of shape (batch, {model.input_dim}), got {a.shape}"
        )
    for layer in model.layers:
        if layer.kind == "gru":
            a = _gru_step(layer, a)
        else:
            a = _apply_activation(layer.activation, a @ layer.weights + layer.bias)
    return a


def forward(model: ModelSpec, x: np.ndarray) -> np.ndarray:
    """Evaluate the network on a single input vector of length input_dim."""
    v = np.asarray(x, dtype=np.float64)
    if v.ndim != 1 or v.shape[0] != model.input_dim:
        raise DimensionError(
            f"expected an input vector of length {model.input_dim}, got shape {v.shape}"
        )
    if v.size and float(np.max(np.abs(v))) > 0.5 + RANGE_SLACK:
        warnings.warn(
            "network input outside the expected normalized range [-0.55, 0.55]",
            NormalizationWarning,
            stacklevel=2,
        )
    return forward_batch(model, v[None, :])[0]


def build_stencil(x: np.ndarray, eps: float) -> np.ndarray:
    """Stack the +/- central-difference stencil rows around an input vector.

    Returns a (2p, p) matrix: rows 0..p-1 are x + eps*e_i, rows p..2p-1 are
    x - eps*e_i. Row i differs from x only at coordinate i.
    """
    if eps <= 0:
        raise ArgumentError(f"stencil step must be positive, got {eps}")
    v = np.asarray(x, dtype=np.float64)
    if v.ndim != 1:
        raise DimensionError("stencil base point must be a vector")
    p = v.shape[0]
    eye = np.eye(p) * eps
    return np.vstack([v + eye, v - eye])


def _fd_rows(func, x: np.ndarray, eps: float, rows: int):
    """Batched +/-eps evaluations for the first ``rows`` coordinates."""
    v = np.asarray(x, dtype=np.float64)
    p = v.shape[0]
    if rows < 1 or rows > p:
        raise DimensionError(f"rows must be in [1, {p}], got {rows}")
    eye = np.eye(rows, p) * eps
    batch = np.vstack([v + eye, v - eye, v[None, :]])
    out = func(batch)
    return out[:rows], out[rows : 2 * rows], out[2 * rows]


def grad_fd(model: ModelSpec, x: np.ndarray, eps: float, rows: int) -> np.ndarray:
    """Central-difference input gradient for the first ``rows`` coordinates.

    Row i of the result is (g(x + eps*e_i) - g(x - eps*e_i)) / (2 eps),
    a (rows, output_dim) matrix accurate to O(eps^2).
    """
    if eps <= 0:
        raise ArgumentError(f"stencil step must be positive, got {eps}")
    plus, minus, _ = _fd_rows(lambda b: forward_batch(model, b), x, eps, rows)
    return (plus - minus) / (2.0 * eps)


def hess_diag_fd(model: ModelSpec, x: np.ndarray, eps: float, rows: int) -> np.ndarray:
    """Central second difference (g(x+eps*e_i) - 2 g(x) + g(x-eps*e_i)) / eps^2.

    Returns the diagonal curvature of each output w.r.t. the first ``rows``
    input coordinates as a (rows, output_dim) matrix.
    """
    if eps <= 0:
        raise ArgumentError(f"stencil step must be positive, got {eps}")
    plus, minus, center = _fd_rows(lambda b: forward_batch(model, b), x, eps, rows)
    return (plus - 2.0 * center[None, :] + minus) / (eps * eps)


def reduce_to_dU(theta: np.ndarray, n_d: int, m: int) -> np.ndarray:
    """Collapse per-coordinate input derivatives onto the actuator axis.

    ``theta`` holds one row per coordinate of the actuator-history region
    (n_d blocks of m entries, most recent first) and one column per output.
    The transpose is reshaped to (outputs, n_d, m) and summed over the
    history axis, giving the total response of each output to a change
    applied across every history slot of one actuator.
    """
    t = np.asarray(theta, dtype=np.float64)
    if t.ndim != 2 or t.shape[0] != n_d * m:
        raise DimensionError(
            f"expected exactly n_d*m = {n_d * m} rows, got shape {t.shape}"
        )
    n = t.shape[1]
    return t.T.reshape(n, n_d, m).sum(axis=1)
