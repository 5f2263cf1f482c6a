"""Fully-connected feedforward network with bias-augmented layers.

Layer ``j`` maps its augmented input ``a_j`` (activations with a trailing 1)
through ``z_j = V_j^T a_j``. The network output is ``z_k``. All weight matrices
are packed into one flat vector ``theta = [vec(V_0); ...; vec(V_k)]`` using
column-stacked ``vec``.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from numba import njit

from .tensor_ops import unvec

ACTIVATIONS = {"tanh": 0, "sigmoid": 1}


@njit(cache=True)
def _act(z, kind):
    if kind == 0:
        return np.tanh(z)
    return 1.0 / (1.0 + np.exp(-z))


@njit(cache=True)
def _dact(z, kind):
    if kind == 0:
        t = np.tanh(z)
        return 1.0 - t * t
    s = 1.0 / (1.0 + np.exp(-z))
    return s * (1.0 - s)


@njit(cache=True)
def _pass(theta, sigma, rows, cols, offs, kind, want_jac):
    n_layers = rows.shape[0]
    width = max(rows.max(), cols.max())
    aug = np.zeros((n_layers, width))
    pre = np.zeros((n_layers, width))
    for i in range(sigma.shape[0]):
        aug[0, i] = sigma[i]
    aug[0, rows[0] - 1] = 1.0
    for j in range(n_layers):
        nr, nc, off = rows[j], cols[j], offs[j]
        for c in range(nc):
            acc = 0.0
            for i in range(nr):
                acc += theta[off + i + c * nr] * aug[j, i]
            pre[j, c] = acc
        if j + 1 < n_layers:
            for c in range(nc):
                aug[j + 1, c] = _act(pre[j, c], kind)
            aug[j + 1, nc] = 1.0
    n_out = cols[n_layers - 1]
    out = pre[n_layers - 1, :n_out].copy()
    jac = np.zeros((n_out, offs[n_layers]))
    if not want_jac:
        return out, jac
    back = np.zeros((n_out, width))
    for o in range(n_out):
        back[o, o] = 1.0
    for j in range(n_layers - 1, -1, -1):
        nr, nc, off = rows[j], cols[j], offs[j]
        # block_j = back (I kron a_j^T)
        for o in range(n_out):
            for c in range(nc):
                b = back[o, c]
                for i in range(nr):
                    jac[o, off + c * nr + i] = b * aug[j, i]
        if j > 0:
            # back <- back V_j^T phi'_j, dropping the bias row of V_j
            nxt = np.zeros((n_out, width))
            for o in range(n_out):
                for m in range(nr - 1):
                    acc = 0.0
                    for c in range(nc):
                        acc += back[o, c] * theta[off + m + c * nr]
                    nxt[o, m] = acc * _dact(pre[j - 1, m], kind)
            back = nxt
    return out, jac


@dataclass(frozen=True)
class DnnSpec:
    input_size: int
    hidden_widths: tuple[int, ...]
    output_size: int
    activation: str = "tanh"
    _shapes: tuple = field(init=False, repr=False, compare=False)
    _rows: np.ndarray = field(init=False, repr=False, compare=False)
    _cols: np.ndarray = field(init=False, repr=False, compare=False)
    _offs: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        widths = tuple(int(w) for w in self.hidden_widths)
        object.__setattr__(self, "hidden_widths", widths)
        if self.input_size < 1 or self.output_size < 1:
            raise ValueError("input_size and output_size must be positive")
        if not widths or min(widths) < 1:
            raise ValueError("need at least one hidden layer, all widths >= 1")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")
        rows = [self.input_size + 1] + [w + 1 for w in widths]
        cols = list(widths) + [self.output_size]
        object.__setattr__(self, "_shapes", tuple(zip(rows, cols)))
        object.__setattr__(self, "_rows", np.array(rows, dtype=np.int64))
        object.__setattr__(self, "_cols", np.array(cols, dtype=np.int64))
        object.__setattr__(
            self, "_offs", np.concatenate([[0], np.cumsum(np.multiply(rows, cols))]).astype(np.int64)
        )

    @classmethod
    def uniform(cls, input_size, hidden_layers, width, output_size, activation="tanh"):
        return cls(input_size, (width,) * hidden_layers, output_size, activation)

    @property
    def hidden_layers(self) -> int:
        return len(self.hidden_widths)

    @property
    def layer_shapes(self) -> tuple[tuple[int, int], ...]:
        """Shapes ``(rows, cols)`` of ``V_0 ... V_k``."""
        return self._shapes

    def to_dict(self) -> dict:
        return {
            "input_size": self.input_size,
            "hidden_widths": list(self.hidden_widths),
            "output_size": self.output_size,
            "activation": self.activation,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DnnSpec":
        if "hidden_widths" in d:
            widths = tuple(d["hidden_widths"])
        else:
            widths = (d["hidden_width"],) * d["hidden_layers"]
        return cls(d["input_size"], widths, d["output_size"], d.get("activation", "tanh"))


def param_count(spec: DnnSpec) -> int:
    return int(spec._offs[-1])


def layer_offsets(spec: DnnSpec) -> list[int]:
    """Start index of each ``vec(V_j)`` block inside theta, plus the total."""
    return [int(v) for v in spec._offs]


def unpack(spec: DnnSpec, theta) -> list[np.ndarray]:
    """Split theta into the weight matrices ``V_0 ... V_k``."""
    theta = np.asarray(theta, dtype=float)
    offs = layer_offsets(spec)
    if theta.shape != (offs[-1],):
        raise ValueError(f"theta must have length {offs[-1]}, got shape {theta.shape}")
    return [
        unvec(theta[offs[j]:offs[j + 1]], r, c)
        for j, (r, c) in enumerate(spec.layer_shapes)
    ]


def init_weights(spec: DnnSpec, rng: np.random.Generator, scale: float = 0.5) -> np.ndarray:
    """Draw every weight i.i.d. from U(-scale, scale)."""
    return rng.uniform(-scale, scale, size=param_count(spec))


def _check_inputs(spec, theta, sigma):
    sigma = np.asarray(sigma, dtype=float).reshape(-1)
    if sigma.size != spec.input_size:
        raise ValueError(f"sigma must have length {spec.input_size}, got {sigma.size}")
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (param_count(spec),):
        raise ValueError(f"theta must have length {param_count(spec)}, got shape {theta.shape}")
    if not (np.isfinite(sigma).all() and np.isfinite(theta).all()):
        raise ValueError("non-finite DNN input or weights")
    return theta, sigma


def forward(spec: DnnSpec, theta, sigma) -> np.ndarray:
    theta, sigma = _check_inputs(spec, theta, sigma)
    return _pass(theta, sigma, spec._rows, spec._cols, spec._offs,
                 ACTIVATIONS[spec.activation], False)[0]


def forward_and_jacobian(spec: DnnSpec, theta, sigma) -> tuple[np.ndarray, np.ndarray]:
    """Network output and its Jacobian with respect to theta.

    The Jacobian block for layer ``j`` is ``B_j (I kron a_j^T)`` where ``a_j``
    is the augmented input of the layer and ``B_j`` is the product of
    ``V_l^T phi'_l`` over the layers above ``j``. The appended bias entry has
    zero derivative, so the last row of each ``V_l`` drops out of ``B``.
    """
    theta, sigma = _check_inputs(spec, theta, sigma)
    return _pass(theta, sigma, spec._rows, spec._cols, spec._offs,
                 ACTIVATIONS[spec.activation], True)


def jacobian(spec: DnnSpec, theta, sigma) -> np.ndarray:
    """``d forward / d theta``, shape ``(output_size, param_count)``."""
    return forward_and_jacobian(spec, theta, sigma)[1]


def jacobian_blocks(spec: DnnSpec, jac) -> list[np.ndarray]:
    offs = layer_offsets(spec)
    return [jac[:, offs[j]:offs[j + 1]] for j in range(len(offs) - 1)]


def taylor_residual(spec: DnnSpec, theta_a, theta_b, sigma) -> float:
    """Size of the part of ``Phi(theta_a) - Phi(theta_b)`` not explained by the
    first-order expansion about ``theta_b``."""
    theta_a = np.asarray(theta_a, dtype=float)
    theta_b = np.asarray(theta_b, dtype=float)
    out_b, jac_b = forward_and_jacobian(spec, theta_b, sigma)
    out_a = forward(spec, theta_a, sigma)
    return float(np.linalg.norm(out_a - out_b - jac_b @ (theta_a - theta_b)))


def save_weights(path, spec: DnnSpec, theta) -> None:
    """Write theta as JSON (with spec and layer layout) or as a one-column CSV."""
    path = Path(path)
    theta = np.asarray(theta, dtype=float)
    if theta.size != param_count(spec):
        raise ValueError("theta length does not match spec")
    if path.suffix == ".csv":
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["theta"])
            for v in theta:
                w.writerow([f"{v:.17g}"])
        return
    doc = {
        "spec": spec.to_dict(),
        "layout": "concatenated column-stacked vec(V_0)..vec(V_k); V_j has shape (rows, cols)",
        "layer_shapes": [list(s) for s in spec.layer_shapes],
        "theta": [float(v) for v in theta],
    }
    path.write_text(json.dumps(doc, indent=1))


def load_weights(path, spec: DnnSpec | None = None) -> tuple[DnnSpec | None, np.ndarray]:
    path = Path(path)
    if path.suffix == ".csv":
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        theta = np.array([float(r[0]) for r in rows[1:]])
    else:
        doc = json.loads(path.read_text())
        theta = np.asarray(doc["theta"], dtype=float)
        if "spec" in doc:
            file_spec = DnnSpec.from_dict(doc["spec"])
            if spec is not None and file_spec != spec:
                raise ValueError(f"weights file spec {file_spec} differs from {spec}")
            spec = file_spec
    if spec is not None and theta.size != param_count(spec):
        raise ValueError(f"expected {param_count(spec)} weights, found {theta.size}")
    return spec, theta
