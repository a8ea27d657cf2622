"""Dueling feed-forward Q-network on raw numpy arrays.

Parameters, forward pass, exact backpropagated gradients of the squared TD
error, Adam updates, hard target sync, and a binary checkpoint format.  The
default layout is four shared 300-unit ReLU layers feeding a 200-unit value
branch (scalar head) and a 200-unit advantage branch (one head per action);
the heads are linear and the branches are recombined as

    q_k = V + A_k - mean_j(A_j).

All parameters live in one flat vector; the per-layer weight matrices are
reshaped views into it, so optimizer updates and (de)serialization are plain
vector operations.  Training keeps everything in float32 (the checkpoint
format stores float32), but any float dtype works, which the numerical
tests rely on.
"""

from __future__ import annotations

import io
import json
import math

import numpy as np

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8

_MAGIC = "ADAPTSCHED-QNET"
_FORMAT_VERSION = 1


class CheckpointError(Exception):
    """Checkpoint bytes are malformed or do not match the expected layout."""


class QNetworkParams:
    """All weights, biases, and Adam moment accumulators of the dueling MLP.

    Declaration order (also the flat-vector and checkpoint order): shared
    W/b pairs, value-branch hidden W/b, value head W/b, advantage-branch
    hidden W/b, advantage head W/b.
    """

    def __init__(
        self,
        n_inputs: int,
        n_actions: int = 4,
        hidden: tuple[int, ...] = (300, 300, 300, 300),
        branch: int = 200,
        dtype=np.float32,
        seed: int | None = None,
    ):
        self.n_inputs = int(n_inputs)
        self.n_actions = int(n_actions)
        self.hidden = tuple(int(h) for h in hidden)
        self.branch = int(branch)
        self.dtype = np.dtype(dtype)
        self.seed = seed
        self.adam_steps = 0

        dims = [self.n_inputs, *self.hidden]
        # Weight matrices are stored (fan_out, fan_in) and applied as x @ W.T.
        shapes = [(dims[i + 1], dims[i]) for i in range(len(self.hidden))]
        shapes += [(self.branch, dims[-1]), (1, self.branch)]  # value branch
        shapes += [(self.branch, dims[-1]), (self.n_actions, self.branch)]  # advantage branch
        self.layer_shapes = shapes

        self.size = sum(fo * fi + fo for fo, fi in shapes)
        self.theta = np.zeros(self.size, dtype=self.dtype)
        self.m = np.zeros(self.size, dtype=self.dtype)
        self.v = np.zeros(self.size, dtype=self.dtype)
        self.weights, self.biases = self._views(self.theta)
        self._scratch = np.zeros(self.size, dtype=self.dtype)  # optimizer workspace
        self._grad = np.zeros(self.size, dtype=self.dtype)  # reusable gradient buffer

        rng = np.random.default_rng(seed)
        for w, (fan_out, fan_in) in zip(self.weights, shapes):
            limit = math.sqrt(6.0 / (fan_in + fan_out))
            w[...] = rng.uniform(-limit, limit, size=(fan_out, fan_in))

    def _views(self, flat: np.ndarray):
        """Weight/bias matrices as reshaped views into a flat vector."""
        weights, biases = [], []
        offset = 0
        for fan_out, fan_in in self.layer_shapes:
            weights.append(flat[offset : offset + fan_out * fan_in].reshape(fan_out, fan_in))
            offset += fan_out * fan_in
            biases.append(flat[offset : offset + fan_out])
            offset += fan_out
        return weights, biases

    # Index of the value-branch hidden layer inside weights/biases.
    @property
    def _iv(self) -> int:
        return len(self.hidden)

    def clone(self) -> "QNetworkParams":
        other = QNetworkParams.__new__(QNetworkParams)
        other.n_inputs = self.n_inputs
        other.n_actions = self.n_actions
        other.hidden = self.hidden
        other.branch = self.branch
        other.dtype = self.dtype
        other.seed = self.seed
        other.adam_steps = self.adam_steps
        other.layer_shapes = self.layer_shapes
        other.size = self.size
        other.theta = self.theta.copy()
        other.m = self.m.copy()
        other.v = self.v.copy()
        other.weights, other.biases = other._views(other.theta)
        other._scratch = np.zeros(other.size, dtype=other.dtype)
        other._grad = np.zeros(other.size, dtype=other.dtype)
        return other


def _forward_cached(params: QNetworkParams, X: np.ndarray):
    """Batch forward pass keeping the post-ReLU activations for backprop."""
    iv = params._iv
    acts = [X]
    A = X
    for i in range(len(params.hidden)):
        Z = A @ params.weights[i].T
        Z += params.biases[i]
        np.maximum(Z, 0.0, out=Z)
        A = Z
        acts.append(A)
    Hv = A @ params.weights[iv].T
    Hv += params.biases[iv]
    np.maximum(Hv, 0.0, out=Hv)
    V = Hv @ params.weights[iv + 1].T
    V += params.biases[iv + 1]
    Ha = A @ params.weights[iv + 2].T
    Ha += params.biases[iv + 2]
    np.maximum(Ha, 0.0, out=Ha)
    Adv = Ha @ params.weights[iv + 3].T
    Adv += params.biases[iv + 3]
    Q = V + Adv - Adv.mean(axis=1, keepdims=True)
    return Q, V, Adv, (acts, Hv, Ha)


def _as_batch(params: QNetworkParams, state: np.ndarray) -> np.ndarray:
    x = np.asarray(state, dtype=params.dtype)
    if x.ndim == 1:
        x = x[np.newaxis, :]
    if x.shape[-1] != params.n_inputs:
        raise ValueError(f"state vector has length {x.shape[-1]}, expected {params.n_inputs}")
    if not np.isfinite(x).all():
        raise ValueError("state vector contains non-finite entries")
    return x


def forward(params: QNetworkParams, state: np.ndarray) -> np.ndarray:
    """Per-action long-term reward estimates for one state vector."""
    Q, _, _, _ = _forward_cached(params, _as_batch(params, state))
    return Q[0]


def forward_batch(params: QNetworkParams, states: np.ndarray) -> np.ndarray:
    Q, _, _, _ = _forward_cached(params, _as_batch(params, states))
    return Q


def forward_components(params: QNetworkParams, state: np.ndarray):
    """(q values, state value, advantages) for one state; used by diagnostics."""
    Q, V, Adv, _ = _forward_cached(params, _as_batch(params, state))
    return Q[0], float(V[0, 0]), Adv[0]


def batch_gradients(
    params: QNetworkParams,
    states: np.ndarray,
    actions: np.ndarray,
    targets: np.ndarray,
    sample_weights: np.ndarray | None = None,
    reuse_buffer: bool = False,
):
    """Gradient of the mean squared TD error over a batch.

    Returns (flat gradient aligned with params.theta, per-sample td errors),
    the latter being the target - q(s, a) residuals at the current weights.
    With `reuse_buffer` the gradient lives in a per-network workspace that the
    next call overwrites; the training loop uses this to avoid reallocation.
    """
    X = _as_batch(params, states)
    B = X.shape[0]
    actions = np.asarray(actions, dtype=np.intp)
    targets = np.asarray(targets, dtype=params.dtype)
    iv = params._iv

    Q, V, Adv, (acts, Hv, Ha) = _forward_cached(params, X)
    q_taken = Q[np.arange(B), actions]
    td_errors = targets - q_taken

    grad = params._grad if reuse_buffer else np.zeros(params.size, dtype=params.dtype)
    gw, gb = params._views(grad)

    scale = np.full(B, 2.0 / B, dtype=params.dtype)
    if sample_weights is not None:
        scale = scale * np.asarray(sample_weights, dtype=params.dtype)
    # dC/dq_a per sample; the dueling merge spreads it onto V and A.
    err = (-td_errors * scale)[:, np.newaxis]
    dV = err
    dAdv = err * (-1.0 / params.n_actions)
    dAdv = np.repeat(dAdv, params.n_actions, axis=1)
    dAdv[np.arange(B), actions] += err[:, 0]

    H = acts[-1]

    gw[iv + 1][...] = dV.T @ Hv
    np.sum(dV, axis=0, out=gb[iv + 1])
    dZv = dV @ params.weights[iv + 1]
    dZv *= Hv > 0
    gw[iv][...] = dZv.T @ H
    np.sum(dZv, axis=0, out=gb[iv])

    gw[iv + 3][...] = dAdv.T @ Ha
    np.sum(dAdv, axis=0, out=gb[iv + 3])
    dZa = dAdv @ params.weights[iv + 3]
    dZa *= Ha > 0
    gw[iv + 2][...] = dZa.T @ H
    np.sum(dZa, axis=0, out=gb[iv + 2])

    dA = dZv @ params.weights[iv]
    dA += dZa @ params.weights[iv + 2]
    for i in reversed(range(len(params.hidden))):
        dZ = dA
        dZ *= acts[i + 1] > 0
        gw[i][...] = dZ.T @ acts[i]
        np.sum(dZ, axis=0, out=gb[i])
        if i > 0:
            dA = dZ @ params.weights[i]
    return grad, td_errors


def gradients(params: QNetworkParams, state: np.ndarray, action: int, target: float) -> np.ndarray:
    """Exact flat gradient of (target - q(s, a))^2 for a single sample."""
    grad, _ = batch_gradients(
        params, np.asarray(state)[np.newaxis, :], np.array([action]), np.array([target])
    )
    return grad


def split_gradient(params: QNetworkParams, grad: np.ndarray):
    """View a flat gradient as (weight matrices, bias vectors) per layer."""
    return params._views(grad)


def adam_step(params: QNetworkParams, grad: np.ndarray, lr: float) -> None:
    """One bias-corrected Adam update on the flat parameter vector, in place."""
    params.adam_steps += 1
    t = params.adam_steps
    c1 = 1.0 - ADAM_BETA1**t
    c2 = 1.0 - ADAM_BETA2**t
    m, v, work = params.m, params.v, params._scratch
    np.multiply(grad, 1.0 - ADAM_BETA1, out=work)
    np.multiply(m, ADAM_BETA1, out=m)
    np.add(m, work, out=m)
    np.multiply(grad, grad, out=work)
    np.multiply(work, 1.0 - ADAM_BETA2, out=work)
    np.multiply(v, ADAM_BETA2, out=v)
    np.add(v, work, out=v)
    np.divide(v, c2, out=work)
    np.sqrt(work, out=work)
    np.add(work, ADAM_EPS, out=work)
    np.multiply(work, c1, out=work)
    np.divide(m, work, out=work)
    np.multiply(work, lr, out=work)
    np.subtract(params.theta, work, out=params.theta)


def sync_target(online: QNetworkParams) -> QNetworkParams:
    """Hard update: the target becomes a deep copy of the online network."""
    return online.clone()


def serialize(params: QNetworkParams) -> bytes:
    """Text header plus parameters, then both moment vectors, as little-endian float32."""
    header = {
        "version": _FORMAT_VERSION,
        "n_inputs": params.n_inputs,
        "n_actions": params.n_actions,
        "hidden": list(params.hidden),
        "branch": params.branch,
        "shapes": [list(s) for s in params.layer_shapes],
        "adam_steps": params.adam_steps,
        "seed": params.seed,
    }
    buf = io.BytesIO()
    buf.write(f"{_MAGIC} {_FORMAT_VERSION}\n".encode())
    buf.write((json.dumps(header, sort_keys=True) + "\n---\n").encode())
    for vec in (params.theta, params.m, params.v):
        buf.write(np.ascontiguousarray(vec, dtype="<f4").tobytes())
    return buf.getvalue()


def deserialize(blob: bytes) -> QNetworkParams:
    """Inverse of serialize; raises CheckpointError on any mismatch."""
    sep = b"\n---\n"
    cut = blob.find(sep)
    if cut < 0:
        raise CheckpointError("missing header separator")
    head_lines = blob[:cut].split(b"\n", 1)
    if len(head_lines) != 2 or not head_lines[0].startswith(_MAGIC.encode()):
        raise CheckpointError("bad magic line")
    try:
        version = int(head_lines[0].decode().split()[-1])
        header = json.loads(head_lines[1].decode())
    except (ValueError, UnicodeDecodeError) as exc:
        raise CheckpointError(f"unreadable header: {exc}") from exc
    if version != _FORMAT_VERSION or header.get("version") != _FORMAT_VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}")

    try:
        params = QNetworkParams(
            n_inputs=header["n_inputs"],
            n_actions=header["n_actions"],
            hidden=tuple(header["hidden"]),
            branch=header["branch"],
            dtype=np.float32,
            seed=header.get("seed"),
        )
    except (KeyError, TypeError) as exc:
        raise CheckpointError(f"incomplete header: {exc}") from exc
    if header.get("shapes") != [list(s) for s in params.layer_shapes]:
        raise CheckpointError("layer shapes in header do not match declared sizes")
    params.adam_steps = int(header["adam_steps"])

    payload = blob[cut + len(sep) :]
    if len(payload) != 3 * 4 * params.size:
        raise CheckpointError(f"payload holds {len(payload)} bytes, expected {3 * 4 * params.size}")
    flat = np.frombuffer(payload, dtype="<f4")
    params.theta[...] = flat[: params.size]
    params.m[...] = flat[params.size : 2 * params.size]
    params.v[...] = flat[2 * params.size :]
    return params


def save_checkpoint(params: QNetworkParams, path) -> None:
    with open(path, "wb") as fh:
        fh.write(serialize(params))


def load_checkpoint(path) -> QNetworkParams:
    with open(path, "rb") as fh:
        return deserialize(fh.read())
