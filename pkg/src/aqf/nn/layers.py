"""LSTM cells, bidirectional LSTM layers and dense layers with manual BPTT.

Gate blocks in every stacked weight matrix are ordered
``[input | forget | candidate | output]``.  ``W_x`` has shape ``(4H, F)``,
``W_h`` has shape ``(4H, H)`` and ``b`` has shape ``(4H,)``.  Batched inputs
are ``(B, T, F)``; all arithmetic is float64.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import EmptySequence, NonFiniteValue, ShapeMismatch


def sigmoid(x):
    # tanh form never overflows
    return 0.5 * (1.0 + np.tanh(0.5 * np.asarray(x)))


def _relu(x):
    return np.maximum(x, 0.0)


def _identity(x):
    return x


# derivative expressed through (pre-activation, activation output)
ACTIVATIONS = {
    "tanh": (np.tanh, lambda z, a: 1.0 - a * a),
    "relu": (_relu, lambda z, a: (z > 0).astype(z.dtype)),
    "sigmoid": (sigmoid, lambda z, a: a * (1.0 - a)),
    "identity": (_identity, lambda z, a: np.ones_like(z)),
}


def _activation(name: str):
    try:
        return ACTIVATIONS[name]
    except KeyError:
        raise ValueError(f"unknown activation {name!r}; choose from {sorted(ACTIVATIONS)}") from None


def glorot_uniform(rng: np.random.Generator, fan_out: int, fan_in: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_out, fan_in))


@dataclass
class LstmCellParams:
    W_x: np.ndarray
    W_h: np.ndarray
    b: np.ndarray

    @property
    def hidden(self) -> int:
        return self.W_h.shape[1]

    @property
    def n_inputs(self) -> int:
        return self.W_x.shape[1]

    @classmethod
    def init(cls, rng: np.random.Generator, n_inputs: int, hidden: int, forget_bias: float = 1.0):
        W_x = glorot_uniform(rng, 4 * hidden, n_inputs)
        W_h = glorot_uniform(rng, 4 * hidden, hidden)
        b = np.zeros(4 * hidden)
        b[hidden : 2 * hidden] = forget_bias
        return cls(W_x, W_h, b)

    @classmethod
    def zeros(cls, n_inputs: int, hidden: int):
        return cls(np.zeros((4 * hidden, n_inputs)), np.zeros((4 * hidden, hidden)), np.zeros(4 * hidden))

    def arrays(self) -> dict[str, np.ndarray]:
        return {"W_x": self.W_x, "W_h": self.W_h, "b": self.b}

    def check(self) -> None:
        H = self.hidden
        if self.W_h.shape != (4 * H, H) or self.W_x.shape[0] != 4 * H or self.b.shape != (4 * H,):
            raise ShapeMismatch(
                f"inconsistent LSTM shapes W_x{self.W_x.shape} W_h{self.W_h.shape} b{self.b.shape}"
            )
        for name, arr in self.arrays().items():
            if not np.all(np.isfinite(arr)):
                raise NonFiniteValue(f"LSTM parameter {name} has non-finite entries")


def lstm_cell_forward(params: LstmCellParams, x_t, h_prev, c_prev, activation: str = "tanh"):
    """One LSTM step.

    Returns ``(h_t, c_t, cache)``; the cache holds the gate values and the
    pre-activation of the candidate needed for backpropagation.
    """
    act, _ = _activation(activation)
    x_t, h_prev, c_prev = (np.asarray(a, dtype=np.float64) for a in (x_t, h_prev, c_prev))
    H = params.hidden
    if x_t.shape[-1] != params.n_inputs or h_prev.shape[-1] != H or c_prev.shape[-1] != H:
        raise ShapeMismatch("x_t, h_prev or c_prev does not match the cell dimensions")
    z = x_t @ params.W_x.T + h_prev @ params.W_h.T + params.b
    i = sigmoid(z[..., :H])
    f = sigmoid(z[..., H : 2 * H])
    zg = z[..., 2 * H : 3 * H]
    g = act(zg)
    o = sigmoid(z[..., 3 * H :])
    c_t = f * c_prev + i * g
    ac = act(c_t)
    h_t = o * ac
    if not (np.all(np.isfinite(h_t)) and np.all(np.isfinite(c_t))):
        raise NonFiniteValue("LSTM state became non-finite")
    cache = {"i": i, "f": f, "g": g, "o": o, "zg": zg, "c_prev": c_prev, "c": c_t, "ac": ac}
    return h_t, c_t, cache


@dataclass
class _SeqCache:
    X: np.ndarray
    h_prev: np.ndarray
    c_prev: np.ndarray
    gates: np.ndarray  # (B, T, 4H): i, f, g, o after activation
    zg: np.ndarray
    c: np.ndarray
    ac: np.ndarray


def lstm_sequence_forward(params: LstmCellParams, X: np.ndarray, activation: str = "tanh"):
    """Scan a cell over ``X`` of shape ``(B, T, F)`` from zero state.

    The input projection for all steps is computed in one product; only the
    recurrent part runs inside the time loop.
    """
    act, _ = _activation(activation)
    B, T, _ = X.shape
    H = params.hidden
    Zx = X @ params.W_x.T + params.b
    W_hT = params.W_h.T

    hs = np.empty((B, T + 1, H))
    cs = np.empty((B, T + 1, H))
    hs[:, 0] = 0.0
    cs[:, 0] = 0.0
    gates = np.empty((B, T, 4 * H))
    zgs = np.empty((B, T, H))
    acs = np.empty((B, T, H))
    for t in range(T):
        z = Zx[:, t] + hs[:, t] @ W_hT
        # sigmoid over all four blocks, then overwrite the candidate block
        s = gates[:, t]
        s[:] = sigmoid(z)
        zg = z[:, 2 * H : 3 * H]
        s[:, 2 * H : 3 * H] = act(zg)
        c = s[:, H : 2 * H] * cs[:, t] + s[:, :H] * s[:, 2 * H : 3 * H]
        ac = act(c)
        hs[:, t + 1] = s[:, 3 * H :] * ac
        cs[:, t + 1] = c
        zgs[:, t] = zg
        acs[:, t] = ac
    cache = _SeqCache(X, hs[:, :-1], cs[:, :-1], gates, zgs, cs[:, 1:], acs)
    return hs[:, 1:], cache


def lstm_sequence_backward(params: LstmCellParams, dH: np.ndarray, cache: _SeqCache, activation: str = "tanh"):
    """Backpropagation through time for :func:`lstm_sequence_forward`.

    ``dH`` is the loss gradient with respect to every output state.  Returns
    ``(dX, grads)`` with ``grads`` keyed like :meth:`LstmCellParams.arrays`.
    """
    _, dact = _activation(activation)
    B, T, H = dH.shape
    dZ = np.empty((B, T, 4 * H))
    dh_next = np.zeros((B, H))
    dc_next = np.zeros((B, H))
    W_h = params.W_h
    g_all = cache.gates
    for t in range(T - 1, -1, -1):
        i = g_all[:, t, :H]
        f = g_all[:, t, H : 2 * H]
        g = g_all[:, t, 2 * H : 3 * H]
        o = g_all[:, t, 3 * H :]
        ac = cache.ac[:, t]
        dh = dH[:, t] + dh_next
        dc = dh * o * dact(cache.c[:, t], ac) + dc_next
        dZ[:, t, :H] = dc * g * i * (1.0 - i)
        dZ[:, t, H : 2 * H] = dc * cache.c_prev[:, t] * f * (1.0 - f)
        dZ[:, t, 2 * H : 3 * H] = dc * i * dact(cache.zg[:, t], g)
        dZ[:, t, 3 * H :] = dh * ac * o * (1.0 - o)
        dc_next = dc * f
        dh_next = dZ[:, t] @ W_h
    grads = {
        "W_x": np.einsum("btk,btf->kf", dZ, cache.X),
        "W_h": np.einsum("btk,bth->kh", dZ, cache.h_prev),
        "b": dZ.sum(axis=(0, 1)),
    }
    return dZ @ params.W_x, grads


class BiLstmLayer:
    """Forward and backward LSTM cells whose states are concatenated per step."""

    kind = "bilstm"

    def __init__(self, forward_cell: LstmCellParams, backward_cell: LstmCellParams, activation: str = "tanh"):
        if forward_cell.W_x.shape != backward_cell.W_x.shape or forward_cell.W_h.shape != backward_cell.W_h.shape:
            raise ShapeMismatch("forward and backward cells must have identical shapes")
        _activation(activation)
        self.forward_cell = forward_cell
        self.backward_cell = backward_cell
        self.activation = activation

    @classmethod
    def init(cls, rng, n_inputs: int, hidden: int, activation: str = "tanh"):
        fwd = LstmCellParams.init(rng, n_inputs, hidden)
        bwd = LstmCellParams.init(rng, n_inputs, hidden)
        return cls(fwd, bwd, activation)

    @property
    def hidden(self) -> int:
        return self.forward_cell.hidden

    @property
    def n_inputs(self) -> int:
        return self.forward_cell.n_inputs

    @property
    def n_outputs(self) -> int:
        return 2 * self.hidden

    def params(self) -> dict[str, np.ndarray]:
        out = {f"forward.{k}": v for k, v in self.forward_cell.arrays().items()}
        out.update({f"backward.{k}": v for k, v in self.backward_cell.arrays().items()})
        return out

    def config(self) -> dict:
        return {"kind": self.kind, "hidden": self.hidden, "activation": self.activation}

    def forward(self, X: np.ndarray):
        if X.shape[1] == 0:
            raise EmptySequence("bidirectional LSTM needs at least one time step")
        if X.shape[2] != self.n_inputs:
            raise ShapeMismatch(f"layer expects {self.n_inputs} inputs per step, got {X.shape[2]}")
        Hf, cf = lstm_sequence_forward(self.forward_cell, X, self.activation)
        Hr, cr = lstm_sequence_forward(self.backward_cell, X[:, ::-1], self.activation)
        return np.concatenate([Hf, Hr[:, ::-1]], axis=2), (cf, cr)

    def backward(self, dOut: np.ndarray, cache):
        cf, cr = cache
        H = self.hidden
        dXf, gf = lstm_sequence_backward(self.forward_cell, dOut[:, :, :H], cf, self.activation)
        dXr, gr = lstm_sequence_backward(
            self.backward_cell, np.ascontiguousarray(dOut[:, ::-1, H:]), cr, self.activation
        )
        grads = {f"forward.{k}": v for k, v in gf.items()}
        grads.update({f"backward.{k}": v for k, v in gr.items()})
        return dXf + dXr[:, ::-1], grads


def bilstm_forward(layer: BiLstmLayer, sequence) -> np.ndarray:
    """Run a layer over one ``(T, F)`` sequence; returns ``(T, 2H)``."""
    X = np.asarray(sequence, dtype=np.float64)
    if X.ndim != 2:
        raise ShapeMismatch(f"expected a (T, F) sequence, got shape {X.shape}")
    if X.shape[0] == 0:
        raise EmptySequence("sequence has no time steps")
    out, _ = layer.forward(X[None])
    return out[0]


class DenseLayer:
    """``g(W x + b)`` with ``W`` of shape ``(out, in)``."""

    kind = "dense"

    def __init__(self, W: np.ndarray, b: np.ndarray, activation: str = "identity"):
        if b.shape != (W.shape[0],):
            raise ShapeMismatch(f"bias {b.shape} does not match weight {W.shape}")
        _activation(activation)
        self.W = W
        self.b = b
        self.activation = activation

    @classmethod
    def init(cls, rng, n_inputs: int, units: int, activation: str = "identity"):
        return cls(glorot_uniform(rng, units, n_inputs), np.zeros(units), activation)

    @property
    def hidden(self) -> int:
        return self.W.shape[0]

    @property
    def n_inputs(self) -> int:
        return self.W.shape[1]

    @property
    def n_outputs(self) -> int:
        return self.W.shape[0]

    def params(self) -> dict[str, np.ndarray]:
        return {"W": self.W, "b": self.b}

    def config(self) -> dict:
        return {"kind": self.kind, "hidden": self.hidden, "activation": self.activation}

    def forward(self, x: np.ndarray):
        if x.shape[-1] != self.n_inputs:
            raise ShapeMismatch(f"dense layer expects {self.n_inputs} inputs, got {x.shape[-1]}")
        act, _ = _activation(self.activation)
        z = x @ self.W.T + self.b
        a = act(z)
        return a, (x, z, a)

    def backward(self, dOut: np.ndarray, cache):
        x, z, a = cache
        _, dact = _activation(self.activation)
        dz = dOut * dact(z, a)
        return dz @ self.W, {"W": dz.T @ x, "b": dz.sum(axis=0)}
