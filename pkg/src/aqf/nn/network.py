"""Stacked Bi-LSTM forecaster: forward pass, loss and full backward pass."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ShapeMismatch, StaleCache
from ..preprocess import ScalerParams
from .layers import BiLstmLayer, DenseLayer

# (kind, units, activation) for the published configuration
DEFAULT_LAYERS = (
    ("bilstm", 20, "relu"),
    ("bilstm", 10, "tanh"),
    ("dense", 1024, "relu"),
    ("dense", 2, "sigmoid"),
)


@dataclass
class ForwardCache:
    version: int
    layer_caches: list
    seq_len: int
    batched: bool


class BiLstmNetwork:
    """Bi-LSTM layers followed by dense layers.

    The recurrent layers map ``(B, T, F)`` to ``(B, T, 2H)``; the first dense
    layer reads only the last time step of the final recurrent layer.

    Parameters
    ----------
    layers : list
        :class:`BiLstmLayer` instances followed by :class:`DenseLayer` instances.
    lookback : int
        Window length the network was built for.
    features : sequence of str
        Input column order.
    scaler : ScalerParams, optional
        Training-set scaler, embedded so the model is self-contained.
    seed : int
        Seed used for initialization, kept for provenance.
    """

    def __init__(self, layers, lookback: int, features, scaler: ScalerParams | None = None, seed: int = 0):
        self.layers = list(layers)
        self.lookback = int(lookback)
        self.features = tuple(features)
        self.scaler = scaler
        self.seed = int(seed)
        self.version = 0
        self._check_chain()

    @classmethod
    def build(cls, features, lookback: int, layers=DEFAULT_LAYERS, seed: int = 0, scaler=None) -> "BiLstmNetwork":
        rng = np.random.default_rng(seed)
        built = []
        width = len(tuple(features))
        for kind, units, activation in layers:
            if kind == "bilstm":
                layer = BiLstmLayer.init(rng, width, units, activation)
            elif kind == "dense":
                layer = DenseLayer.init(rng, width, units, activation)
            else:
                raise ValueError(f"unknown layer kind {kind!r}")
            built.append(layer)
            width = layer.n_outputs
        return cls(built, lookback, features, scaler, seed)

    def _check_chain(self) -> None:
        kinds = [layer.kind for layer in self.layers]
        n_rec = kinds.count("bilstm")
        if n_rec == 0 or kinds[:n_rec] != ["bilstm"] * n_rec or "bilstm" in kinds[n_rec:]:
            raise ShapeMismatch("network must be one or more bilstm layers followed by dense layers")
        width = len(self.features)
        for k, layer in enumerate(self.layers):
            if layer.n_inputs != width:
                raise ShapeMismatch(f"layer {k} expects {layer.n_inputs} inputs but receives {width}")
            width = layer.n_outputs

    @property
    def n_outputs(self) -> int:
        return self.layers[-1].n_outputs

    def architecture(self) -> dict:
        return {
            "lookback": self.lookback,
            "features": list(self.features),
            "layers": [layer.config() for layer in self.layers],
        }

    def parameters(self) -> dict[str, np.ndarray]:
        """Live parameter arrays keyed ``"<layer>.<name>"`` (updates are in place)."""
        out = {}
        for k, layer in enumerate(self.layers):
            for name, arr in layer.params().items():
                out[f"{k}.{name}"] = arr
        return out

    def mark_updated(self) -> None:
        self.version += 1

    def forward(self, X):
        """Forward pass over a window ``(L, F)`` or a batch ``(B, L, F)``.

        Returns the scaled predictions, ``(2,)`` or ``(B, 2)``, and a cache for
        :meth:`backward`.
        """
        X = np.asarray(X, dtype=np.float64)
        batched = X.ndim == 3
        if not batched:
            X = X[None]
        if X.ndim != 3 or X.shape[2] != len(self.features):
            raise ShapeMismatch(f"expected windows with {len(self.features)} features, got shape {X.shape}")
        caches = []
        h = X
        for layer in self.layers:
            if layer.kind == "dense" and h.ndim == 3:
                h = h[:, -1]
            h, cache = layer.forward(h)
            caches.append(cache)
        fc = ForwardCache(self.version, caches, X.shape[1], batched)
        return (h if batched else h[0]), fc

    def predict_scaled(self, X) -> np.ndarray:
        return self.forward(X)[0]

    def backward(self, cache: ForwardCache, d_out) -> dict[str, np.ndarray]:
        """Gradients of the loss for every parameter, given dLoss/dOutput."""
        if cache.version != self.version:
            raise StaleCache("parameters changed since this forward pass")
        d = np.asarray(d_out, dtype=np.float64)
        if not cache.batched:
            d = d[None]
        grads = {}
        for k in range(len(self.layers) - 1, -1, -1):
            layer = self.layers[k]
            if layer.kind == "bilstm" and d.ndim == 2:
                seq = np.zeros((d.shape[0], cache.seq_len, d.shape[1]))
                seq[:, -1] = d
                d = seq
            d, g = layer.backward(d, cache.layer_caches[k])
            for name, arr in g.items():
                grads[f"{k}.{name}"] = arr
        return grads


def network_forward(net: BiLstmNetwork, window):
    return net.forward(window)


def mse_loss(predictions, targets) -> tuple[float, np.ndarray]:
    """Mean squared error over every entry and its gradient ``2 (p - y) / N``."""
    p = np.asarray(predictions, dtype=np.float64)
    y = np.asarray(targets, dtype=np.float64)
    if p.shape != y.shape:
        raise ShapeMismatch(f"predictions {p.shape} vs targets {y.shape}")
    err = p - y
    return float(np.mean(err * err)), 2.0 * err / err.size
