"""JSON model files.

Layout::

    {"format_version": 1,
     "architecture": {"lookback", "features", "layers": [{"kind", "hidden", "activation"}]},
     "scaler": {"columns", "mins", "maxs"},
     "seed": int,
     "weights": {"<layer>": {"<name>": nested row-major lists}}}

Floats are written with ``repr`` so every value reads back bit-identical.
"""

from __future__ import annotations

import json

import numpy as np

from ..errors import CorruptFile, VersionMismatch
from ..preprocess import ScalerParams
from .layers import BiLstmLayer, DenseLayer, LstmCellParams
from .network import BiLstmNetwork

FORMAT_VERSION = 1


def model_to_dict(net: BiLstmNetwork) -> dict:
    weights = {}
    for k, layer in enumerate(net.layers):
        weights[str(k)] = {name: arr.tolist() for name, arr in layer.params().items()}
    return {
        "format_version": FORMAT_VERSION,
        "architecture": net.architecture(),
        "scaler": net.scaler.to_dict() if net.scaler is not None else None,
        "seed": net.seed,
        "weights": weights,
    }


def dumps_model(net: BiLstmNetwork) -> str:
    return json.dumps(model_to_dict(net), indent=1, allow_nan=False) + "\n"


def save_model(net: BiLstmNetwork, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps_model(net))


def _array(w: dict, name: str) -> np.ndarray:
    arr = np.array(w[name], dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise CorruptFile(f"weight {name} has non-finite entries")
    return arr


def model_from_dict(doc: dict) -> BiLstmNetwork:
    if not isinstance(doc, dict) or "format_version" not in doc:
        raise CorruptFile("model file has no format_version")
    if doc["format_version"] != FORMAT_VERSION:
        raise VersionMismatch(f"model format {doc['format_version']!r}, this build reads {FORMAT_VERSION}")
    try:
        arch = doc["architecture"]
        layers = []
        for k, spec in enumerate(arch["layers"]):
            w = doc["weights"][str(k)]
            if spec["kind"] == "bilstm":
                cells = []
                for side in ("forward", "backward"):
                    cell = LstmCellParams(
                        _array(w, f"{side}.W_x"), _array(w, f"{side}.W_h"), _array(w, f"{side}.b")
                    )
                    cell.check()
                    cells.append(cell)
                layer = BiLstmLayer(cells[0], cells[1], spec["activation"])
            elif spec["kind"] == "dense":
                layer = DenseLayer(_array(w, "W"), _array(w, "b"), spec["activation"])
            else:
                raise CorruptFile(f"unknown layer kind {spec['kind']!r}")
            if layer.hidden != spec["hidden"]:
                raise CorruptFile(f"layer {k} weights disagree with declared size")
            layers.append(layer)
        scaler = ScalerParams.from_dict(doc["scaler"]) if doc.get("scaler") is not None else None
        return BiLstmNetwork(layers, arch["lookback"], arch["features"], scaler, doc["seed"])
    except CorruptFile:
        raise
    except (KeyError, TypeError, ValueError) as err:
        raise CorruptFile(f"malformed model file: {err}") from err
    except Exception as err:  # shape errors from the layer constructors
        raise CorruptFile(f"inconsistent model file: {err}") from err


def load_model(path) -> BiLstmNetwork:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except (json.JSONDecodeError, UnicodeDecodeError) as err:
        raise CorruptFile(f"{path}: not a readable model file ({err})") from err
    return model_from_dict(doc)
