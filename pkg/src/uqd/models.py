"""Network assembly for the regression and classification tasks, plus
flat-binary parameter serialization.

A model is a trunk of (possibly stochastic) layers followed by a two-layer
Gaussian head. The trunk layout per uncertainty method follows the reference
architectures: two hidden layers of width 32 for regression and 256 for
classification, ReLU throughout, with dropout placed after each hidden dense
layer for regression and before each for classification.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .layers import (DenseLayer, DropConnectDense, FlipoutDense,
                     GaussianLogitHead, GaussianRegressionHead, McDropout,
                     dense, dense_forward, dropconnect_dense,
                     dropconnect_forward, flipout_dense, flipout_forward,
                     layer_parameters, logit_head_forward, mc_dropout_forward,
                     regression_head_forward)
from .rng import RngStream
from .tensor import Tensor, _as_tensor

__all__ = [
    "Model", "METHOD_KINDS", "build_model",
    "build_regression_model", "build_classification_model",
    "save_model", "load_model",
]

METHOD_KINDS = ("baseline", "mc_dropout", "mc_dropconnect", "flipout",
                "ensemble")

STOCHASTIC_KINDS = ("mc_dropout", "mc_dropconnect", "flipout")


@dataclass
class Model:
    task: str     # "regression" | "classification"
    method: str   # one of METHOD_KINDS
    trunk: list
    head: GaussianRegressionHead | GaussianLogitHead

    def forward(self, x, mode: str, rng: RngStream | None = None
                ) -> tuple[Tensor, Tensor]:
        """Run the trunk and head.

        Returns (mu, sigma) for regression and (mu_logits, var_logits) for
        classification. Stochastic mode requires an RngStream.
        """
        h = _as_tensor(x)
        for layer in self.trunk:
            if isinstance(layer, FlipoutDense):
                h = flipout_forward(layer, h, mode, rng)
            elif isinstance(layer, DropConnectDense):
                h = dropconnect_forward(layer, h, mode, rng)
            elif isinstance(layer, DenseLayer):
                h = dense_forward(layer, h)
            elif isinstance(layer, McDropout):
                h = mc_dropout_forward(layer.p, h, mode, rng)
            else:
                raise TypeError(f"unknown trunk layer {type(layer).__name__}")
        if self.task == "regression":
            return regression_head_forward(self.head, h)
        return logit_head_forward(self.head, h)

    def parameters(self) -> list[Tensor]:
        params: list[Tensor] = []
        for layer in self.trunk:
            params.extend(layer_parameters(layer))
        params.extend(layer_parameters(self.head))
        return params


def build_regression_model(method: str, rng: RngStream, in_dim: int = 1,
                           hidden: int = 32, dropout_p: float = 0.25,
                           dropconnect_p: float = 0.10) -> Model:
    trunk = _build_trunk(method, rng, in_dim, hidden, dropout_p,
                         dropconnect_p, dropout_first=False)
    head = GaussianRegressionHead(
        mean_layer=dense(hidden, 1, "linear", rng),
        std_layer=dense(hidden, 1, "softplus", rng))
    return Model(task="regression", method=method, trunk=trunk, head=head)


def build_classification_model(method: str, rng: RngStream, in_dim: int = 2,
                               hidden: int = 256, n_classes: int = 8,
                               dropout_p: float = 0.25,
                               dropconnect_p: float = 0.10) -> Model:
    trunk = _build_trunk(method, rng, in_dim, hidden, dropout_p,
                         dropconnect_p, dropout_first=True)
    head = GaussianLogitHead(
        mean_layer=dense(hidden, n_classes, "linear", rng),
        var_layer=dense(hidden, n_classes, "softplus", rng))
    return Model(task="classification", method=method, trunk=trunk, head=head)


def build_model(task: str, method: str, rng: RngStream, **kwargs) -> Model:
    if method not in METHOD_KINDS:
        raise ValueError(f"method must be one of {METHOD_KINDS}, got {method!r}")
    if task == "regression":
        return build_regression_model(method, rng, **kwargs)
    if task == "classification":
        return build_classification_model(method, rng, **kwargs)
    raise ValueError(f"task must be 'regression' or 'classification', got {task!r}")


def _build_trunk(method, rng, in_dim, hidden, dropout_p, dropconnect_p,
                 dropout_first):
    dims = ((in_dim, hidden), (hidden, hidden))
    if method in ("baseline", "ensemble"):
        return [dense(i, o, "relu", rng) for i, o in dims]
    if method == "mc_dropout":
        trunk = []
        for i, o in dims:
            block = [McDropout(dropout_p), dense(i, o, "relu", rng)]
            trunk.extend(block if dropout_first else reversed(block))
        return trunk
    if method == "mc_dropconnect":
        return [dropconnect_dense(i, o, "relu", dropconnect_p, rng)
                for i, o in dims]
    if method == "flipout":
        return [flipout_dense(i, o, "relu", rng) for i, o in dims]
    raise ValueError(f"unknown method {method!r}")


# --- flat binary serialization -------------------------------------------
#
# header:  magic "UQD1", then uint32 record count
# record:  uint8 kind, uint8 activation, float64 drop probability,
#          uint8 array count, then per array: uint8 ndim, uint32 dims,
#          raw float64 values
# all integers and floats little-endian; head layers are the final records

_MAGIC = b"UQD1"
_KIND_TAGS = {"dense": 1, "dropout": 2, "dropconnect": 3, "flipout": 4}
_KIND_NAMES = {v: k for k, v in _KIND_TAGS.items()}
_ACT_CODES = {"linear": 0, "relu": 1, "softplus": 2}
_ACT_NAMES = {v: k for k, v in _ACT_CODES.items()}


def _layer_record(layer) -> bytes:
    if isinstance(layer, FlipoutDense):
        return _pack_record(_KIND_TAGS["flipout"], layer.activation, 0.0,
                            [layer.weight_mean, layer.weight_rho, layer.bias])
    if isinstance(layer, DropConnectDense):
        return _pack_record(_KIND_TAGS["dropconnect"], layer.activation,
                            layer.p, [layer.weights, layer.bias])
    if isinstance(layer, DenseLayer):
        return _pack_record(_KIND_TAGS["dense"], layer.activation, 0.0,
                            [layer.weights, layer.bias])
    if isinstance(layer, McDropout):
        return _pack_record(_KIND_TAGS["dropout"], "linear", layer.p, [])
    raise TypeError(f"cannot serialize layer {type(layer).__name__}")


def _pack_record(kind: int, activation: str, p: float,
                 arrays: list[Tensor]) -> bytes:
    parts = [struct.pack("<BBdB", kind, _ACT_CODES[activation], p,
                         len(arrays))]
    for t in arrays:
        a = np.ascontiguousarray(t.data, dtype="<f8")
        parts.append(struct.pack("<B", a.ndim))
        parts.append(struct.pack(f"<{a.ndim}I", *a.shape))
        parts.append(a.tobytes())
    return b"".join(parts)


class _Reader:
    def __init__(self, blob: bytes) -> None:
        self.blob = blob
        self.pos = 0

    def take(self, fmt: str):
        size = struct.calcsize(fmt)
        vals = struct.unpack_from(fmt, self.blob, self.pos)
        self.pos += size
        return vals

    def take_array(self) -> np.ndarray:
        (ndim,) = self.take("<B")
        shape = self.take(f"<{ndim}I")
        count = int(np.prod(shape)) if ndim else 1
        arr = np.frombuffer(self.blob, dtype="<f8", count=count,
                            offset=self.pos).reshape(shape)
        self.pos += count * 8
        return arr.astype(np.float64)


def save_model(model: Model, path) -> None:
    records = [_layer_record(layer) for layer in model.trunk]
    second = (model.head.std_layer if model.task == "regression"
              else model.head.var_layer)
    records.append(_layer_record(model.head.mean_layer))
    records.append(_layer_record(second))
    blob = _MAGIC + struct.pack("<I", len(records)) + b"".join(records)
    Path(path).write_bytes(blob)


def load_model(path, task: str, method: str) -> Model:
    blob = Path(path).read_bytes()
    if blob[:4] != _MAGIC:
        raise ValueError(f"{path}: not a model parameter file (bad magic)")
    reader = _Reader(blob)
    reader.pos = 4
    (count,) = reader.take("<I")
    layers = [_read_layer(reader) for _ in range(count)]
    if count < 2:
        raise ValueError(f"{path}: expected head records, found {count} layers")
    mean_layer, second = layers[-2], layers[-1]
    if task == "regression":
        head = GaussianRegressionHead(mean_layer=mean_layer, std_layer=second)
    else:
        head = GaussianLogitHead(mean_layer=mean_layer, var_layer=second)
    return Model(task=task, method=method, trunk=layers[:-2], head=head)


def _read_layer(reader: _Reader):
    kind, act, p, n_arrays = reader.take("<BBdB")
    arrays = [Tensor(reader.take_array(), requires_grad=True)
              for _ in range(n_arrays)]
    name = _KIND_NAMES.get(kind)
    activation = _ACT_NAMES.get(act)
    if name is None or activation is None:
        raise ValueError(f"corrupt layer record (kind={kind}, act={act})")
    if name == "dense":
        return DenseLayer(weights=arrays[0], bias=arrays[1],
                          activation=activation)
    if name == "dropconnect":
        return DropConnectDense(weights=arrays[0], bias=arrays[1],
                                activation=activation, p=p)
    if name == "flipout":
        return FlipoutDense(weight_mean=arrays[0], weight_rho=arrays[1],
                            bias=arrays[2], activation=activation)
    return McDropout(p=p)
