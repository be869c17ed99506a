"""Dense layers, their stochastic variants, and Gaussian output heads.

Stochastic layers take an explicit ``mode`` argument: ``"deterministic"``
passes are pure functions of the input, ``"stochastic"`` passes draw from the
caller's RngStream. Dropout uses the inverted convention (survivors scaled by
1/(1-p) at sample time), so deterministic mode needs no rescaling and the
stochastic expectation matches the deterministic output for linear paths.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .rng import RngStream
from .tensor import (Tensor, _as_tensor, add, gaussian_noise, matmul, mul,
                     relu, softplus, transpose)

__all__ = [
    "SIGMA_FLOOR", "ACTIVATIONS", "MODES",
    "DenseLayer", "McDropout", "DropConnectDense", "FlipoutDense",
    "GaussianRegressionHead", "GaussianLogitHead",
    "dense", "dropconnect_dense", "flipout_dense",
    "dense_forward", "mc_dropout_forward", "dropconnect_forward",
    "flipout_forward", "regression_head_forward", "logit_head_forward",
    "layer_parameters",
]

# added to every head std/variance output; keeps the NLL's 1/sigma^2 finite
SIGMA_FLOOR = 1e-6

# softplus(rho) ~= 1e-3 at init keeps early Flipout passes near-deterministic
_FLIPOUT_RHO_INIT = math.log(math.expm1(1e-3))

ACTIVATIONS = ("linear", "relu", "softplus")
MODES = ("deterministic", "stochastic")


def _check_mode(mode: str) -> None:
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")


def _check_p(p: float) -> None:
    if not 0.0 <= p < 1.0:
        raise ValueError(f"drop probability must lie in [0, 1), got {p}")


def _activate(name: str, t: Tensor) -> Tensor:
    if name == "linear":
        return t
    if name == "relu":
        return relu(t)
    if name == "softplus":
        return softplus(t)
    raise ValueError(f"activation must be one of {ACTIVATIONS}, got {name!r}")


def _uniform_init(rng: RngStream, shape: tuple[int, ...], fan_in: int) -> Tensor:
    bound = 1.0 / math.sqrt(fan_in)
    return Tensor((rng.uniform(shape) * 2.0 - 1.0) * bound, requires_grad=True)


@dataclass
class DenseLayer:
    weights: Tensor  # [fan_out, fan_in]
    bias: Tensor     # [fan_out]
    activation: str = "linear"

    def __post_init__(self) -> None:
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")
        out_w, in_w = self.weights.shape
        if self.bias.shape != (out_w,):
            raise ValueError(
                f"bias shape {self.bias.shape} does not match fan-out {out_w}")


@dataclass
class McDropout:
    p: float

    def __post_init__(self) -> None:
        _check_p(self.p)


@dataclass
class DropConnectDense(DenseLayer):
    p: float = 0.10

    def __post_init__(self) -> None:
        super().__post_init__()
        _check_p(self.p)


@dataclass
class FlipoutDense:
    """Gaussian-weight dense layer with rank-one sign decorrelation.

    Weights are N(weight_mean, softplus(weight_rho)^2) elementwise; the bias
    is a deterministic vector with no distribution. There is no prior or KL
    term anywhere, so rho is trained by the task loss alone.
    """

    weight_mean: Tensor  # [fan_out, fan_in]
    weight_rho: Tensor   # [fan_out, fan_in]
    bias: Tensor         # [fan_out]
    activation: str = "linear"

    def __post_init__(self) -> None:
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")
        if self.weight_rho.shape != self.weight_mean.shape:
            raise ValueError("weight_rho shape must match weight_mean")


def dense(fan_in: int, fan_out: int, activation: str, rng: RngStream) -> DenseLayer:
    return DenseLayer(weights=_uniform_init(rng, (fan_out, fan_in), fan_in),
                      bias=_uniform_init(rng, (fan_out,), fan_in),
                      activation=activation)


def dropconnect_dense(fan_in: int, fan_out: int, activation: str, p: float,
                      rng: RngStream) -> DropConnectDense:
    return DropConnectDense(weights=_uniform_init(rng, (fan_out, fan_in), fan_in),
                            bias=_uniform_init(rng, (fan_out,), fan_in),
                            activation=activation, p=p)


def flipout_dense(fan_in: int, fan_out: int, activation: str,
                  rng: RngStream) -> FlipoutDense:
    rho = Tensor(np.full((fan_out, fan_in), _FLIPOUT_RHO_INIT),
                 requires_grad=True)
    return FlipoutDense(weight_mean=_uniform_init(rng, (fan_out, fan_in), fan_in),
                        weight_rho=rho,
                        bias=_uniform_init(rng, (fan_out,), fan_in),
                        activation=activation)


def dense_forward(layer: DenseLayer, x) -> Tensor:
    x = _as_tensor(x)
    z = add(matmul(x, transpose(layer.weights)), layer.bias)
    return _activate(layer.activation, z)


def mc_dropout_forward(p: float, x, mode: str, rng: RngStream | None) -> Tensor:
    _check_mode(mode)
    _check_p(p)
    x = _as_tensor(x)
    if mode == "deterministic":
        return x
    keep = (rng.uniform(x.shape) >= p).astype(np.float64) / (1.0 - p)
    return mul(x, Tensor(keep))


def dropconnect_forward(layer: DropConnectDense, x, mode: str,
                        rng: RngStream | None) -> Tensor:
    _check_mode(mode)
    x = _as_tensor(x)
    if mode == "deterministic":
        return dense_forward(layer, x)
    keep = (rng.uniform(layer.weights.shape) >= layer.p).astype(np.float64)
    masked = mul(layer.weights, Tensor(keep / (1.0 - layer.p)))
    z = add(matmul(x, transpose(masked)), layer.bias)
    return _activate(layer.activation, z)


def flipout_forward(layer: FlipoutDense, x, mode: str,
                    rng: RngStream | None) -> Tensor:
    """One pass of the flipout estimator over a batch.

    base = x W_mean^T + b. In stochastic mode a single Gaussian perturbation
    matrix E is drawn for the whole batch and decorrelated per example by
    sign vectors s (input side) and r (output side):

        output = base + ((x * s) (sigma * E)^T) * r

    Draw order is fixed (E, then s, then r) so a pass is reproducible from
    its stream. The perturbation is odd in the signs, hence zero-mean.
    """
    _check_mode(mode)
    x = _as_tensor(x)
    base = add(matmul(x, transpose(layer.weight_mean)), layer.bias)
    if mode == "deterministic":
        return _activate(layer.activation, base)
    n_batch = x.shape[0]
    fan_out, fan_in = layer.weight_mean.shape
    sigma = softplus(layer.weight_rho)
    noise = gaussian_noise((fan_out, fan_in), rng)
    s = Tensor(rng.rademacher((n_batch, fan_in)))
    r = Tensor(rng.rademacher((n_batch, fan_out)))
    perturbation = mul(matmul(mul(x, s), transpose(mul(sigma, noise))), r)
    return _activate(layer.activation, add(base, perturbation))


@dataclass
class GaussianRegressionHead:
    mean_layer: DenseLayer  # 1 unit, linear
    std_layer: DenseLayer   # 1 unit, softplus


@dataclass
class GaussianLogitHead:
    mean_layer: DenseLayer  # C units, linear
    var_layer: DenseLayer   # C units, softplus


def regression_head_forward(head: GaussianRegressionHead,
                            features) -> tuple[Tensor, Tensor]:
    """Predicted mean and standard deviation, floored away from zero."""
    mu = dense_forward(head.mean_layer, features)
    sigma = add(dense_forward(head.std_layer, features), SIGMA_FLOOR)
    return mu, sigma


def logit_head_forward(head: GaussianLogitHead,
                       features) -> tuple[Tensor, Tensor]:
    """Per-class logit mean and logit variance (floored away from zero)."""
    mu = dense_forward(head.mean_layer, features)
    var = add(dense_forward(head.var_layer, features), SIGMA_FLOOR)
    return mu, var


def layer_parameters(layer) -> list[Tensor]:
    if isinstance(layer, FlipoutDense):
        return [layer.weight_mean, layer.weight_rho, layer.bias]
    if isinstance(layer, DenseLayer):  # covers DropConnectDense
        return [layer.weights, layer.bias]
    if isinstance(layer, McDropout):
        return []
    if isinstance(layer, (GaussianRegressionHead, GaussianLogitHead)):
        second = getattr(layer, "std_layer", None) or layer.var_layer
        return layer_parameters(layer.mean_layer) + layer_parameters(second)
    raise TypeError(f"unknown layer type {type(layer).__name__}")
