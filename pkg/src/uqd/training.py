"""Adam optimization and the mini-batch training loop for both tasks.

A training run is fully determined by (config, dataset): initialization,
batch shuffling, and every stochastic forward draw come from streams keyed
by the config seed, so repeated runs produce bit-identical parameters.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .datasets import SoftLabelData, ToyRegressionData
from .disentangle import SamplingSoftmaxConfig, sampling_softmax
from .losses import beta_nll, gaussian_nll, soft_cross_entropy
from .methods import UqMethodConfig
from .models import STOCHASTIC_KINDS, Model, build_model
from .rng import RngStream
from .tensor import GradientTape, Tensor, backward

__all__ = [
    "LossConfig", "TrainConfig", "TrainResult", "AdamState",
    "TrainingDiverged", "adam_init", "adam_step", "train",
    "train_single_model", "default_train_config",
]

LOSS_KINDS = ("nll", "beta_nll", "soft_ce")

# stream ids for the independent randomness sources of one run
_STREAM_INIT = 1
_STREAM_SHUFFLE = 2
_STREAM_FORWARD = 3

_TASK_DEFAULTS = {"regression": (700, 32), "classification": (120, 64)}


class TrainingDiverged(RuntimeError):
    """Raised when the loss stops being finite; carries the failing step."""

    def __init__(self, epoch: int, step: int, value: float) -> None:
        super().__init__(
            f"training diverged at epoch {epoch}, step {step}: "
            f"loss = {value!r}")
        self.epoch = epoch
        self.step = step
        self.value = value


@dataclass(frozen=True)
class LossConfig:
    kind: str
    beta: float | None = None

    def __post_init__(self) -> None:
        if self.kind not in LOSS_KINDS:
            raise ValueError(f"loss kind must be one of {LOSS_KINDS}")
        if self.kind == "beta_nll":
            if self.beta is None:
                raise ValueError("beta_nll requires a beta value")
            if not 0.0 <= self.beta <= 1.0:
                raise ValueError("beta must lie in [0, 1]")
        elif self.beta is not None:
            raise ValueError("beta is only meaningful for beta_nll")


@dataclass(frozen=True)
class TrainConfig:
    task: str
    loss: LossConfig
    uq: UqMethodConfig
    epochs: int
    batch_size: int
    learning_rate: float = 0.001
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    seed: int = 0
    softmax_samples: int = 100

    def __post_init__(self) -> None:
        if self.task not in _TASK_DEFAULTS:
            raise ValueError(f"unknown task {self.task!r}")
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size must be >= 1")


def default_train_config(task: str, loss: LossConfig, uq: UqMethodConfig,
                         seed: int = 0, **overrides) -> TrainConfig:
    epochs, batch_size = _TASK_DEFAULTS[task]
    base = dict(task=task, loss=loss, uq=uq, epochs=epochs,
                batch_size=batch_size, seed=seed)
    base.update(overrides)
    return TrainConfig(**base)


@dataclass
class AdamState:
    m: list[np.ndarray]
    v: list[np.ndarray]
    step: int = 0


def adam_init(params: list[Tensor]) -> AdamState:
    return AdamState(m=[np.zeros_like(p.data) for p in params],
                     v=[np.zeros_like(p.data) for p in params])


def adam_step(params: list[Tensor], grads: dict[Tensor, Tensor],
              state: AdamState, lr: float = 0.001, beta1: float = 0.9,
              beta2: float = 0.999, eps: float = 1e-8) -> None:
    """One bias-corrected Adam update, in place on the parameter tensors.

    Parameters absent from ``grads`` (no path to the loss) get gradient 0.
    """
    state.step += 1
    t = state.step
    correction1 = 1.0 - beta1 ** t
    correction2 = 1.0 - beta2 ** t
    for i, p in enumerate(params):
        entry = grads.get(p)
        g = entry.data if entry is not None else np.zeros_like(p.data)
        if g.shape != p.data.shape:
            raise ValueError(
                f"gradient shape {g.shape} does not match parameter "
                f"{p.data.shape}")
        state.m[i] = beta1 * state.m[i] + (1.0 - beta1) * g
        state.v[i] = beta2 * state.v[i] + (1.0 - beta2) * np.square(g)
        m_hat = state.m[i] / correction1
        v_hat = state.v[i] / correction2
        p.data = p.data - lr * m_hat / (np.sqrt(v_hat) + eps)


@dataclass
class TrainResult:
    models: list[Model]
    loss_history: list[float] = field(repr=False)
    config: TrainConfig | None = None

    @property
    def model(self) -> Model:
        if len(self.models) != 1:
            raise ValueError("result holds an ensemble; use .models")
        return self.models[0]


def _batch_inputs(config: TrainConfig, data):
    if config.task == "regression":
        if not isinstance(data, ToyRegressionData):
            raise ValueError("regression config needs ToyRegressionData")
        return data.x_train[:, None], data.y_train[:, None]
    if not isinstance(data, SoftLabelData):
        raise ValueError("classification config needs SoftLabelData")
    return data.inputs, data.labels


def train_single_model(config: TrainConfig, data,
                       history: list[float] | None = None) -> Model:
    """Train one network; the model's method label follows config.uq.kind."""
    x_all, y_all = _batch_inputs(config, data)
    init_rng = RngStream(config.seed, _STREAM_INIT)
    shuffle_rng = RngStream(config.seed, _STREAM_SHUFFLE)
    forward_rng = RngStream(config.seed, _STREAM_FORWARD)
    model = build_model(config.task, config.uq.kind, init_rng,
                        dropout_p=config.uq.dropout_p,
                        dropconnect_p=config.uq.dropconnect_p)
    _run_loop(model, config, x_all, y_all, shuffle_rng, forward_rng, history)
    return model


def _run_loop(model: Model, config: TrainConfig, x_all, y_all,
              shuffle_rng: RngStream, forward_rng: RngStream,
              history: list[float] | None = None) -> None:
    params = model.parameters()
    state = adam_init(params)
    mode = "stochastic" if config.uq.kind in STOCHASTIC_KINDS else "deterministic"
    n = x_all.shape[0]
    ssm_config = SamplingSoftmaxConfig(config.softmax_samples)
    for epoch in range(config.epochs):
        order = shuffle_rng.permutation(n)
        for step, start in enumerate(range(0, n, config.batch_size)):
            idx = order[start:start + config.batch_size]
            xb = Tensor(x_all[idx])
            yb = Tensor(y_all[idx])
            with GradientTape():
                mu, second = model.forward(xb, mode, forward_rng)
                if config.task == "regression":
                    var = second * second
                    if config.loss.kind == "beta_nll":
                        loss = beta_nll(mu, var, yb, config.loss.beta)
                    else:
                        loss = gaussian_nll(mu, var, yb)
                else:
                    probs = sampling_softmax(mu, second, ssm_config,
                                             rng=forward_rng)
                    loss = soft_cross_entropy(probs, yb)
            value = loss.item()
            if not math.isfinite(value):
                raise TrainingDiverged(epoch, step, value)
            grads = backward(loss)
            adam_step(params, grads, state, lr=config.learning_rate,
                      beta1=config.adam_beta1, beta2=config.adam_beta2)
            if history is not None:
                history.append(value)


def train(config: TrainConfig, data) -> TrainResult:
    """Train per the config; ensembles produce one model per member."""
    if config.uq.kind == "ensemble":
        from .methods import train_ensemble

        members = train_ensemble(config, data, config.uq.ensemble_size,
                                 config.seed)
        return TrainResult(models=members, loss_history=[], config=config)
    history: list[float] = []
    model = train_single_model(config, data, history)
    return TrainResult(models=[model], loss_history=history, config=config)
