"""Uniform sampling interface over the five uncertainty methods.

Every method reduces to the same contract: M forward passes per input, each
yielding a Gaussian prediction. Baseline repeats one deterministic pass,
the stochastic methods (dropout, dropconnect, flipout) run M independent
stochastic passes on streams derived per pass index, and ensembles run one
deterministic pass per member.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .models import METHOD_KINDS, STOCHASTIC_KINDS, Model, load_model, save_model
from .rng import RngStream

__all__ = [
    "UqMethodConfig", "PredictionSamples", "sample_predictions",
    "train_ensemble", "save_models", "load_models", "config_digest",
]


@dataclass
class UqMethodConfig:
    kind: str
    forward_passes: int = 20
    ensemble_size: int = 5
    dropout_p: float = 0.25
    dropconnect_p: float = 0.10

    def __post_init__(self) -> None:
        if self.kind not in METHOD_KINDS:
            raise ValueError(
                f"kind must be one of {METHOD_KINDS}, got {self.kind!r}")
        if self.forward_passes < 1:
            raise ValueError("forward_passes must be >= 1")
        if self.ensemble_size < 1:
            raise ValueError("ensemble_size must be >= 1")


@dataclass
class PredictionSamples:
    """Stacked per-pass Gaussian predictions, pass index first.

    For regression the arrays are [M, B]; for classification [M, B, C].
    Variances are always variances (regression heads emit std, squared here
    at the boundary).
    """

    means: np.ndarray
    variances: np.ndarray

    def __post_init__(self) -> None:
        self.means = np.asarray(self.means, dtype=np.float64)
        self.variances = np.asarray(self.variances, dtype=np.float64)
        if self.means.shape != self.variances.shape:
            raise ValueError("means and variances must have the same shape")
        if self.means.shape[0] < 1:
            raise ValueError("at least one sample is required")
        if np.any(self.variances < 0.0):
            raise ValueError("variances must be non-negative")

    @property
    def n_passes(self) -> int:
        return self.means.shape[0]


def _one_pass(model: Model, x, mode: str, rng) -> tuple[np.ndarray, np.ndarray]:
    mu, second = model.forward(x, mode, rng)
    if model.task == "regression":
        return mu.data[..., 0], np.square(second.data[..., 0])
    return mu.data, second.data


def sample_predictions(model_or_members, x, config: UqMethodConfig,
                       rng: RngStream | None = None) -> PredictionSamples:
    """Collect the M per-pass predictions for a batch of inputs.

    ``model_or_members`` is a single Model, or a list of member Models when
    config.kind is "ensemble". Stochastic passes consume streams derived
    from ``rng`` by pass index, so results are reproducible and independent
    of evaluation order.
    """
    if config.kind == "ensemble":
        members = model_or_members
        if isinstance(members, Model):
            raise ValueError("ensemble config requires a list of member models")
        _check_kinds(members, config.kind)
        passes = [_one_pass(m, x, "deterministic", None) for m in members]
    else:
        model = model_or_members
        if not isinstance(model, Model):
            raise ValueError(f"{config.kind} config requires a single model")
        _check_kinds([model], config.kind)
        if config.kind == "baseline":
            mu, var = _one_pass(model, x, "deterministic", None)
            passes = [(mu, var)] * config.forward_passes
        else:
            passes = [_one_pass(model, x, "stochastic", rng.derive(i))
                      for i in range(config.forward_passes)]
    means = np.stack([p[0] for p in passes])
    variances = np.stack([p[1] for p in passes])
    return PredictionSamples(means=means, variances=variances)


def _check_kinds(models, kind: str) -> None:
    for m in models:
        if m.method != kind:
            raise ValueError(
                f"model was built for method {m.method!r}, config says {kind!r}")


def train_ensemble(base_config, data, count: int, seed: int) -> list[Model]:
    """Train ``count`` independent members with seeds seed + member index.

    Members share the architecture and hyperparameters of ``base_config``;
    only the seed differs, which changes both initialization and batch order.
    """
    from dataclasses import replace

    from .training import train_single_model

    if count < 1:
        raise ValueError("ensemble needs at least one member")
    members = []
    for index in range(count):
        member_config = replace(base_config, seed=seed + index)
        members.append(train_single_model(member_config, data))
    return members


# --- persistence ----------------------------------------------------------
#
# A trained run is a directory: one "UQD1" parameter file per member plus a
# manifest recording the task, method, member count, seeds and the digest of
# the exact training configuration. Non-ensemble methods use the same layout
# with a single member.

_MANIFEST = "manifest.json"


def config_digest(config_text: str) -> str:
    return hashlib.sha256(config_text.encode("utf-8")).hexdigest()


def save_models(members: list[Model], directory, seeds: list[int],
                digest: str) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    files = []
    for index, model in enumerate(members):
        name = f"member_{index:02d}.uqd"
        save_model(model, directory / name)
        files.append(name)
    manifest = {
        "task": members[0].task,
        "method": members[0].method,
        "member_count": len(members),
        "seeds": list(map(int, seeds)),
        "config_digest": digest,
        "files": files,
    }
    (directory / _MANIFEST).write_text(json.dumps(manifest, indent=2) + "\n")


def load_models(directory) -> tuple[list[Model], dict]:
    directory = Path(directory)
    manifest = json.loads((directory / _MANIFEST).read_text())
    members = [load_model(directory / name, manifest["task"],
                          manifest["method"])
               for name in manifest["files"]]
    return members, manifest
