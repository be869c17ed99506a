r"""Combination of Gaussian prediction samples and the aleatoric/epistemic
split, for regression outputs and classification logits alike, plus the
sampling softmax and the entropy pipeline.

Given M per-pass Gaussians (mu_i, var_i), the mixture they induce has

    mu*   = mean_i mu_i
    var*  = mean_i (var_i + mu_i^2) - mu*^2
          = mean_i var_i  +  (mean_i mu_i^2 - mu*^2)
            \___________/     \______________________/
              aleatoric              epistemic

All moments use the population convention (divide by M); a sample variance
would break the additivity identity above. The same split applies per class
to classification logits, where the three variance channels are pushed
through the sampling softmax to yield comparable probability distributions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .methods import PredictionSamples
from .rng import RngStream
from .tensor import Tensor, _as_tensor, sqrt, softmax

__all__ = [
    "SamplingSoftmaxConfig", "ClassificationDisentangled",
    "combine_gaussian_mixture", "decompose_variance", "disentangle_logits",
    "sampling_softmax", "classification_uncertainty", "entropy",
]


@dataclass(frozen=True)
class SamplingSoftmaxConfig:
    n_samples: int = 100

    def __post_init__(self) -> None:
        if self.n_samples < 1:
            raise ValueError("n_samples must be >= 1")


@dataclass
class ClassificationDisentangled:
    """Per-input uncertainty split for classification.

    Logit-space moments plus the three probability distributions obtained by
    sampling-softmaxing the aleatoric, epistemic, and summed logit variances,
    with their Shannon entropies (natural log). Arrays are [C] for a single
    input or [B, C] (entropies [B]) for a batch. h_pred_mean_probs is a
    diagnostic alternative: the entropy of the per-pass probability average.
    """

    mean_logits: np.ndarray
    aleatoric_var: np.ndarray
    epistemic_var: np.ndarray
    p_pred: np.ndarray
    p_ale: np.ndarray
    p_epi: np.ndarray
    h_pred: np.ndarray
    h_ale: np.ndarray
    h_epi: np.ndarray
    h_pred_mean_probs: np.ndarray


def _moments(samples: PredictionSamples):
    means = samples.means
    # center on the first pass: identical passes then give exactly zero
    # spread, and the naive second-moment cancellation is avoided
    mu0 = means[0]
    mu_star = mu0 + (means - mu0).mean(axis=0)
    aleatoric = samples.variances.mean(axis=0)
    epistemic = np.square(means - mu_star).mean(axis=0)
    return mu_star, aleatoric, epistemic


def combine_gaussian_mixture(samples: PredictionSamples):
    """Mean and variance of the equal-weight Gaussian mixture.

    The variance is evaluated as aleatoric + epistemic (equal by the
    identity above), which keeps the split exactly additive.
    """
    mu_star, aleatoric, epistemic = _moments(samples)
    return mu_star, aleatoric + epistemic


def decompose_variance(samples: PredictionSamples):
    """(aleatoric, epistemic) variance components of the mixture.

    Aleatoric is the mean of the per-pass variances, epistemic the population
    variance of the per-pass means. They sum to the mixture variance.
    """
    _, aleatoric, epistemic = _moments(samples)
    return aleatoric, epistemic


def disentangle_logits(samples: PredictionSamples):
    """(mean logits, aleatoric logit var, epistemic logit var), per class."""
    return _moments(samples)


def sampling_softmax(mean_logits, logit_vars,
                     config: SamplingSoftmaxConfig | None = None,
                     rng: RngStream | None = None,
                     noise: np.ndarray | None = None):
    """Monte-Carlo expectation of softmax over a Gaussian logit distribution.

    p = N^-1 sum_j softmax(mu + sigma * eps_j) with eps_j standard normal.
    The estimate is differentiable in mu and the variances through the
    reparameterized draws; the noise itself is treated as constant. Pass
    ``noise`` (shape (N,) + mu.shape) to freeze the draws, e.g. for shared
    noise across calls or finite-difference checks; otherwise draws come
    from ``rng``.

    Accepts numpy arrays or Tensors; returns a Tensor when either input is
    one, a numpy array otherwise. Inputs are [C] or [B, C].
    """
    config = config or SamplingSoftmaxConfig()
    tensor_in = isinstance(mean_logits, Tensor) or isinstance(logit_vars, Tensor)
    mu = _as_tensor(mean_logits)
    var = _as_tensor(logit_vars)
    if mu.shape != var.shape:
        raise ValueError("mean and variance shapes must match")
    if np.any(var.data < 0.0):
        raise ValueError("logit variances must be non-negative")
    if not np.any(var.data):
        # every draw coincides at mu; averaging N identical softmax rows
        # would lose the last bit, so return the limit directly
        p = softmax(mu)
        return p if tensor_in else p.data
    if noise is None:
        if rng is None:
            raise ValueError("sampling_softmax needs an rng when noise is not given")
        noise = rng.normal((config.n_samples,) + mu.shape)
    else:
        noise = np.asarray(noise, dtype=np.float64)
        if noise.shape != (config.n_samples,) + mu.shape:
            raise ValueError(
                f"noise shape {noise.shape} does not match "
                f"{(config.n_samples,) + mu.shape}")
    draws = mu + sqrt(var) * Tensor(noise)
    p = softmax(draws).mean(axis=0)
    return p if tensor_in else p.data


def entropy(p) -> np.ndarray:
    """Shannon entropy, natural log, with 0 * log 0 taken as 0.

    Accepts a single distribution [C] or a batch [B, C]; reduces the last
    axis.
    """
    p = np.asarray(p, dtype=np.float64)
    if np.any(p < 0.0):
        raise ValueError("probabilities must be non-negative")
    safe = np.where(p > 0.0, p, 1.0)
    return -(p * np.log(safe)).sum(axis=-1)


def classification_uncertainty(samples: PredictionSamples,
                               config: SamplingSoftmaxConfig | None = None,
                               rng: RngStream | None = None
                               ) -> ClassificationDisentangled:
    """Full classification pipeline: logit split, three distributions,
    entropies.

    One set of noise draws is shared by the three sampling-softmax calls
    (common random numbers), so differences between p_ale, p_epi and p_pred
    reflect the variances, not sampling luck. The predictive distribution
    uses the summed logit variances, since only logits can be added.
    """
    config = config or SamplingSoftmaxConfig()
    if rng is None:
        raise ValueError("classification_uncertainty needs an rng")
    mu, aleatoric, epistemic = _moments(samples)
    noise = rng.normal((config.n_samples,) + mu.shape)
    p_ale = sampling_softmax(mu, aleatoric, config, noise=noise)
    p_epi = sampling_softmax(mu, epistemic, config, noise=noise)
    p_pred = sampling_softmax(mu, aleatoric + epistemic, config, noise=noise)

    # diagnostic variant: average the per-pass distributions, then take the
    # entropy of the average; passes reuse the shared noise
    n, m, c = config.n_samples, samples.n_passes, mu.shape[-1]
    flat_mu = samples.means.reshape(m, -1, c)
    flat_var = samples.variances.reshape(m, -1, c)
    b = flat_mu.shape[1]
    tiled = np.broadcast_to(noise.reshape(n, 1, b, c),
                            (n, m, b, c)).reshape(n, m * b, c)
    per_pass = sampling_softmax(flat_mu.reshape(m * b, c),
                                flat_var.reshape(m * b, c), config,
                                noise=tiled)
    p_mean = per_pass.reshape(m, b, c).mean(axis=0).reshape(mu.shape)

    return ClassificationDisentangled(
        mean_logits=mu, aleatoric_var=aleatoric, epistemic_var=epistemic,
        p_pred=p_pred, p_ale=p_ale, p_epi=p_epi,
        h_pred=entropy(p_pred), h_ale=entropy(p_ale), h_epi=entropy(p_epi),
        h_pred_mean_probs=entropy(p_mean))
