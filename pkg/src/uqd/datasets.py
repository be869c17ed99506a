"""Synthetic datasets: the heteroscedastic toy regression curve and a
soft-label classification task with genuine annotator-style ambiguity.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .rng import RngStream

__all__ = [
    "ToyRegressionData", "SoftLabelData", "gen_toy_regression",
    "gen_soft_label_classification", "true_noise_std", "cluster_posterior",
]

# stream salts so the two generators never share draw sequences
_STREAM_REGRESSION = 11
_STREAM_CLASSIFICATION = 12


@dataclass
class ToyRegressionData:
    """y = x sin(x) + e1 * x + e2, e1 and e2 ~ N(0, noise_std^2) per point.

    The e1 term scales with x (heteroscedastic), e2 is a constant-width
    floor (homoscedastic); together the noise std is
    noise_std * sqrt(x^2 + 1). Train x covers [0, 10], the held-out band
    [10, 15] probes extrapolation.
    """

    x_train: np.ndarray
    y_train: np.ndarray
    x_ood: np.ndarray
    y_ood: np.ndarray
    noise_std: float = 0.3


def true_noise_std(x, noise_std: float = 0.3) -> np.ndarray:
    return noise_std * np.sqrt(np.square(np.asarray(x, dtype=np.float64)) + 1.0)


def _noisy_curve(x: np.ndarray, noise_std: float, rng: RngStream) -> np.ndarray:
    e1 = rng.normal(x.shape) * noise_std
    e2 = rng.normal(x.shape) * noise_std
    return x * np.sin(x) + e1 * x + e2


def gen_toy_regression(seed: int, n_train: int = 1000, n_ood: int = 200,
                       noise_std: float = 0.3) -> ToyRegressionData:
    rng = RngStream(seed, _STREAM_REGRESSION)
    x_train = rng.uniform(n_train) * 10.0
    y_train = _noisy_curve(x_train, noise_std, rng)
    x_ood = 10.0 + rng.uniform(n_ood) * 5.0
    y_ood = _noisy_curve(x_ood, noise_std, rng)
    return ToyRegressionData(x_train=x_train, y_train=y_train,
                             x_ood=x_ood, y_ood=y_ood, noise_std=noise_std)


@dataclass
class SoftLabelData:
    """2-D points from 8 Gaussian clusters with vote-histogram labels.

    Each point's true class posterior (equal priors, shared isotropic
    cluster spread) is computed analytically; 10 simulated annotators vote
    by multinomial draw from it, and the label is the vote histogram over
    10. Labels therefore sum to 1 in multiples of 1/10 and carry genuine
    aleatoric ambiguity near cluster boundaries.
    """

    inputs: np.ndarray      # [n, 2]
    labels: np.ndarray      # [n, C], vote fractions
    posteriors: np.ndarray  # [n, C], analytic truth
    classes: np.ndarray     # [n], generating cluster index
    centers: np.ndarray     # [C, 2]
    cluster_std: float
    n_votes: int = 10


def _cluster_centers(n_classes: int, radius: float) -> np.ndarray:
    angles = 2.0 * np.pi * np.arange(n_classes) / n_classes
    return radius * np.stack([np.cos(angles), np.sin(angles)], axis=1)


def cluster_posterior(points, centers, cluster_std: float) -> np.ndarray:
    """Exact class posterior under equal priors and isotropic clusters."""
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    sq_dist = np.square(points[:, None, :] - centers[None, :, :]).sum(axis=-1)
    logits = -sq_dist / (2.0 * cluster_std ** 2)
    logits -= logits.max(axis=-1, keepdims=True)
    weights = np.exp(logits)
    return weights / weights.sum(axis=-1, keepdims=True)


def gen_soft_label_classification(n_points: int, seed: int,
                                  n_classes: int = 8, radius: float = 2.5,
                                  cluster_std: float = 1.0,
                                  n_votes: int = 10) -> SoftLabelData:
    if n_points < 1:
        raise ValueError("n_points must be >= 1")
    rng = RngStream(seed, _STREAM_CLASSIFICATION)
    centers = _cluster_centers(n_classes, radius)
    classes = rng.integers(0, n_classes, n_points)
    inputs = centers[classes] + rng.normal((n_points, 2)) * cluster_std
    posteriors = cluster_posterior(inputs, centers, cluster_std)
    votes = rng.multinomial(n_votes, posteriors)
    labels = votes.astype(np.float64) / n_votes
    return SoftLabelData(inputs=inputs, labels=labels, posteriors=posteriors,
                         classes=classes, centers=centers,
                         cluster_std=cluster_std, n_votes=n_votes)
