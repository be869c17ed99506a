"""Training losses: Gaussian NLL, beta-weighted NLL, and soft-label
cross-entropy.

All three reduce over the batch with a mean, so the learning rate keeps its
meaning when the batch size changes. Losses consume variances; heads that
emit standard deviations square them at the call site.
"""

from __future__ import annotations

import numpy as np

from .tensor import (Tensor, _as_tensor, clip_min, exp, log, mul,
                     stop_gradient, square)

__all__ = ["gaussian_nll", "beta_nll", "soft_cross_entropy", "PROB_CLAMP"]

# sampling softmax can emit exact zeros at finite N; clamp before the log
PROB_CLAMP = 1e-12


def _per_point_nll(mu: Tensor, var: Tensor, y: Tensor) -> Tensor:
    if np.any(var.data <= 0.0):
        raise ValueError("gaussian_nll requires strictly positive variances")
    return log(var) * 0.5 + square(mu - y) / (var * 2.0)


def gaussian_nll(mu, var, y) -> Tensor:
    """Mean over the batch of log(var)/2 + (mu - y)^2 / (2 var)."""
    mu, var, y = _as_tensor(mu), _as_tensor(var), _as_tensor(y)
    return _per_point_nll(mu, var, y).mean()


def beta_nll(mu, var, y, beta: float) -> Tensor:
    """Gaussian NLL with each point reweighted by var^beta, held constant.

    The weight var^beta passes through stop_gradient, so gradients equal
    var^beta times the plain NLL gradients. beta = 0 reproduces gaussian_nll
    exactly, value and gradients; beta = 1 removes the NLL's natural
    down-weighting of high-variance points.
    """
    if not 0.0 <= beta <= 1.0:
        raise ValueError(f"beta must lie in [0, 1], got {beta}")
    mu, var, y = _as_tensor(mu), _as_tensor(var), _as_tensor(y)
    per_point = _per_point_nll(mu, var, y)
    weight = stop_gradient(exp(log(var) * beta))
    return mul(weight, per_point).mean()


def soft_cross_entropy(p_pred, p_true) -> Tensor:
    """Mean over the batch of -sum_c p_true[c] * log(p_pred[c]).

    Predicted probabilities are clamped at 1e-12 before the log. p_true rows
    are full distributions (soft labels), not class indices.
    """
    p_pred, p_true = _as_tensor(p_pred), _as_tensor(p_true)
    if np.any(p_true.data < 0.0):
        raise ValueError("p_true must be non-negative")
    log_p = log(clip_min(p_pred, PROB_CLAMP))
    per_point = -mul(p_true, log_p).sum(axis=-1)
    return per_point.mean()
