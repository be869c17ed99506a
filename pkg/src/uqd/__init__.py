"""Disentangled aleatoric/epistemic uncertainty with a sampling softmax.

The package trains small Gaussian-output networks under several UQ methods
(MC dropout, DropConnect, Flipout, deep ensembles, plus a deterministic
baseline), combines the per-pass Gaussians exactly, and pushes the split
variances through a differentiable sampling softmax for classification.
"""

from .calibration import (LogitDistSpec, SweepRow, emit_sweep_csv,
                          parse_sweep_csv, reference_probs, sweep)
from .datasets import (SoftLabelData, ToyRegressionData, cluster_posterior,
                       gen_soft_label_classification, gen_toy_regression,
                       true_noise_std)
from .disentangle import (ClassificationDisentangled, SamplingSoftmaxConfig,
                          classification_uncertainty,
                          combine_gaussian_mixture, decompose_variance,
                          disentangle_logits, entropy, sampling_softmax)
from .evaluate import (ClassificationEval, RegressionCurve, build_report,
                       emit_disentangled_csv, emit_report_csv,
                       eval_classification_disentangled,
                       eval_regression_disentangled, parse_disentangled_csv)
from .layers import SIGMA_FLOOR
from .losses import beta_nll, gaussian_nll, soft_cross_entropy
from .methods import (PredictionSamples, UqMethodConfig, load_models,
                      sample_predictions, save_models, train_ensemble)
from .models import (Model, build_classification_model, build_model,
                     build_regression_model, load_model, save_model)
from .rng import RngStream
from .tensor import GradientTape, Tensor, backward, stop_gradient
from .training import (LossConfig, TrainConfig, TrainingDiverged, TrainResult,
                       adam_init, adam_step, default_train_config, train,
                       train_single_model)

__version__ = "0.1.0"

__all__ = [
    "LogitDistSpec", "SweepRow", "emit_sweep_csv", "parse_sweep_csv",
    "reference_probs", "sweep",
    "SoftLabelData", "ToyRegressionData", "cluster_posterior",
    "gen_soft_label_classification", "gen_toy_regression", "true_noise_std",
    "ClassificationDisentangled", "SamplingSoftmaxConfig",
    "classification_uncertainty", "combine_gaussian_mixture",
    "decompose_variance", "disentangle_logits", "entropy", "sampling_softmax",
    "ClassificationEval", "RegressionCurve", "build_report",
    "emit_disentangled_csv", "emit_report_csv",
    "eval_classification_disentangled", "eval_regression_disentangled",
    "parse_disentangled_csv",
    "SIGMA_FLOOR",
    "beta_nll", "gaussian_nll", "soft_cross_entropy",
    "PredictionSamples", "UqMethodConfig", "load_models",
    "sample_predictions", "save_models", "train_ensemble",
    "Model", "build_classification_model", "build_model",
    "build_regression_model", "load_model", "save_model",
    "RngStream",
    "GradientTape", "Tensor", "backward", "stop_gradient",
    "LossConfig", "TrainConfig", "TrainingDiverged", "TrainResult",
    "adam_init", "adam_step", "default_train_config", "train",
    "train_single_model",
    "__version__",
]
