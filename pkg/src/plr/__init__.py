"""Likelihood-free learning of best-average-power test statistics.

A small dense network s(x; mu0) is trained to separate draws from a null
parameter point from a mixture of equidistant alternatives sharing the
null's nuisance value. After monotone calibration the learned statistic is
directly comparable to the exact profile-likelihood-ratio oracles shipped
for the two benchmark models (bivariate Gaussian, Poisson on-off).
"""

from .calibration import (CalibrationMap, CalibrationSet, apply_calibration,
                          chi2_cdf, chi2_quantile, isotonic_fit, norm_quantile,
                          percentile_match_fit)
from .evaluation import (ROCCurve, ScanCurve, ks_statistic, power_at_size,
                         profile_scan, roc_curve)
from .models import (GaussianModel, GaussianModelSpec, Observation, OnOffModel,
                     OnOffModelSpec, ThetaPoint, gaussian_loglik, gaussian_profile_t,
                     gaussian_sample, onoff_loglik, onoff_profile_t, onoff_sample,
                     poisson_draw)
from .nn import (AdamState, Gradient, NetworkParams, adam_step, bxe_loss, forward,
                 forward_batch, init_params, loss_and_grad)
from .sampling import (HypothesisDraw, LabeledBatch, PriorSpec, Standardizer,
                       assemble_minibatch, make_standardizer, sample_alternatives,
                       sample_null)
from .training import (TrainConfig, TrainingDiverged, TrainingLog, build_features,
                       score, score_batch, train)

__version__ = "0.1.0"

__all__ = [
    "AdamState", "CalibrationMap", "CalibrationSet", "Gradient", "GaussianModel",
    "GaussianModelSpec", "HypothesisDraw", "LabeledBatch", "NetworkParams",
    "Observation", "OnOffModel", "OnOffModelSpec", "PriorSpec", "ROCCurve",
    "ScanCurve", "Standardizer", "ThetaPoint", "TrainConfig", "TrainingDiverged",
    "TrainingLog", "adam_step", "apply_calibration", "assemble_minibatch",
    "build_features", "bxe_loss", "chi2_cdf", "chi2_quantile", "forward",
    "forward_batch", "gaussian_loglik", "gaussian_profile_t", "gaussian_sample",
    "init_params", "isotonic_fit", "ks_statistic", "loss_and_grad",
    "make_standardizer", "norm_quantile", "onoff_loglik", "onoff_profile_t",
    "onoff_sample", "percentile_match_fit", "poisson_draw", "power_at_size",
    "profile_scan", "roc_curve", "sample_alternatives", "sample_null", "score",
    "score_batch", "train",
]
