"""Invertible generative imputation for traffic-style data matrices.

The package trains GAN-based imputers whose two-pass output both fills the
missing entries and preserves the observed ones exactly, so the imputed
matrix, the mask, and the noise draw can all be recovered after the fact.
"""

from .baselines import MeanImputer, fit_mean_imputer, iterative_impute, mean_impute
from .data import (
    DataMatrix,
    MaskMatrix,
    NoiseSource,
    NormalizationStats,
    fit_normalizer,
    generate_mcar_mask,
    reshuffle_mask,
    transform,
)
from .datasets import (
    MultiVarDataset,
    SingleVarDataset,
    load_multi_var,
    load_single_var,
    make_synthetic,
    per_variable_mask,
    split_single_var,
)
from .errors import ConfigError, DataError, GanImputeError, TrainingDivergedError
from .evaluation import (
    MetricsRecord,
    MetricsTable,
    energy_distance,
    masked_mae,
    per_sample_errors,
    run_imputation_grid,
    run_multivar_grid,
    run_prediction_grid,
)
from .imputer import GenerativeImputer, impute, invert, recover_mask, sample_noise_like
from .losses import (
    gain_discriminator_loss,
    gain_generator_loss,
    gain_hint,
    gradient_penalty,
    igani_critic_loss,
    igani_generator_loss,
)
from .networks import Network, build_mlp, forward, load_network, save_network
from .trainers import (
    TrainConfig,
    TrainedImputer,
    load_trained_imputer,
    predict,
    save_trained_imputer,
    train_gain,
    train_igani,
    train_misgan,
    train_predictor,
)

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "DataError",
    "DataMatrix",
    "GanImputeError",
    "GenerativeImputer",
    "MaskMatrix",
    "MeanImputer",
    "MetricsRecord",
    "MetricsTable",
    "MultiVarDataset",
    "Network",
    "NoiseSource",
    "NormalizationStats",
    "SingleVarDataset",
    "TrainConfig",
    "TrainedImputer",
    "TrainingDivergedError",
    "build_mlp",
    "energy_distance",
    "fit_mean_imputer",
    "fit_normalizer",
    "forward",
    "gain_discriminator_loss",
    "gain_generator_loss",
    "gain_hint",
    "generate_mcar_mask",
    "gradient_penalty",
    "igani_critic_loss",
    "igani_generator_loss",
    "impute",
    "invert",
    "iterative_impute",
    "load_multi_var",
    "load_network",
    "load_single_var",
    "load_trained_imputer",
    "make_synthetic",
    "masked_mae",
    "mean_impute",
    "per_sample_errors",
    "per_variable_mask",
    "predict",
    "recover_mask",
    "reshuffle_mask",
    "run_imputation_grid",
    "run_multivar_grid",
    "run_prediction_grid",
    "sample_noise_like",
    "save_network",
    "save_trained_imputer",
    "split_single_var",
    "train_gain",
    "train_igani",
    "train_misgan",
    "train_predictor",
    "transform",
]
