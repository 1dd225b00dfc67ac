"""Percentile-robust classifier training at desk scale.

Average-loss training quietly sacrifices rare, hard subgroups: the mean
stays flat while the worst decile collapses.  This package trains against
that failure mode by minimizing a distributionally robust objective whose
inner adversary has a softmax closed form, realized as hardness-weighted
mini-batch sampling with clipped importance weights.  Everything needed to
reproduce the effect end to end is here: the robust objectives and their
percentile bound, the sampler, a small MLP with exact gradients, a
stratified synthetic data generator, two training regimes with fold
ensembling and resumable checkpoints, and stratified percentile reports.
"""

from .datasets import Dataset, SyntheticConfig, generate, kfold_indices, read_csv, write_csv
from .metrics import compare_reports, dice, percentile_report, render_json, render_text
from .mlp import MAX_LOSS, MLPParams, Sample, init_params
from .objectives import (
    RobustConfig,
    chernoff_percentile_bound,
    dro_inner_objective,
    empirical_percentile,
    kl_divergence,
    lse_robust_loss,
    mean_loss,
    optimal_weights,
)
from .sampler import HardnessWeightedSampler, SamplerConfig, UniformReplacementSampler
from .scores import ScoreRow, ScoreTable, load_scores, write_scores
from .training import (
    TrainConfig,
    cross_validate,
    ensemble_predict,
    load_checkpoint,
    save_checkpoint,
    train_dro,
    train_erm,
    train_replacement_erm,
)

__version__ = "0.1.0"

__all__ = [
    "Dataset",
    "SyntheticConfig",
    "generate",
    "kfold_indices",
    "read_csv",
    "write_csv",
    "compare_reports",
    "dice",
    "percentile_report",
    "render_json",
    "render_text",
    "MAX_LOSS",
    "MLPParams",
    "Sample",
    "init_params",
    "RobustConfig",
    "chernoff_percentile_bound",
    "dro_inner_objective",
    "empirical_percentile",
    "kl_divergence",
    "lse_robust_loss",
    "mean_loss",
    "optimal_weights",
    "HardnessWeightedSampler",
    "SamplerConfig",
    "UniformReplacementSampler",
    "ScoreRow",
    "ScoreTable",
    "load_scores",
    "write_scores",
    "TrainConfig",
    "cross_validate",
    "ensemble_predict",
    "load_checkpoint",
    "save_checkpoint",
    "train_dro",
    "train_erm",
    "train_replacement_erm",
    "__version__",
]
