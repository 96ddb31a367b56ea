"""Norm-based generalization bounds for small feedforward ReLU networks.

Compute spectral/Frobenius, l1, l2,1, and parameter-counting margin bounds
on trained networks, and empirically verify the perturbation inequalities
they rest on.  See the ``specmargin`` command for the end-to-end workflow.
"""

__version__ = "0.1.0"

from .bounds import (
    BetaGrid,
    BoundConfig,
    NormProfile,
    bartlett_l1_bound,
    bartlett_l21_bound,
    beta_grid,
    bound_report,
    norm_profile,
    regime_factors,
    theorem1_bound,
    vc_bound,
    vc_condition_ratios,
)
from .linalg import (
    SpectralNormError,
    derive_seed,
    frobenius_norm,
    gaussian_matrix,
    l1_elementwise_norm,
    l21_norm,
    spectral_norm,
)
from .network import (
    LabeledDataset,
    Perturbation,
    ReluNetwork,
    SchemaError,
    apply_perturbation,
    batch_scores,
    forward,
    load_dataset,
    load_weights,
    margin,
    margin_loss,
    margins,
    rebalance,
    save_dataset,
    save_weights,
)
from .pacbayes import (
    PacBayesEstimate,
    PerturbationTrial,
    kl_gaussian,
    lemma2_bound,
    lemma2_check,
    mc_pacbayes,
    recursion_check,
    sample_perturbation,
    spectral_tail_check,
    theorem_sigma,
)
from .trainer import (
    TaskSpec,
    TrainConfig,
    TrainingDivergedError,
    generate_dataset,
    init_network,
    train_sgd,
)

__all__ = [
    "__version__",
    "BetaGrid",
    "BoundConfig",
    "NormProfile",
    "bartlett_l1_bound",
    "bartlett_l21_bound",
    "beta_grid",
    "bound_report",
    "norm_profile",
    "regime_factors",
    "theorem1_bound",
    "vc_bound",
    "vc_condition_ratios",
    "SpectralNormError",
    "derive_seed",
    "frobenius_norm",
    "gaussian_matrix",
    "l1_elementwise_norm",
    "l21_norm",
    "spectral_norm",
    "LabeledDataset",
    "Perturbation",
    "ReluNetwork",
    "SchemaError",
    "apply_perturbation",
    "batch_scores",
    "forward",
    "load_dataset",
    "load_weights",
    "margin",
    "margin_loss",
    "margins",
    "rebalance",
    "save_dataset",
    "save_weights",
    "PacBayesEstimate",
    "PerturbationTrial",
    "kl_gaussian",
    "lemma2_bound",
    "lemma2_check",
    "mc_pacbayes",
    "recursion_check",
    "sample_perturbation",
    "spectral_tail_check",
    "theorem_sigma",
    "TaskSpec",
    "TrainConfig",
    "TrainingDivergedError",
    "generate_dataset",
    "init_network",
    "train_sgd",
]
