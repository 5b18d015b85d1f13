"""Online PCA bottleneck: Oja-rule subspace tracking as an autoencoder quantizer."""

from .bottleneck import (
    BottleneckLayout,
    bottleneck_forward,
    bottleneck_update,
    make_layout,
    stop_gradient_backward,
)
from .autoencoder import PcaAutoencoder, TrainConfig, build_model, fit, train_step
from .checkpoint import load_checkpoint, save_checkpoint
from .errors import NumericalFailureError, RejectedInputError
from .linalg import inv_sqrt_sym, matmul, sym_eig, upper_triangular
from .metrics import BitBudgetSpec, bit_budget, psnr, ssim
from .oja import (
    LearningRateSchedule,
    OjaPcaState,
    explained_variance,
    init_state,
    oja_step,
    project,
    quantize,
    reconstruct,
    reorthonormalize,
    sort_components,
    truncate,
)
from .oracle import batch_pca, principal_angles, reconstruction_mse
from .streaming import GammaFadeMean, gamma_fade_direct, gamma_fade_update, rho

__version__ = "0.1.0"

__all__ = [
    "batch_pca",
    "bit_budget",
    "BitBudgetSpec",
    "bottleneck_forward",
    "bottleneck_update",
    "BottleneckLayout",
    "build_model",
    "explained_variance",
    "fit",
    "gamma_fade_direct",
    "gamma_fade_update",
    "GammaFadeMean",
    "init_state",
    "inv_sqrt_sym",
    "LearningRateSchedule",
    "load_checkpoint",
    "make_layout",
    "matmul",
    "NumericalFailureError",
    "oja_step",
    "OjaPcaState",
    "PcaAutoencoder",
    "principal_angles",
    "project",
    "psnr",
    "quantize",
    "reconstruct",
    "reconstruction_mse",
    "RejectedInputError",
    "reorthonormalize",
    "rho",
    "save_checkpoint",
    "sort_components",
    "ssim",
    "stop_gradient_backward",
    "sym_eig",
    "train_step",
    "TrainConfig",
    "truncate",
    "upper_triangular",
]
