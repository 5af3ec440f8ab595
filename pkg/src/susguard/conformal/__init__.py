"""Conformal calibration of nearest-neighbor sublevel regions."""

from .calibration import (
    CalibrationResult,
    PValueDetail,
    SwapCertificate,
    calibrate,
    compute_k,
    contains,
    contains_batch,
    export_calibration,
    full_conformal_swap_certificate,
    full_conformal_swap_oracle,
    load_calibration,
    p_value,
    p_value_batch,
    p_value_detail,
    score,
    score_batch,
    split_conformal_threshold,
)
from .coverage import (
    CoverageReport,
    GaussianMixture,
    SamplerSpec,
    default_planar_sampler,
    monte_carlo_coverage,
)
from .dissimilarity import Dissimilarity, LinearTransform, fit_linear_transform
from .engine import batch_score, loo_alphas, pair_diss

__all__ = [
    "CalibrationResult",
    "CoverageReport",
    "Dissimilarity",
    "GaussianMixture",
    "LinearTransform",
    "PValueDetail",
    "SamplerSpec",
    "SwapCertificate",
    "batch_score",
    "calibrate",
    "compute_k",
    "contains",
    "contains_batch",
    "default_planar_sampler",
    "export_calibration",
    "fit_linear_transform",
    "full_conformal_swap_certificate",
    "full_conformal_swap_oracle",
    "load_calibration",
    "loo_alphas",
    "monte_carlo_coverage",
    "p_value",
    "p_value_batch",
    "p_value_detail",
    "pair_diss",
    "score",
    "score_batch",
    "split_conformal_threshold",
]
