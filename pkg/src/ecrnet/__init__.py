"""Regime-specific causal graph discovery for piecewise-stationary VAR(1) series."""

from .evaluate import ScoreCard, score_sequence, score_static, shd
from .evolve import EvoConfig, run_evolution
from .linalg import spectral_radius, threshold_adjacency, trace_exp_hadamard_sq
from .model import (
    GraphSequence,
    HyperParams,
    Segmentation,
    TimeSeries,
    ecr_grad,
    ecr_loss,
    lagged_pairs,
    static_grad,
    static_loss,
)
from .optim import FitReport, fit_ecr, fit_static, project_stable
from .simgen import GenConfig, GroundTruth, make_dataset, make_ground_truth, simulate

__version__ = "0.1.0"

__all__ = [
    "EvoConfig",
    "FitReport",
    "GenConfig",
    "GraphSequence",
    "GroundTruth",
    "HyperParams",
    "ScoreCard",
    "Segmentation",
    "TimeSeries",
    "ecr_grad",
    "ecr_loss",
    "fit_ecr",
    "fit_static",
    "lagged_pairs",
    "make_dataset",
    "make_ground_truth",
    "project_stable",
    "run_evolution",
    "score_sequence",
    "score_static",
    "shd",
    "simulate",
    "spectral_radius",
    "static_grad",
    "static_loss",
    "threshold_adjacency",
    "trace_exp_hadamard_sq",
]
