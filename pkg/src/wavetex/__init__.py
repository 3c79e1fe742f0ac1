"""Texture synthesis from covariances of phase-shifted rectified wavelet coefficients."""
from __future__ import annotations

__version__ = "0.1.0"

from .config import ModelConfig
from .counting import alpha_breakdown, count_alpha_statistics, count_ps_statistics
from .imagecore import histogram_match, load_image, make_rng, sample_gaussian_image, save_png
from .lbfgs import lbfgs_minimize
from .representation import (
    compute_representation,
    phase_harmonic,
    rectifier_decomposition_check,
    rectifier_fourier_coefficient,
    rectify,
)
from .statistics import (
    StatisticsOperator,
    StatisticsVector,
    build_index_set,
    build_shift_set,
    compute_statistics,
    statistics_distance,
)
from .synthesis import Objective, SynthesisRun, synthesize
from .wavelets import adjoint_wavelet_transform, build_filter_bank, wavelet_transform

__all__ = [
    "ModelConfig",
    "Objective",
    "StatisticsOperator",
    "StatisticsVector",
    "SynthesisRun",
    "adjoint_wavelet_transform",
    "alpha_breakdown",
    "build_filter_bank",
    "build_index_set",
    "build_shift_set",
    "compute_representation",
    "compute_statistics",
    "count_alpha_statistics",
    "count_ps_statistics",
    "histogram_match",
    "lbfgs_minimize",
    "load_image",
    "make_rng",
    "phase_harmonic",
    "rectifier_decomposition_check",
    "rectifier_fourier_coefficient",
    "rectify",
    "sample_gaussian_image",
    "save_png",
    "statistics_distance",
    "synthesize",
    "wavelet_transform",
]
