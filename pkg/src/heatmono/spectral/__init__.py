"""Spectral evaluation of Q_{p,q}(t) and its monotonicity diagnostics."""

from __future__ import annotations

from .coefficients import CoeffTable, coefficient_table, fourier_coefficient
from .control import DEFAULT_CONTROL, QuadratureControl
from .routes import (
    Difference,
    LogReal,
    large_t_asymptote,
    q_derivative,
    q_derivative_scaled,
    q_direct,
    q_direct_power,
    q_series,
    q_series_power,
    q_value,
    richardson_derivative,
    series_difference,
    single_gaussian_q,
    sliding_difference,
    sliding_q,
    spatial_lq_power,
)
from .model_error import ModelErrorResult, gaussian_decay_slope, model_error
from .sweep import (
    DECREASING_INITIALLY,
    MIXED,
    NONDECREASING,
    SweepReport,
    classify,
    linear_grid,
    log_grid,
    sweep,
)

__all__ = [
    "CoeffTable", "coefficient_table", "fourier_coefficient",
    "DEFAULT_CONTROL", "QuadratureControl",
    "Difference", "LogReal", "large_t_asymptote", "q_derivative", "q_derivative_scaled",
    "q_direct", "q_direct_power", "q_series", "q_series_power", "q_value",
    "richardson_derivative", "series_difference", "single_gaussian_q", "sliding_difference", "sliding_q",
    "spatial_lq_power",
    "ModelErrorResult", "gaussian_decay_slope", "model_error",
    "DECREASING_INITIALLY", "MIXED", "NONDECREASING", "SweepReport", "classify",
    "linear_grid", "log_grid", "sweep",
]
