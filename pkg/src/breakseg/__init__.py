"""Breakpoint detection error, segmentation solvers and penalty sweeps."""

from .annotation import (
    Annotation,
    AnnotationSet,
    complete_error,
    incomplete_error,
    negative_regions,
    zero_one_error,
)
from .breakpoint_error import ErrorBreakdown, breakpoint_error, regions_from_breakpoints
from .experiments import run_experiment, sweep_exponents, sweep_flsa
from .segmentation import flsa_solve, phi_breaks, segment_least_squares
from .selection import ErrorCurve, best_lambda, error_curve, selection_path
from .signals import Signal, TrueModel, make_true_signal, sample_signal

__version__ = "0.1.0"

__all__ = [
    "Annotation",
    "AnnotationSet",
    "ErrorBreakdown",
    "ErrorCurve",
    "Signal",
    "TrueModel",
    "best_lambda",
    "breakpoint_error",
    "complete_error",
    "error_curve",
    "flsa_solve",
    "incomplete_error",
    "make_true_signal",
    "negative_regions",
    "phi_breaks",
    "regions_from_breakpoints",
    "run_experiment",
    "sample_signal",
    "segment_least_squares",
    "selection_path",
    "sweep_exponents",
    "sweep_flsa",
    "zero_one_error",
]
