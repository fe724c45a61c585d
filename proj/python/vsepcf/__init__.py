"""Pair correlation function estimation for planar point patterns."""

from ._core import (
    Fit,
    InvalidArgument,
    NumericalError,
    fit_kde,
    fit_ose,
    fit_vse,
    run_benchmark,
    simulate,
    true_pcf,
)

__all__ = [
    "Fit",
    "InvalidArgument",
    "NumericalError",
    "fit_kde",
    "fit_ose",
    "fit_vse",
    "run_benchmark",
    "simulate",
    "true_pcf",
]
