"""Gaussian location-scale mixture processes for spatial extremes."""

from ._core import (
    DataError,
    InvalidArgument,
    NumericalError,
    chi_empirical,
    chi_theory,
    chibar_theory,
    conditional_simulate,
    egpd_cdf,
    egpd_fit,
    egpd_quantile,
    egpd_sample,
    fit,
    matern_rho,
    model_names,
    param_names,
    pseudo_uniform,
    simulate,
    uniform_sites,
)

__version__ = "0.1.0"
