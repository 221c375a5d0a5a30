"""Isotonized Bayesian inversion for one-sided deconvolution.

Observations are Z = X + Y with X, Y >= 0 and the noise density k
known.  The package solves the convolution equation (p * k)(x) = x for
the resolvent p, turns discrete measures into H-curves whose convex
minorant derivative estimates the signal CDF, samples the Dirichlet
posterior of the observable law, and recalibrates the credible bands
with a Monte Carlo quantile table so they attain frequentist coverage.
"""

from .chernoff import (ArgminConfig, CalibrationTable, build_calibration,
                       drifted_argmin, recalibrate_tau, sample_zb, two_sided_bm)
from .errors import ConfigError, PreconditionError
from .inverse import (EvaluationGrid, PosteriorDrawSet, default_grid, h_curve,
                      iie, iip_draws, posterior_quantile_band)
from .isotonic import (ConvexMinorant, SampledCurve, StepCDF, gcm, isotonize,
                       pava, right_derivative)
from .kernels import (NoiseKernel, TabulatedKernel, builtin_kernel,
                      load_tabulated, parse_kernel_spec, read_kernel_csv)
from .measures import (DiscreteMeasure, DPPrior, bayesian_bootstrap,
                       draw_dp_posterior, draw_dp_prior, empirical_measure)
from .rng import StreamKey, child_seed, derive_stream
from .simulate import (CoverageReport, ScenarioConfig, generate_data,
                       run_coverage, run_figure_scenario)
from .volterra import (ResolventQuery, ResolventTable, default_grid_size,
                       evaluate_resolvent, renewal_series_resolvent,
                       resolvent_residual, solve_resolvent)

__version__ = "0.1.0"

__all__ = [
    "ArgminConfig", "CalibrationTable", "ConfigError", "ConvexMinorant",
    "CoverageReport", "DiscreteMeasure", "DPPrior", "EvaluationGrid",
    "NoiseKernel", "PosteriorDrawSet", "PreconditionError", "ResolventQuery",
    "ResolventTable", "SampledCurve", "ScenarioConfig", "StepCDF", "StreamKey",
    "TabulatedKernel", "bayesian_bootstrap", "build_calibration", "builtin_kernel",
    "child_seed", "default_grid", "default_grid_size", "derive_stream",
    "draw_dp_posterior", "draw_dp_prior", "drifted_argmin", "empirical_measure",
    "evaluate_resolvent", "gcm", "generate_data", "h_curve", "iie", "iip_draws",
    "isotonize", "load_tabulated", "parse_kernel_spec", "pava",
    "posterior_quantile_band", "read_kernel_csv", "recalibrate_tau",
    "renewal_series_resolvent", "resolvent_residual", "right_derivative",
    "run_coverage", "run_figure_scenario", "sample_zb", "solve_resolvent",
    "two_sided_bm",
]
