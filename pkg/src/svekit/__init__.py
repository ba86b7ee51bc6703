"""svekit: simulation and verification of 1-d stochastic Volterra equations.

The package simulates X_t = x0(t) + int_0^t K_mu(s,t) mu(s, X_s) ds
+ int_0^t K_sigma(s,t) sigma(s, X_s) dB_s with an Euler-type scheme that
freezes the state at the left grid point while evaluating kernels and
time dependence exactly, and ships the statistical machinery to check
regularity, moment bounds, refinement convergence, the semimartingale
split, and coupled-scheme uniqueness evidence at desk scale.
"""

from ._accel import BACKEND
from .analysis import (ConvergenceReport, DecompositionReport, HolderEstimate,
                       MomentReport, decomposition_residuals,
                       estimate_holder_exponent, estimate_moments,
                       measure_cauchy_gaps, reconstruct_semimartingale,
                       uniqueness_coupling_test)
from .coeffs import (CoefficientPair, InitialCondition, audit_osgood_divergence,
                     audit_yw_divergence, check_linear_growth,
                     coeffs_from_expressions, constant_initial,
                     estimate_holder_modulus, localize, make_builtin_coeffs)
from .config import ExperimentConfig, config_from_dict, load_config, parse_config
from .expr import compile_expression
from .kernels import (AssumptionReport, KernelSpec, Triangle,
                      audit_assumption_kernels, eval_kernel,
                      make_builtin_kernel)
from .noise import (BrownianDriver, DyadicGrid, dump_driver, load_driver,
                    restrict, sample_driver, sample_increment_window)
from .runner import run_audit, run_experiment
from .scheme import (ConvolutionWeightTable, EnsembleResult, PathSample,
                     SchemeConfig, convolution_fast_weights, simulate_ensemble,
                     simulate_from_increments, simulate_path)
from .ywapprox import (Mollifier, SmoothingSchedule, YWSequence, YWSmoother,
                       build_smoother, build_yw_sequence, smoothing_schedule,
                       verify_smoother_inequalities, yw_thresholds)

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "__version__",
    "Triangle", "KernelSpec", "AssumptionReport", "eval_kernel",
    "make_builtin_kernel", "audit_assumption_kernels",
    "CoefficientPair", "InitialCondition", "make_builtin_coeffs",
    "coeffs_from_expressions", "constant_initial", "localize",
    "estimate_holder_modulus", "check_linear_growth", "audit_yw_divergence",
    "audit_osgood_divergence", "compile_expression",
    "DyadicGrid", "BrownianDriver", "sample_driver",
    "sample_increment_window", "restrict", "dump_driver", "load_driver",
    "SchemeConfig", "PathSample", "EnsembleResult", "simulate_path",
    "simulate_ensemble", "simulate_from_increments",
    "convolution_fast_weights", "ConvolutionWeightTable",
    "MomentReport", "HolderEstimate", "ConvergenceReport",
    "DecompositionReport", "estimate_moments", "estimate_holder_exponent",
    "measure_cauchy_gaps", "reconstruct_semimartingale",
    "decomposition_residuals", "uniqueness_coupling_test",
    "YWSmoother", "YWSequence", "Mollifier", "SmoothingSchedule",
    "build_smoother", "build_yw_sequence", "yw_thresholds",
    "verify_smoother_inequalities", "smoothing_schedule",
    "ExperimentConfig", "parse_config", "config_from_dict", "load_config",
    "run_experiment", "run_audit",
]
