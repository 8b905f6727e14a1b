"""Desk-scale numerical laboratory for a quadratic stochastic Schrodinger
equation forced by space-time fractional noise: truncated-spectrum sampling
of the linear solution, Wick renormalization and its divergence law,
multilevel convergence studies, the Picard fixed point in both regularity
regimes, and empirical verification of the functional inequalities the
fixed point rests on."""

__version__ = "0.1.0"

from .cutoff import BumpAxis, CutoffSpec, symmetric_cutoff
from .gamma import gamma, gamma_increment, gamma_sq_modulus, verify_gamma_bounds
from .grid import (ConfigError, Field, FieldPath, GridSpec, bessel_multiplier,
                   fit_decay_rate, local_sobolev_seminorm, schrodinger_propagate,
                   sobolev_norm)
from .linear import (convergence_study, covariance_quadrature,
                     pseudo_covariance_quadrature, sample_psi)
from .noise import (HurstIndex, Regime, build_cells, classify_regime, evaluate_bn,
                    sample_noise)
from .renorm import (RenormConstant, sigma_n, verify_asymptotics, wick_convergence_study,
                     wick_square)
from .solver import (MildProblem, NoContraction, SolverParams, duhamel, gamma_map,
                     picard_solve, select_parameters, smooth_convergence_experiment, x_norm)
