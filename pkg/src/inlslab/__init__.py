"""Numerical laboratory for the inhomogeneous NLS in the intercritical window.

i u_t + Lap(u) + |x|^{-b} |u|^{2 sigma} u = 0 on radial R^N, N >= 3.
Grids, a conservative split-step integrator, blow-up diagnostics and fits,
the variational sharp constant, and an experiment CLI.
"""

from .analysis import (BlowupReport, InsufficientSnapshots, InsufficientTail,
                       NoBlowup, NoGrowth, SeriesData, build_report,
                       check_liminf, check_lower_rate, check_upper_integral,
                       estimate_tstar, fit_log_lower, proposition_quantities,
                       renormalize_v)
from .config import ParseError, RunConfig, ValidationError, config_echo, load_config, parse_config
from .diagnostics import (CheckReport, CutoffPhi, DiagnosticsSuite, annulus_mass,
                          ball_mass_scaled, build_cutoff, energy, mass,
                          radial_gn_quotient, rho_seminorm, variance,
                          virial_estimate_check, virial_z)
from .evolve import EvolveConfig, RunResult, run, step
from .fieldio import read_field_csv, write_field_csv
from .grid import (RadialField, RadialGrid, apply_laplacian, build_spectral_cache,
                   grad_norm_sq, hsc_norm_sq, integrate, lebesgue_norm, make_grid,
                   radial_derivative, weighted_potential)
from .groundstate import (GroundStateResult, farah_gn_check, gn_inequality_check,
                          minimize_weinstein, weinstein_value)
from .params import (PhysParams, ResampleOutOfRange, WindowViolation,
                     derive_exponents, scaling_transform)
from .profiles import gaussian_profile, profile_from_spec, random_family, ring_profile
from .runner import property_campaign, run_experiment, sweep

__version__ = "0.1.0"

__all__ = [
    "PhysParams", "derive_exponents", "scaling_transform", "WindowViolation",
    "ResampleOutOfRange",
    "RadialGrid", "RadialField", "make_grid", "integrate", "lebesgue_norm",
    "radial_derivative", "apply_laplacian", "grad_norm_sq", "weighted_potential",
    "build_spectral_cache", "hsc_norm_sq",
    "mass", "energy", "variance", "annulus_mass", "virial_z", "rho_seminorm",
    "ball_mass_scaled", "radial_gn_quotient", "virial_estimate_check",
    "build_cutoff", "CutoffPhi", "CheckReport", "DiagnosticsSuite",
    "EvolveConfig", "RunResult", "run", "step",
    "GroundStateResult", "minimize_weinstein", "weinstein_value",
    "gn_inequality_check", "farah_gn_check",
    "SeriesData", "BlowupReport", "build_report", "estimate_tstar",
    "check_lower_rate", "fit_log_lower", "check_upper_integral", "check_liminf",
    "renormalize_v", "proposition_quantities",
    "InsufficientTail", "NoBlowup", "NoGrowth", "InsufficientSnapshots",
    "RunConfig", "load_config", "parse_config", "config_echo", "ParseError",
    "ValidationError",
    "gaussian_profile", "ring_profile", "random_family", "profile_from_spec",
    "read_field_csv", "write_field_csv",
    "run_experiment", "sweep", "property_campaign",
]
