"""Numerical verification of the Thomae formula for ``Z_2^n`` fiber
products of hyperelliptic curves ``y_j^2 = prod_i (x - lam_ji)``."""
from .curve import FiberProductCurve, SurfacePoint, point_on_sheet, validate_curve
from .divisors import BetaVector, enumerate_admissible, is_admissible, r_minus_D, tau_profile
from .errors import FiberThomaeError, InvalidInput
from .periods import PeriodData, compute_periods
from .theta import ThetaContext, theta, theta_at_point, theta_char
from .abel import AbelMap
from .thomae import (CheckReport, ThomaeExponents, Workbench, dt2_coefficient_check, ode_check,
                     ratio_invariance, run_suite)
from .config import Config, default_instance, load_config, parse_config

__version__ = "0.1.0"

__all__ = [
    "AbelMap", "BetaVector", "CheckReport", "Config", "FiberProductCurve", "FiberThomaeError",
    "InvalidInput", "PeriodData", "SurfacePoint", "ThetaContext", "ThomaeExponents", "Workbench",
    "compute_periods", "default_instance", "dt2_coefficient_check", "enumerate_admissible",
    "is_admissible", "load_config", "ode_check", "parse_config", "point_on_sheet", "r_minus_D",
    "ratio_invariance", "run_suite", "tau_profile", "theta", "theta_at_point", "theta_char",
    "validate_curve",
]
