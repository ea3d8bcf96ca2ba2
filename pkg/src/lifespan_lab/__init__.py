"""Lifespan bounds and blow-up simulation for weakly coupled semilinear heat systems."""

from .errors import *  # noqa: F401,F403
from .exponents import (
    Criticality,
    ExponentProfile,
    PQSequences,
    SystemParams,
    blowup_rate_identity,
    compute_alpha,
    compute_pq,
    lifespan_exponent,
)
from .ode_chain import build_chain, minorant, pde_upper_bound
from .ode_engine import OdeSystemSpec, comparison_check, integrate, rate_probe
from .pde_sim import FieldState, InitialData, SimReport, run, step, verify_ode_inequality
from .test_function import TestFunctionSpec, build_psi, solve_R0, weighted_mass

__version__ = "0.1.0"
