"""INI configuration for runs and campaigns.

Grammar (all sections optional except ``[system]``; keys are case-insensitive)::

    [system]
    p = 2, 3            ; comma-separated exponents, fractions allowed (3/2)
    n = 1

    [data]
    shape = gaussian    ; gaussian | bump
    amplitude = 1.0     ; one value, or one per component
    width = 1.0
    center = 0.0

    [mesh]
    h0 = 0.02           ; spacing at the origin
    max_intervals = 4000
    boundary = dirichlet ; dirichlet | neumann
    r_dom =             ; blank: chosen from data support, horizon and R0

    [run]
    horizon = 1e6
    eta = 0.05          ; relative growth allowed per step
    theta = 0.02        ; step cap relative to elapsed time
    factor = 2          ; multiple of lam R^-2 in the functional inequality

    [ode]
    coefficients = 1, 1
    lambda_tilde = 1
    initial = 0, 5
    horizon = 10
    rel_tol = 1e-10

    [campaign]
    eps_min = 0.001
    eps_max = 0.1
    points = 6
    replicates = 1
    width_jitter = 0.05 ; relative spread of the data width across replicates
    slope_tol = 0.5
    alpha_override =    ; negative control: predict the slope from these alphas
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass
from pathlib import Path

from .errors import PreconditionError
from .exponents import SystemParams, parse_exponents
from .pde_sim import DEFAULT_H0, MAX_INTERVALS, InitialData

__all__ = ["LabConfig", "load_config", "parse_config"]


def _floats(text: str) -> tuple:
    return tuple(float(x) for x in parse_exponents(text))


@dataclass(frozen=True)
class LabConfig:
    params: SystemParams
    data: InitialData
    h0: float = DEFAULT_H0
    max_intervals: int = MAX_INTERVALS
    boundary: str = "dirichlet"
    R_dom: float | None = None
    horizon: float = 1e6
    eta: float = 0.05
    theta: float = 0.02
    factor: float = 2.0
    ode_coefficients: tuple | None = None
    ode_lambda: float = 0.0
    ode_initial: tuple | None = None
    ode_horizon: float = 10.0
    ode_rel_tol: float = 1e-10
    eps_min: float = 1e-3
    eps_max: float = 1e-1
    points: int = 6
    replicates: int = 1
    width_jitter: float = 0.05
    slope_tol: float = 0.5
    alpha_override: tuple | None = None


def parse_config(text: str) -> LabConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    cp.read_string(text)
    if not cp.has_section("system") or not cp.has_option("system", "p"):
        raise PreconditionError("config needs [system] with p")
    params = SystemParams(parse_exponents(cp.get("system", "p")), cp.getint("system", "n", fallback=1))

    def get(section, key, conv=float, default=None):
        if not cp.has_option(section, key):
            return default
        raw = cp.get(section, key).strip()
        return default if raw == "" else conv(raw)

    data = InitialData(
        get("data", "shape", str, "gaussian"),
        get("data", "amplitude", _floats, (1.0,)),
        get("data", "width", float, 1.0),
        get("data", "center", float, 0.0),
    )
    kw = dict(
        h0=get("mesh", "h0", float, DEFAULT_H0),
        max_intervals=get("mesh", "max_intervals", int, MAX_INTERVALS),
        boundary=get("mesh", "boundary", str, "dirichlet"),
        R_dom=get("mesh", "r_dom", float, None),
        horizon=get("run", "horizon", float, 1e6),
        eta=get("run", "eta", float, 0.05),
        theta=get("run", "theta", float, 0.02),
        factor=get("run", "factor", float, 2.0),
        ode_coefficients=get("ode", "coefficients", _floats, None),
        ode_lambda=get("ode", "lambda_tilde", float, 0.0),
        ode_initial=get("ode", "initial", _floats, None),
        ode_horizon=get("ode", "horizon", float, 10.0),
        ode_rel_tol=get("ode", "rel_tol", float, 1e-10),
        eps_min=get("campaign", "eps_min", float, 1e-3),
        eps_max=get("campaign", "eps_max", float, 1e-1),
        points=get("campaign", "points", int, 6),
        replicates=get("campaign", "replicates", int, 1),
        width_jitter=get("campaign", "width_jitter", float, 0.05),
        slope_tol=get("campaign", "slope_tol", float, 0.5),
        alpha_override=get("campaign", "alpha_override", parse_exponents, None),
    )
    if kw["boundary"] not in ("dirichlet", "neumann"):
        raise PreconditionError(f"unknown boundary {kw['boundary']!r}")
    return LabConfig(params, data, **kw)


def load_config(path) -> LabConfig:
    return parse_config(Path(path).read_text())
