"""Radial solver for the cyclic heat system ``u_j' - Lap u_j = |u_{j+1}|^{p_j}``.

Space is a finite-volume discretisation on a :class:`~lifespan_lab.mesh.RadialMesh`
over ``[0, R_dom]`` with homogeneous Dirichlet (default) or Neumann data at
``R_dom``. Diffusion is backward Euler; the reaction is explicit, by default in
Heun form (predictor and trapezoid corrector, both through the same implicit
solve). The implicit matrix is an M-matrix and the reaction is nonnegative, so
nonnegative data stay nonnegative for every ``dt``.

Time is carried as ``t + t_lo`` as in :mod:`lifespan_lab.ode_engine`: near
blow-up the steps are far below ``ulp(t)`` on long runs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np
from scipy.linalg import solve_banded

from .errors import InsufficientData, PreconditionError, StabilityFailure
from .exponents import SystemParams, compute_alpha
from .mesh import RadialMesh
from .ode_engine import BlowupEstimate, GlobalUpTo, _two_sum
from .test_function import TestFunctionSpec

__all__ = [
    "FieldState",
    "InitialData",
    "SimReport",
    "InequalityWitness",
    "step",
    "run",
    "default_mesh",
    "domain_radius",
    "verify_ode_inequality",
    "holder_slack",
]

SUP_ESCAPE = 1e8
DT_FLOOR = 1e-12
DEFAULT_H0 = 0.02
MAX_INTERVALS = 4000


@dataclass(frozen=True)
class FieldState:
    t: float
    u: np.ndarray  # components x nodes
    mesh: RadialMesh
    boundary: str = "dirichlet"
    t_lo: float = 0.0

    def __post_init__(self):
        if self.boundary not in ("dirichlet", "neumann"):
            raise PreconditionError(f"unknown boundary {self.boundary!r}")
        if self.u.ndim != 2 or self.u.shape[1] != self.mesh.size:
            raise PreconditionError("u must be components x mesh nodes")

    @property
    def k(self) -> int:
        return self.u.shape[0]

    def sup(self) -> np.ndarray:
        return self.u.max(axis=1)

    def l1(self) -> np.ndarray:
        return np.abs(self.u) @ self.mesh.volumes

    def mass(self) -> np.ndarray:
        """``int u_j`` with the control volumes the scheme conserves."""
        return self.u @ self.mesh.volumes


@dataclass(frozen=True)
class InitialData:
    """Radial data ``amplitude_j * shape((r - center) / width)``.

    ``gaussian`` is ``exp(-s^2)``; ``bump`` is ``exp(1 - 1/(1 - s^2))`` on
    ``|s| < 1``, so both have peak value 1 at ``r = center``.
    """

    shape: str
    amplitudes: tuple
    width: float = 1.0
    center: float = 0.0

    def __post_init__(self):
        if self.shape not in ("gaussian", "bump"):
            raise PreconditionError(f"unknown data shape {self.shape!r}")
        amps = tuple(float(a) for a in np.atleast_1d(self.amplitudes))
        if any(a < 0 for a in amps):
            raise PreconditionError("amplitudes must be nonnegative")
        if not self.width > 0 or self.center < 0:
            raise PreconditionError("need width > 0 and center >= 0")
        object.__setattr__(self, "amplitudes", amps)

    @property
    def support(self) -> float:
        """Radius beyond which the data vanish (gaussian: below ``e^{-16}`` of the peak)."""
        reach = 4.0 if self.shape == "gaussian" else 1.0
        return self.center + reach * self.width

    def profile(self, r) -> np.ndarray:
        s = (np.asarray(r, dtype=float) - self.center) / self.width
        if self.shape == "gaussian":
            g = np.exp(-(s**2))
        else:
            inside = np.abs(s) < 1
            ss = np.where(inside, s, 0.0)
            g = np.where(inside, np.exp(1.0 - 1.0 / (1.0 - ss**2)), 0.0)
        return g

    def values(self, r, k: int) -> np.ndarray:
        amps = self.amplitudes
        if len(amps) == 1:
            amps = amps * k
        if len(amps) != k:
            raise PreconditionError(f"need 1 or {k} amplitudes, got {len(amps)}")
        return np.outer(amps, self.profile(r))

    def scaled(self, factor: float) -> "InitialData":
        return replace(self, amplitudes=tuple(a * factor for a in self.amplitudes))


# -- discretisation ---------------------------------------------------------


def domain_radius(support: float, time_scale: float, R0: float | None = None) -> float:
    """Truncation radius: room for the data, for diffusion up to ``time_scale`` and for ``phi_{R0}``."""
    r = max(8.0, 4.0 * support, 8.0 * math.sqrt(max(time_scale, 0.0)))
    if R0 is not None:
        r = max(r, 1.05 * R0)
    return r


def default_mesh(n: int, R_dom: float, h0: float = DEFAULT_H0,
                 max_intervals: int = MAX_INTERVALS) -> RadialMesh:
    """Uniform spacing ``h0`` if it fits in ``max_intervals`` cells, otherwise sinh-stretched."""
    intervals = int(math.ceil(R_dom / h0))
    if intervals <= max_intervals:
        return RadialMesh.build(R_dom, max(intervals, 64), n)
    return RadialMesh.build(R_dom, max_intervals, n, h0=h0)


def _implicit_bands(mesh: RadialMesh, dt: float, boundary: str) -> np.ndarray:
    """Banded form of ``I - dt L`` for the finite-volume radial Laplacian."""
    V, G = mesh.volumes, mesh.conductance
    m = mesh.size
    ab = np.zeros((3, m))
    diag = np.ones(m)
    diag[:-1] += dt * G / V[:-1]
    diag[1:] += dt * G / V[1:]
    ab[1] = diag
    ab[0, 1:] = -dt * G / V[:-1]
    ab[2, :-1] = -dt * G / V[1:]
    if boundary == "dirichlet":
        ab[1, -1] = 1.0
        ab[2, -2] = 0.0
        ab[0, -1] = 0.0  # coupling to a boundary value that is zero anyway
    return ab


def _reaction(u: np.ndarray, p: np.ndarray) -> np.ndarray:
    return np.abs(np.roll(u, -1, axis=0)) ** p[:, None]


def _solve(ab, rhs, boundary):
    if boundary == "dirichlet":
        rhs = rhs.copy()
        rhs[:, -1] = 0.0
    return solve_banded((1, 1), ab, rhs.T, overwrite_b=True, check_finite=False).T


def _p_array(params) -> np.ndarray:
    if isinstance(params, SystemParams):
        return np.array(params.as_floats())
    return np.asarray([float(x) for x in params])


def _advance(u, p, dt, ab, boundary, scheme, reaction):
    if not reaction:
        return _solve(ab, u, boundary)
    F = _reaction(u, p)
    u_star = _solve(ab, u + dt * F, boundary)
    if scheme == "euler":
        return u_star
    return _solve(ab, u + 0.5 * dt * (F + _reaction(u_star, p)), boundary)


def step(state: FieldState, params, dt: float, scheme: str = "heun",
         reaction: bool = True) -> FieldState:
    """One IMEX step of length ``dt``: implicit diffusion, explicit reaction.

    ``scheme`` is ``"heun"`` (default) or ``"euler"``; ``reaction=False`` gives
    the pure heat flow.
    """
    if not dt > 0:
        raise PreconditionError("dt must be positive")
    if dt < DT_FLOOR:
        raise StabilityFailure(f"dt = {dt!r} below the floor {DT_FLOOR}")
    p = _p_array(params)
    if p.size != state.k:
        raise PreconditionError("params and state disagree on k")
    ab = _implicit_bands(state.mesh, dt, state.boundary)
    u = _advance(state.u, p, dt, ab, state.boundary, scheme, reaction)
    t_hi, e = _two_sum(state.t, dt)
    t_hi, t_lo = _two_sum(t_hi, state.t_lo + e)
    return FieldState(t_hi, u, state.mesh, state.boundary, t_lo)


# -- diagnostics ------------------------------------------------------------


def holder_slack(u: np.ndarray, mesh: RadialMesh, spec: TestFunctionSpec, R: float,
                 p: Sequence[float]) -> float:
    """Smallest relative slack of ``int u_{j+1} phi_R <= R^{n/p'} (int u_{j+1}^{p_j} phi_R)^{1/p_j}``."""
    w = mesh.weights * spec.phi(mesh.r, R)
    n = mesh.n
    worst = math.inf
    for j, pj in enumerate(p):
        v = u[(j + 1) % u.shape[0]]
        lhs = float(w @ v)
        rhs = R ** (n * (1 - 1 / pj)) * float(w @ np.abs(v) ** pj) ** (1 / pj)
        worst = min(worst, float((rhs - lhs) / max(rhs, 1e-300)))
    return worst


@dataclass
class SimReport:
    """Time series from one run; column ``i`` of every trace is sample ``i``."""

    blowup: BlowupEstimate
    t: np.ndarray
    t_lo: np.ndarray
    dt: np.ndarray  # dt[i] = t[i + 1] - t[i], exact to the compensated sum
    trace_radii: tuple
    U: np.ndarray  # radii x components x samples
    sup: np.ndarray  # components x samples
    l1: np.ndarray
    M_trace: np.ndarray
    l_vector: tuple
    params: SystemParams
    R_dom: float
    final: FieldState = field(repr=False)
    decay_exponents: np.ndarray | None = None
    holder_min_slack: float = math.inf
    steps: int = 0

    @property
    def samples(self) -> int:
        return self.t.size

    def time_to_end(self) -> np.ndarray:
        """``t_last - t_i`` summed backwards over the steps, exact for tiny late steps."""
        return np.concatenate((np.cumsum(self.dt[::-1])[::-1], [0.0]))

    def trace_index(self, R: float) -> int:
        for i, r in enumerate(self.trace_radii):
            if abs(r - R) <= 1e-12 * max(abs(R), 1.0):
                return i
        raise InsufficientData(f"no functional trace recorded at R = {R}")


def _extrapolate(dts: np.ndarray, sup: np.ndarray):
    """Blow-up offset from the last sample by a linear fit of ``1 / (log M)'`` over the last decade.

    Times are measured backwards from the last sample with a reverse cumulative
    sum of the steps, so the tiny late steps are not lost against a large ``t``.
    """
    logM = np.log(sup)
    back = np.concatenate((np.cumsum(dts[::-1])[::-1], [0.0]))  # t_last - t_i
    top = sup[-1]
    idx = np.nonzero(sup >= top / 10)[0]
    idx = idx[idx > 0]
    if idx.size < 5:
        idx = np.arange(max(1, sup.size - 6), sup.size)
    h = dts[idx - 1]
    rate = (logM[idx] - logM[idx - 1]) / h
    tm = -(back[idx] + 0.5 * h)
    keep = rate > 0
    if keep.sum() < 3:
        raise InsufficientData("too few growing samples to extrapolate blow-up")
    slope, icpt = np.polyfit(tm[keep], 1.0 / rate[keep], 1)
    if not slope < 0:
        raise InsufficientData("sup-norm growth is not of power-law type")
    return -icpt / slope, -1.0 / slope


def run(u0, params: SystemParams, spec: TestFunctionSpec, horizon: float, *,
        mesh: RadialMesh | None = None, R_dom: float | None = None, h0: float = DEFAULT_H0,
        max_intervals: int = MAX_INTERVALS,
        boundary: str = "dirichlet", trace_radii: Sequence[float] = (),
        eta: float = 0.05, theta: float = 0.02, growth: float = 1.25,
        sup_escape: float = SUP_ESCAPE, l_vector: Sequence | None = None,
        scheme: str = "heun", reaction: bool = True, decay_window: float = 0.5,
        max_steps: int = 1_000_000) -> SimReport:
    """Simulate until the sup-norm reaches ``sup_escape`` or ``horizon`` is reached.

    ``u0`` is an :class:`InitialData`, a :class:`FieldState`, or a callable
    ``r -> (k, len(r))`` array. The step is the smallest of ``eta / rho`` with
    ``rho = max_j |F_j|_inf / |u_j|_inf`` (relative growth rate), ``theta (t + t_ref)``
    (keeps the diffusive transient resolved) and ``growth`` times the last step.
    """
    if params.n != spec.n:
        raise PreconditionError("params and test function disagree on n")
    if not horizon > 0:
        raise PreconditionError("horizon must be positive")
    k = params.k
    p = _p_array(params)
    if isinstance(u0, FieldState):
        state = u0
        mesh = state.mesh
    else:
        if mesh is None:
            support = u0.support if isinstance(u0, InitialData) else 8.0
            if R_dom is None:
                R_dom = domain_radius(support, horizon, max(trace_radii, default=None))
            mesh = default_mesh(params.n, R_dom, h0, max_intervals)
        vals = u0.values(mesh.r, k) if isinstance(u0, InitialData) else np.asarray(u0(mesh.r), float)
        vals = np.array(vals, dtype=float).reshape(k, mesh.size)
        if boundary == "dirichlet":
            vals[:, -1] = 0.0
        state = FieldState(0.0, vals, mesh, boundary)
    if np.any(state.u < 0) or not np.all(np.isfinite(state.u)):
        raise PreconditionError("initial data must be finite and nonnegative")
    if any(R > mesh.r_max * (1 + 1e-12) for R in trace_radii):
        raise PreconditionError("a trace radius lies beyond the computational domain")

    if l_vector is None:
        prof = compute_alpha(params) if not params.degenerate else None
        l_vector = tuple(float(x) for x in prof.active_l()) if prof else (0.0,) * k
    l_arr = np.asarray(l_vector, dtype=float)
    half_n = params.n / 2
    W = np.zeros((len(trace_radii), mesh.size))
    for i, R in enumerate(trace_radii):
        W[i] = mesh.weights * spec.phi(mesh.r, R)

    ts, tls, dts = [], [], []
    Us, sups, l1s, Ms = [], [], [], []
    holder_min = math.inf
    M_run = 0.0

    def record(st: FieldState):
        nonlocal M_run, holder_min
        ts.append(st.t)
        tls.append(st.t_lo)
        Us.append(W @ st.u.T)
        s, l1 = st.sup(), st.l1()
        sups.append(s)
        l1s.append(l1)
        tt = 1.0 + st.t
        M_run = max(M_run, float(np.sum(tt**l_arr * s + tt ** (l_arr - half_n) * l1)))
        Ms.append(M_run)
        for R in trace_radii:
            holder_min = min(holder_min, holder_slack(st.u, mesh, spec, R, p))

    record(state)
    t_ref = float(np.min(np.diff(mesh.r))) ** 2
    dt_prev = theta * t_ref
    u = state.u
    t_hi, t_lo = state.t, state.t_lo
    escaped = False
    steps = 0
    while steps < max_steps:
        remaining = (horizon - t_hi) - t_lo
        if remaining <= 1e-14 * horizon:
            break
        t = t_hi + t_lo
        dt = min(growth * dt_prev, theta * (t + t_ref), remaining)
        if reaction:
            s = u.max(axis=1)
            F = _reaction(u, p).max(axis=1)
            live = s > 0
            rho = float(np.max(F[live] / s[live])) if np.any(live) else 0.0
            if rho > 0:
                dt = min(dt, eta / rho)
        if dt < DT_FLOOR:
            raise StabilityFailure(f"explicit reaction forces dt = {dt!r} at t = {t!r}")
        ab = _implicit_bands(mesh, dt, boundary)
        u = _advance(u, p, dt, ab, boundary, scheme, reaction)
        if not np.all(np.isfinite(u)):
            raise StabilityFailure(f"non-finite values at t = {t!r}")
        t_hi, e = _two_sum(t_hi, dt)
        t_hi, t_lo = _two_sum(t_hi, t_lo + e)
        dts.append(dt)
        dt_prev = dt
        steps += 1
        cur = FieldState(t_hi, u, mesh, boundary, t_lo)
        record(cur)
        if float(u.max()) >= sup_escape:
            escaped = True
            break
    else:
        raise StabilityFailure("maximum number of steps exceeded")

    sup_arr = np.array(sups).T
    dts_arr = np.array(dts)
    decay = None
    if escaped:
        jstar = int(np.argmax(sup_arr[:, -1]))
        tau, b = _extrapolate(dts_arr, sup_arr[jstar])
        T_hi, T_lo = _two_sum(t_hi, tau)
        T_lo += t_lo
        T_num = T_hi + T_lo
        blow = BlowupEstimate(T_num, (t_hi, T_num + max(tau, math.ulp(t_hi))), b,
                              float(sup_arr[:, -1].max()), T_lo=(T_hi - T_num) + T_lo)
    else:
        blow = BlowupEstimate(GlobalUpTo(horizon), (t_hi, math.inf), math.nan,
                              float(sup_arr[:, -1].max()))
        tarr = np.array(ts)
        sel = tarr >= decay_window * horizon
        if sel.sum() >= 5 and np.all(sup_arr[:, sel] > 0):
            lt = np.log(tarr[sel])
            decay = np.array([-np.polyfit(lt, np.log(sup_arr[j, sel]), 1)[0] for j in range(k)])
    return SimReport(
        blowup=blow,
        t=np.array(ts),
        t_lo=np.array(tls),
        dt=dts_arr,
        trace_radii=tuple(float(R) for R in trace_radii),
        U=np.array(Us).reshape(len(ts), len(trace_radii), k).transpose(1, 2, 0),
        sup=sup_arr,
        l1=np.array(l1s).T,
        M_trace=np.array(Ms),
        l_vector=tuple(l_vector),
        params=params,
        R_dom=mesh.r_max,
        final=FieldState(t_hi, u, mesh, boundary, t_lo),
        decay_exponents=decay,
        holder_min_slack=holder_min,
        steps=steps,
    )


@dataclass
class InequalityWitness:
    holds: bool
    first_violation: tuple | None  # (sample index, time, component)
    margins: np.ndarray = field(repr=False)  # lhs - rhs + slack, components x interior samples


def verify_ode_inequality(report: SimReport, spec: TestFunctionSpec, R0: float,
                          Lambda: Sequence[float], slack: float = 1e-6,
                          min_samples: int = 100) -> InequalityWitness:
    """Check ``U_j' + Lambda_j R0^-2 U_j >= R0^{-n(p_j - 1)} U_{j+1}^{p_j}`` along the ``R0`` trace.

    ``U_j'`` is the second-order nonuniform central difference at interior
    samples; each check is allowed ``slack * (1 + |rhs|)``.
    """
    if report.samples < min_samples:
        raise InsufficientData(f"{report.samples} samples, need {min_samples}")
    i = report.trace_index(R0)
    U = report.U[i]
    k = U.shape[0]
    if len(Lambda) != k:
        raise PreconditionError("need one Lambda per component")
    n = spec.n
    p = _p_array(report.params)
    h = report.dt
    hm, hp = h[:-1], h[1:]
    Um, U0, Up = U[:, :-2], U[:, 1:-1], U[:, 2:]
    dU = (hm**2 * Up - hp**2 * Um + (hp**2 - hm**2) * U0) / (hm * hp * (hm + hp))
    lam = np.asarray(Lambda, dtype=float)[:, None]
    lhs = dU + lam / R0**2 * U0
    nxt = np.roll(U0, -1, axis=0)
    rhs = R0 ** (-n * (p[:, None] - 1)) * np.abs(nxt) ** p[:, None]
    margins = lhs - rhs + slack * (1 + np.abs(rhs))
    bad = np.argwhere(~(margins >= 0))
    first = None
    if bad.size:
        order = np.lexsort((bad[:, 0], bad[:, 1]))
        j, s = bad[order[0]]
        first = (int(s + 1), float(report.t[s + 1]), int(j))
    return InequalityWitness(bad.size == 0, first, margins)
