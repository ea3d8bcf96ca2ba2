"""Adaptive integration of cyclic blow-up ODE systems.

The system is ``f_j' = C_j |f_{j+1}|^{p_j}`` for ``j < k - 1`` and
``f_{k-1}' = C_{k-1} e^{-lt} |f_0|^{p_{k-1}}`` (0-based, cyclic). Integration uses
the Dormand-Prince 5(4) pair with step rejection. Once a component passes the
escape level the crossing is located by bisection on the last step and the
blow-up time is extrapolated from the final decade of growth of ``f_0``.

Time is accumulated as an unevaluated sum ``t + t_lo`` so that steps far below
``ulp(t)`` near the singularity still advance the clock.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import InsufficientData, PreconditionError, ToleranceFailure

__all__ = [
    "OdeSystemSpec",
    "GlobalUpTo",
    "BlowupEstimate",
    "Trajectory",
    "ComparisonWitness",
    "integrate",
    "comparison_check",
    "rate_probe",
    "extrapolate_blowup",
    "ode_alpha",
]

M_ESC = 1e12

_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B5 = np.array(_A[6] + [0.0])
_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
_E = _B5 - _B4


def _two_sum(a: float, b: float) -> tuple[float, float]:
    s = a + b
    bb = s - a
    return s, (a - (s - bb)) + (b - bb)


@dataclass(frozen=True)
class OdeSystemSpec:
    p: tuple
    coefficients: tuple
    lambda_tilde: float
    initial: tuple

    def __post_init__(self):
        object.__setattr__(self, "p", tuple(float(x) for x in self.p))
        object.__setattr__(self, "coefficients", tuple(float(x) for x in self.coefficients))
        object.__setattr__(self, "initial", tuple(float(x) for x in self.initial))
        k = len(self.p)
        if k < 1 or len(self.coefficients) != k or len(self.initial) != k:
            raise PreconditionError("p, coefficients and initial must have the same length k >= 1")
        if any(x < 1 for x in self.p):
            raise PreconditionError("exponents must be >= 1")
        if any(c <= 0 for c in self.coefficients):
            raise PreconditionError("coefficients must be positive")
        if any(v < 0 for v in self.initial):
            raise PreconditionError("initial data must be nonnegative")
        if self.lambda_tilde < 0:
            raise PreconditionError("lambda_tilde must be nonnegative")

    @property
    def k(self) -> int:
        return len(self.p)

    def rhs(self, t: float, f: np.ndarray) -> np.ndarray:
        p = np.asarray(self.p)
        c = np.asarray(self.coefficients)
        out = c * np.abs(np.roll(f, -1)) ** p
        if self.lambda_tilde:
            out[-1] *= math.exp(-self.lambda_tilde * t)
        return out


def ode_alpha(p: Sequence[float]) -> np.ndarray:
    """Blow-up rate exponents ``alpha_j`` for real exponents (closed form)."""
    p = [float(x) for x in p]
    k = len(p)
    denom = math.prod(p) - 1.0
    if denom <= 0:
        raise PreconditionError("all exponents equal to 1")
    out = []
    for j in range(k):
        num, run = 1.0, 1.0
        for h in range(k - 1):
            run *= p[(j + h) % k]
            num += run
        out.append(num / denom)
    return np.array(out)


@dataclass(frozen=True)
class GlobalUpTo:
    horizon: float


@dataclass(frozen=True)
class BlowupEstimate:
    T_num: float | GlobalUpTo
    bracket: tuple
    extrapolation_exponent: float
    achieved_max: float
    T_lo: float = 0.0  # low part of T_num, pairs with Trajectory.t_lo

    def __post_init__(self):
        if not isinstance(self.T_num, GlobalUpTo):
            object.__setattr__(self, "T_num", float(self.T_num))
        object.__setattr__(self, "bracket", tuple(float(x) for x in self.bracket))
        for name in ("extrapolation_exponent", "achieved_max", "T_lo"):
            object.__setattr__(self, name, float(getattr(self, name)))

    @property
    def blew_up(self) -> bool:
        return not isinstance(self.T_num, GlobalUpTo)


@dataclass
class Trajectory:
    t: np.ndarray
    t_lo: np.ndarray
    y: np.ndarray
    dy: np.ndarray
    rejected: int = 0

    def remaining(self, T_hi: float, T_lo: float = 0.0) -> np.ndarray:
        """``T - t`` for every sample, using the compensated time parts."""
        return (T_hi - self.t) + (T_lo - self.t_lo)

    def at(self, times) -> np.ndarray:
        """Cubic Hermite interpolation of the accepted steps."""
        times = np.atleast_1d(np.asarray(times, dtype=float))
        if np.any(times < self.t[0]) or np.any(times > self.t[-1]):
            raise ValueError("interpolation outside the integrated range")
        idx = np.clip(np.searchsorted(self.t, times, side="right") - 1, 0, len(self.t) - 2)
        t0, t1 = self.t[idx], self.t[idx + 1]
        h = t1 - t0
        with np.errstate(divide="ignore", invalid="ignore"):
            s = np.where(h > 0, (times - t0) / h, 0.0)[:, None]
        y0, y1 = self.y[idx], self.y[idx + 1]
        d0, d1 = self.dy[idx] * h[:, None], self.dy[idx + 1] * h[:, None]
        h00 = 2 * s**3 - 3 * s**2 + 1
        h10 = s**3 - 2 * s**2 + s
        h01 = -2 * s**3 + 3 * s**2
        h11 = s**3 - s**2
        return h00 * y0 + h10 * d0 + h01 * y1 + h11 * d1


def _dp_step(rhs, t, y, h, k1):
    ks = [k1]
    for i in range(1, 7):
        yi = y + h * sum(a * kk for a, kk in zip(_A[i], ks))
        ks.append(rhs(t + _C[i] * h, yi))
    y5 = y + h * sum(b * kk for b, kk in zip(_B5, ks))
    err = h * sum(e * kk for e, kk in zip(_E, ks))
    return y5, err, ks[-1]


def _run(rhs, y0, horizon, rtol, atol, m_esc, watch, max_steps=2_000_000, monotone=True):
    """Core Dormand-Prince loop. ``watch`` selects components tested against ``m_esc``."""
    y = np.array(y0, dtype=float)
    t_hi, t_lo = 0.0, 0.0
    f = rhs(0.0, y)
    sc = atol + rtol * np.abs(y)
    d0, d1 = np.max(np.abs(y) / sc), np.max(np.abs(f) / sc)
    h = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    h = min(h, horizon)
    ts, tls, ys, dys = [0.0], [0.0], [y.copy()], [f.copy()]
    rejected = 0
    escaped = False
    for _ in range(max_steps):
        remaining = (horizon - t_hi) - t_lo
        # a rounding residue at the horizon counts as arrival
        if remaining <= 1e-15 * max(horizon, 1.0):
            break
        h = min(h, remaining)
        t = t_hi + t_lo
        # underflow means the step can no longer move the state, not merely h < ulp(t)
        if h < 1e-12 * max(abs(t), 1.0) and h * float(np.max(np.abs(f) / (np.abs(y) + atol))) < 1e-14:
            raise ToleranceFailure(f"step size underflow at t={t!r}, h={h!r}")
        y_new, err, f_new = _dp_step(rhs, t, y, h, f)
        scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
        en = float(np.max(np.abs(err) / scale)) if np.all(np.isfinite(y_new)) else np.inf
        if not en <= 1.0:
            rejected += 1
            h *= 0.2 if not np.isfinite(en) else max(0.2, 0.9 * en ** -0.2)
            continue
        if monotone and np.any(y_new < y - 1e-12 * np.abs(y) - atol):
            raise ToleranceFailure(f"monotonicity lost at t={t!r}")
        if np.max(y_new[watch]) >= m_esc:
            # bisection on the step length for the crossing of the escape level
            lo, hi = 0.0, h
            y_cross, f_cross = y_new, f_new
            for _ in range(200):
                mid = 0.5 * (lo + hi)
                if mid in (lo, hi):
                    break
                y_mid, _, f_mid = _dp_step(rhs, t, y, mid, f)
                if np.max(y_mid[watch]) >= m_esc:
                    hi, y_cross, f_cross = mid, y_mid, f_mid
                else:
                    lo = mid
                if (hi - lo) <= 1e-14 * hi:
                    break
            h = hi
            y_new, f_new = y_cross, f_cross
            escaped = True
        t_hi, e = _two_sum(t_hi, h)
        t_lo += e
        t_hi, t_lo = _two_sum(t_hi, t_lo)
        y, f = y_new, f_new
        ts.append(t_hi)
        tls.append(t_lo)
        ys.append(y.copy())
        dys.append(f.copy())
        if escaped:
            break
        h *= min(5.0, max(0.2, 0.9 * (en if en > 0 else 1e-10) ** -0.2))
    else:
        raise ToleranceFailure("maximum number of steps exceeded")
    traj = Trajectory(np.array(ts), np.array(tls), np.array(ys), np.array(dys), rejected)
    return traj, escaped


def _decade_window(values: np.ndarray, decades: float = 1.0) -> np.ndarray:
    top = values[-1]
    return np.nonzero(values >= top * 10.0 ** (-decades))[0]


def extrapolate_blowup(traj: Trajectory, component: int = 0, decades: float = 1.0):
    """Blow-up time from the log-derivative over the final growth decade.

    For ``f ~ c (T - t)^{-b}`` the ratio ``f / f'`` equals ``(T - t) / b``, which
    is linear in ``t``; a least-squares line gives both ``T`` and ``b``.
    Returns ``(T_hi, T_lo, b, samples_used)``.
    """
    f = traj.y[:, component]
    df = traj.dy[:, component]
    idx = _decade_window(f, decades)
    idx = idx[df[idx] > 0]
    if idx.size < 3:
        idx = np.arange(max(0, len(f) - 5), len(f))
        idx = idx[df[idx] > 0]
    ref = idx[0]
    tau = (traj.t[idx] - traj.t[ref]) + (traj.t_lo[idx] - traj.t_lo[ref])
    g = f[idx] / df[idx]
    slope, icpt = np.polyfit(tau, g, 1)
    if not slope < 0:
        raise InsufficientData("no power-law approach in the fit window")
    tau_star = -icpt / slope
    T_hi, T_lo = _two_sum(traj.t[ref], tau_star)
    return T_hi, T_lo + traj.t_lo[ref], -1.0 / slope, idx.size


def integrate(spec: OdeSystemSpec, horizon: float, rel_tol: float = 1e-10,
              m_esc: float = M_ESC) -> tuple[Trajectory, BlowupEstimate]:
    """Integrate until a component reaches ``m_esc`` or ``horizon`` is reached."""
    if not 1e-12 < rel_tol < 1e-2:
        raise PreconditionError("rel_tol must lie in (1e-12, 1e-2)")
    if not horizon > 0:
        raise PreconditionError("horizon must be positive")
    scale = max(max(spec.initial), 1e-300)
    atol = rel_tol * 1e-6 * scale
    traj, escaped = _run(spec.rhs, spec.initial, horizon, rel_tol, atol, m_esc, slice(None))
    peak = float(np.max(traj.y[-1]))
    if not escaped:
        return traj, BlowupEstimate(GlobalUpTo(horizon), (traj.t[-1], math.inf), math.nan, peak)
    T_hi, T_lo, b, _ = extrapolate_blowup(traj, 0)
    t_low = traj.t[-1]
    gap = (T_hi - t_low) + (T_lo - traj.t_lo[-1])
    if gap <= 0:  # extrapolation landed inside the last step
        gap = abs(gap) + math.ulp(t_low)
        T_hi, T_lo = _two_sum(t_low, gap)
        T_lo += traj.t_lo[-1]
    est = BlowupEstimate(T_hi + T_lo, (t_low, T_hi + T_lo + gap), b, peak, T_lo=(T_hi - (T_hi + T_lo)) + T_lo)
    return traj, est


@dataclass
class ComparisonWitness:
    holds: bool
    first_violation: tuple | None  # (t, component) or None
    times: np.ndarray = field(repr=False)
    gaps: np.ndarray = field(repr=False)  # f - g at every accepted step
    rel_tol: float = 0.0


def comparison_check(spec_f: OdeSystemSpec, spec_g: OdeSystemSpec, horizon: float,
                     rel_tol: float = 1e-10, retries: int = 2) -> ComparisonWitness:
    """Integrate both systems on one step sequence and test ``f_j > g_j`` for ``t > 0``.

    A violation is retried at a tighter tolerance before being reported.
    """
    if spec_f.p != spec_g.p or spec_f.lambda_tilde != spec_g.lambda_tilde:
        raise PreconditionError("systems must share exponents and lambda_tilde")
    cf, cg = np.array(spec_f.coefficients), np.array(spec_g.coefficients)
    f0, g0 = np.array(spec_f.initial), np.array(spec_g.initial)
    if np.any(cf < cg):
        raise PreconditionError("coefficients of f must dominate those of g")
    if np.any(f0 < g0) or not np.any(f0 > g0):
        raise PreconditionError("need f(0) >= g(0) with strict inequality somewhere")
    k = spec_f.k

    def rhs(t, y):
        return np.concatenate([spec_f.rhs(t, y[:k]), spec_g.rhs(t, y[k:])])

    y0 = np.concatenate([f0, g0])
    tol = rel_tol
    for attempt in range(retries + 1):
        atol = tol * 1e-6 * max(float(np.max(y0)), 1e-300)
        traj, _ = _run(rhs, y0, horizon, tol, atol, M_ESC, slice(0, k))
        gaps = traj.y[1:, :k] - traj.y[1:, k:]
        bad = np.argwhere(~(gaps > 0))
        if bad.size == 0 or attempt == retries:
            break
        tol = max(tol / 100, 1.0001e-12)
    first = None
    if bad.size:
        i, j = bad[0]
        first = (float(traj.t[i + 1]), int(j))
    return ComparisonWitness(bad.size == 0, first, traj.t[1:], gaps, tol)


def rate_probe(spec: OdeSystemSpec, alpha=None, horizon: float = 1e6, rel_tol: float = 1e-10,
               min_samples: int = 20) -> np.ndarray:
    """Fitted slopes of ``log f_j`` against ``log(T_num - t)`` over each final growth decade.

    Blow-up near ``T_num`` at rate ``(T - t)^{-alpha_j}`` gives slopes ``-alpha_j``.
    ``alpha`` is accepted for symmetry with the theory but not used in the fit.
    """
    traj, est = integrate(spec, horizon, rel_tol)
    if not est.blew_up:
        raise InsufficientData("no blow-up detected within the horizon")
    rem = traj.remaining(est.T_num, est.T_lo)
    slopes = []
    for j in range(spec.k):
        idx = _decade_window(traj.y[:, j])
        idx = idx[rem[idx] > 0]
        if idx.size < min_samples:
            raise InsufficientData(f"component {j}: {idx.size} samples in the fit window")
        s, _ = np.polyfit(np.log(rem[idx]), np.log(traj.y[idx, j]), 1)
        slopes.append(s)
    return np.array(slopes)
