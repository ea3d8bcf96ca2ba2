"""Explicit constant chain for cyclic differential inequalities and the lifespan upper bound.

For ``f_j' >= C_j f_{j+1}^{p_j}`` (``j < k``) and ``f_k' >= C_k e^{-lt} f_1^{p_k}``
the chain ``A_j``, ``L_j`` and the constant ``Ctilde`` give a closed-form
minorant of ``f_1`` that blows up at an explicit time ``T0_tilde`` once ``f_2(0)``
exceeds a threshold. Instantiating the chain with the functionals ``U_{j,R}``
of a heat system yields the upper bound ``T0`` on its lifespan.

Real arithmetic is carried in logarithms, since the ``A_j`` form exponent
towers. Passing ``dps`` switches to mpmath at that many decimal digits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

import mpmath
import numpy as np

from .errors import BelowThreshold, DomainError, NotSupercritical, ZeroLambda
from .exponents import PQSequences, SystemParams, compute_alpha, compute_pq
from .test_function import solve_R0

__all__ = [
    "ChainConstants",
    "MinorantResult",
    "UpperBoundResult",
    "recover_p",
    "build_chain",
    "minorant",
    "pde_upper_bound",
    "radius_chain",
    "scaling_quantity",
]

RECURRENCE_RTOL = 1e-12


class _Float:
    log = staticmethod(math.log)
    exp = staticmethod(math.exp)
    log1p = staticmethod(math.log1p)

    @staticmethod
    def num(x):
        return float(x)


class _MP:
    def __init__(self, dps):
        self.ctx = mpmath.mp.clone()
        self.ctx.dps = dps

    def num(self, x):
        if isinstance(x, Fraction):
            return self.ctx.mpf(x.numerator) / x.denominator
        return self.ctx.mpf(x)

    def log(self, x):
        return self.ctx.log(x)

    def exp(self, x):
        return self.ctx.exp(x)

    def log1p(self, x):
        return self.ctx.log1p(x)


def _backend(dps):
    return _Float if dps is None else _MP(dps)


def recover_p(pq: PQSequences) -> tuple:
    """Exponents from the ``P`` sequence: ``p_k = P_k - 1``, ``p_j = (P_j - 1) / P_{j+1}``."""
    P = pq.P
    k = len(P)
    return tuple((P[j] - 1) / P[j + 1] for j in range(k - 1)) + (P[k - 1] - 1,)


@dataclass(frozen=True)
class ChainConstants:
    p: tuple
    pq: PQSequences
    Ctilde_j: tuple
    lambda_tilde: float
    log_A: tuple
    L: tuple
    dps: int | None = None

    @property
    def k(self) -> int:
        return len(self.p)

    @property
    def A(self) -> tuple:
        bk = _backend(self.dps)
        return tuple(bk.exp(a) for a in self.log_A)

    @property
    def log_Ctilde(self):
        if not self.lambda_tilde > 0:
            raise ZeroLambda("Ctilde needs lambda_tilde > 0 (L_1 = 0)")
        bk = _backend(self.dps)
        P, Q, p = self.pq.P, self.pq.Q, self.p
        P1, Q1, P2 = bk.num(P[0]), bk.num(Q[0]), bk.num(P[1])
        return (
            -bk.log(self.L[0])
            + bk.log(bk.num(P[0] - Q[0] - 1))
            - bk.num(p[0]) * (P2 - 1) / Q1 * bk.log(bk.num(2))
            + (bk.log(P1) + self.log_A[0]) / Q1
        )

    @property
    def Ctilde(self):
        return _backend(self.dps).exp(self.log_Ctilde)


def build_chain(pq: PQSequences, Ctilde_j: Sequence, lambda_tilde, dps: int | None = None) -> ChainConstants:
    """``A_j`` and ``L_j`` by the backward recurrences, checked against the product formulas."""
    p = recover_p(pq)
    k = len(p)
    if k < 2:
        raise DomainError("the chain needs k >= 2")
    if len(Ctilde_j) != k or any(not c > 0 for c in Ctilde_j):
        raise DomainError("need k strictly positive coefficients")
    if lambda_tilde < 0:
        raise DomainError("lambda_tilde must be nonnegative")
    bk = _backend(dps)
    P = [bk.num(x) for x in pq.P]
    pf = [bk.num(x) for x in p]
    logc = [bk.log(bk.num(c)) - bk.log(Pj) for c, Pj in zip(Ctilde_j, P)]  # log(C_j / P_j)
    lam = bk.num(lambda_tilde)

    log_A = [None] * k
    L = [None] * k
    log_A[k - 1], L[k - 1] = logc[k - 1], lam
    for i in range(k - 2, -1, -1):
        log_A[i] = logc[i] + pf[i] * log_A[i + 1]
        L[i] = pf[i] * L[i + 1]

    # direct product formulas
    for i in range(k - 1):
        direct = logc[i]
        for h in range(i + 1, k):
            e = bk.num(1)
            for m in range(i, h):
                e *= pf[m]
            direct += e * logc[h]
        lam_direct = lam
        for m in range(i, k - 1):
            lam_direct *= pf[m]
        scale = max(abs(direct), abs(log_A[i]), 1)
        if abs(direct - log_A[i]) > RECURRENCE_RTOL * scale:
            raise AssertionError(f"A recurrence mismatch at {i}: {log_A[i]} vs {direct}")
        if abs(lam_direct - L[i]) > RECURRENCE_RTOL * max(abs(lam_direct), 1e-300):
            raise AssertionError(f"L recurrence mismatch at {i}")
    return ChainConstants(p, pq, tuple(Ctilde_j), lambda_tilde, tuple(log_A), tuple(L), dps)


@dataclass(frozen=True)
class MinorantResult:
    """Closed-form lower bound for ``f_1``, valid on ``[0, T0_tilde)``.

    ``minorant(t) = amplitude (e^{-rate t} - e^{-rate T0_tilde})^{-alpha1} - offset``.
    """

    threshold: float
    T0_tilde: float
    offset: float
    amplitude: float
    rate: float
    alpha1: float
    f2_0: float

    def __call__(self, t):
        # amplitude (1 - e^{-rate T})^{-alpha1} == offset, so factor the offset out
        t = np.asarray(t, dtype=float)
        r, T, a = self.rate, self.T0_tilde, self.alpha1
        # the ratio is 1 - q with q = (1 - e^{-rt}) / (1 - e^{-rT}); this form is exactly 0 at t = 0
        with np.errstate(divide="ignore", invalid="ignore"):
            q = np.expm1(-r * t) / math.expm1(-r * T)
            val = self.offset * np.expm1(-a * np.log1p(-q))
        return np.where(t < T, val, np.inf)


def _log_gap_constant(chain: ChainConstants, alpha1, bk):
    """log of ``Ctilde^{-1} A_2^{1/(alpha1 P_2)} C_1^{-Q_2/(alpha1 P_2)}``."""
    P2, Q2 = bk.num(chain.pq.P[1]), bk.num(chain.pq.Q[1])
    a1 = bk.num(alpha1)
    logC1 = bk.log(bk.num(chain.Ctilde_j[0]))
    return -chain.log_Ctilde + chain.log_A[1] / (a1 * P2) - Q2 * logC1 / (a1 * P2)


def log_threshold(chain: ChainConstants, alpha) -> float:
    bk = _backend(chain.dps)
    return bk.num(alpha[1]) * _log_gap_constant(chain, alpha[0], bk)


def minorant(chain: ChainConstants, pq: PQSequences, alpha: Sequence, f2_0) -> MinorantResult:
    """Threshold on ``f_2(0)``, blow-up time ``T0_tilde`` and the minorant of ``f_1``.

    Raises :class:`BelowThreshold` unless ``f2_0`` strictly exceeds the threshold.
    """
    if not f2_0 > 0:
        raise DomainError("f2_0 must be positive")
    if pq != chain.pq:
        raise DomainError("chain was built from different P/Q sequences")
    bk = _backend(chain.dps)
    a1, a2 = bk.num(alpha[0]), bk.num(alpha[1])
    P1, Q1 = bk.num(pq.P[0]), bk.num(pq.Q[0])
    P2, Q2 = bk.num(pq.P[1]), bk.num(pq.Q[1])
    log_c = _log_gap_constant(chain, alpha[0], bk)
    log_thr = a2 * log_c
    log_f = bk.log(bk.num(f2_0))
    threshold = bk.exp(log_thr)
    if not log_f > log_thr:
        raise BelowThreshold(float(threshold), float(f2_0))
    x = bk.exp(log_c - log_f / a2)  # in (0, 1)
    L1 = chain.L[0]
    T0 = -(Q1 / L1) * bk.log1p(-x)
    logC1 = bk.log(bk.num(chain.Ctilde_j[0]))
    offset = bk.exp(-chain.log_A[1] / P2 + (Q2 / P2) * logC1 + (Q1 / P2) * log_f)
    amplitude = bk.exp(-a1 * chain.log_Ctilde)
    return MinorantResult(
        threshold=float(threshold),
        T0_tilde=float(T0),
        offset=float(offset),
        amplitude=float(amplitude),
        rate=float(L1 / Q1),
        alpha1=float(a1),
        f2_0=float(f2_0),
    )


# --------------------------------------------------------------------------
# instantiation with the heat-system functionals


def radius_chain(params: SystemParams, pq: PQSequences, lam: float, R: float,
                 factor: float = 2.0, dps: int | None = None) -> ChainConstants:
    """Chain with ``C_j = R^{-n(p_j - 1)}`` and ``lambda_tilde = factor lam (prod p - 1) R^{-2}``."""
    n = params.n
    C = [R ** (-n * float(pj - 1)) for pj in params.p]
    lt = factor * lam * float(math.prod(params.p) - 1) / R**2
    return build_chain(pq, C, lt, dps)


def scaling_quantity(params: SystemParams, lam: float, R: float, factor: float = 2.0) -> float:
    """``Ctilde^{-1} A_2^{1/(alpha1 P_2)} C_1^{-Q_2/(alpha1 P_2)}`` for the radius-``R`` chain."""
    pq = compute_pq(params)
    alpha = compute_alpha(params).alpha
    chain = radius_chain(params, pq, lam, R, factor)
    return math.exp(_log_gap_constant(chain, alpha[0], _Float))


@dataclass(frozen=True)
class UpperBoundResult:
    R0: float
    T0: float
    Lambda: tuple
    threshold: float
    U_R0: float
    T0_tilde: float
    C0: float
    j0: int
    factor: float


def pde_upper_bound(params: SystemParams, lam: float, U0: Callable[[float], float], j0: int,
                    factor: float = 2.0) -> UpperBoundResult:
    """Lifespan upper bound ``T0`` from the radius ``R0`` where ``U_{j0,R}(0)`` meets the chain threshold.

    ``U0`` maps ``R`` to ``U_{j0,R}(0)``. Components are relabelled so that
    ``j0`` takes the second slot of the chain. A scalar equation is handled as
    the two-component system with equal exponents and equal data, which has
    the same solution in both slots.

    ``factor`` is the multiple of ``lam R^-2`` in the functional inequality:
    2 follows the proof as written, 1 is the sharper constant of the
    eigenfunction identity.
    """
    prof = compute_alpha(params)
    n = params.n
    j0 = j0 % params.k
    a_j0 = prof.alpha[j0]
    if not a_j0 > Fraction(n, 2):
        raise NotSupercritical(f"alpha_{j0} = {a_j0} <= n/2")

    if params.k == 1:
        chain_params = SystemParams((params.p[0], params.p[0]), n)
        shift = 0
        lambdas = (factor * lam,)
    else:
        shift = (j0 - 1) % params.k
        chain_params = params.shifted(shift)
        lambdas = None
    pq = compute_pq(chain_params)
    alpha = compute_alpha(chain_params).alpha
    a2 = float(alpha[1])

    def log_thr(R):
        return log_threshold(radius_chain(chain_params, pq, lam, R, factor), alpha)

    # U = 2^{alpha_2} * threshold(R) is the crossing that makes the log argument 1/2
    R0 = solve_R0(U0, a_j0, n, lambda R: math.exp(a2 * math.log(2.0) + log_thr(R)))
    U_R0 = float(U0(R0))
    chain = radius_chain(chain_params, pq, lam, R0, factor)
    mres = minorant(chain, pq, alpha, U_R0)
    T0 = mres.T0_tilde

    gap = float(a_j0) - n / 2
    # U(R) R^{2 alpha - n} is the same constant at every radius; compare R0 with R = 1
    K0 = math.exp(a2 * math.log(2.0) + log_thr(R0)) * R0 ** (2 * a2 - n)
    K1 = math.exp(a2 * math.log(2.0) + log_thr(1.0))
    if abs(K0 - K1) > 1e-8 * K1:
        raise AssertionError(f"threshold scaling broken: {K0} vs {K1}")
    C0 = T0 * U_R0 ** (1.0 / gap)
    C_T = float(pq.Q[0]) * math.log(2.0) / (chain.L[0] * R0**2)
    if T0 > C_T * (U_R0 / K1) ** (-1.0 / gap) * (1 + 1e-6):
        raise AssertionError("T0 exceeds its scaling-law bound")

    if lambdas is None:
        k = params.k
        rel = [None] * k
        rel[k - 1] = factor * lam
        for j in range(k - 2, -1, -1):
            rel[j] = float(chain_params.p[j]) * rel[j + 1]
        lambdas = tuple(rel[(i - shift) % k] for i in range(k))
    return UpperBoundResult(R0, T0, lambdas, mres.threshold, U_R0, T0, C0, j0, factor)
