"""Exact critical-exponent algebra for the cyclic system ``u_j' - Lap u_j = |u_{j+1}|^{p_j}``.

Everything here runs on :class:`fractions.Fraction`, so the identities between
the exponent vector, the ``P``/``Q`` sequences and the decay vectors hold with
zero tolerance. Component indices are 0-based in the API; ``p[j]`` couples
component ``j`` to component ``j + 1 (mod k)``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction
from math import prod
from typing import Sequence

from .errors import DomainError, NotSupercritical, SingularSystem

__all__ = [
    "Criticality",
    "SystemParams",
    "ExponentProfile",
    "PQSequences",
    "compute_alpha",
    "compute_pq",
    "blowup_rate_identity",
    "lifespan_exponent",
    "solve_alpha_linear",
    "shift_matrix",
    "parse_exponents",
]


def _as_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, float):
        # floats are taken at face value of their shortest repr, so 1.5 -> 3/2
        return Fraction(repr(x))
    return Fraction(x)


class Criticality(enum.Enum):
    SUBCRITICAL = "subcritical"   # alpha_max < n/2, small data global
    CRITICAL = "critical"
    SUPERCRITICAL = "supercritical"  # alpha_max > n/2, every nontrivial datum blows up


@dataclass(frozen=True)
class SystemParams:
    """Exponents ``p`` (length ``k``) and spatial dimension ``n``."""

    p: tuple
    n: int = 1
    k: int = field(default=None)

    def __post_init__(self):
        p = tuple(_as_fraction(x) for x in self.p)
        object.__setattr__(self, "p", p)
        k = len(p) if self.k is None else int(self.k)
        object.__setattr__(self, "k", k)
        if k < 1 or len(p) != k:
            raise DomainError(f"need k >= 1 exponents matching k, got k={k}, p={p}")
        if any(x < 1 for x in p):
            raise DomainError(f"every p_j must be >= 1, got {p}")
        if int(self.n) != self.n or self.n < 1:
            raise DomainError(f"dimension must be a positive integer, got {self.n}")
        object.__setattr__(self, "n", int(self.n))

    @property
    def degenerate(self) -> bool:
        return all(x == 1 for x in self.p)

    def pj(self, j: int) -> Fraction:
        """Cyclic access ``p_{j mod k}``."""
        return self.p[j % self.k]

    def shifted(self, s: int) -> "SystemParams":
        """Relabel components so that old index ``s`` becomes index 0."""
        s %= self.k
        return SystemParams(self.p[s:] + self.p[:s], self.n)

    def as_floats(self) -> list[float]:
        return [float(x) for x in self.p]


@dataclass(frozen=True)
class ExponentProfile:
    params: SystemParams
    alpha: tuple
    alpha_max: Fraction
    argmax_index: int
    criticality: Criticality

    @property
    def half_n(self) -> Fraction:
        return Fraction(self.params.n, 2)

    def default_epsilon(self) -> Fraction:
        """Half the available slack in ``(1 + eps) alpha_max < n/2``, capped at 1."""
        if self.criticality is not Criticality.SUBCRITICAL:
            raise DomainError("epsilon is only defined in the subcritical regime")
        slack = self.half_n / self.alpha_max - 1
        return min(Fraction(1), slack / 2)

    def l_case1(self, eps=None) -> tuple:
        """Decay vector ``(1 + eps) alpha`` for small-data global solutions."""
        if eps is None:
            eps = self.default_epsilon()
        eps = _as_fraction(eps)
        if eps <= 0 or (1 + eps) * self.alpha_max >= self.half_n:
            raise DomainError(f"eps={eps} does not satisfy (1+eps)*alpha_max < n/2")
        return tuple((1 + eps) * a for a in self.alpha)

    @property
    def l_case2(self) -> tuple:
        """Decay vector ``alpha - (alpha_max - n/2)`` used in the lifespan lower bound."""
        shift = self.alpha_max - self.half_n
        return tuple(a - shift for a in self.alpha)

    def active_l(self) -> tuple:
        if self.criticality is Criticality.SUBCRITICAL:
            return self.l_case1()
        return self.l_case2


@dataclass(frozen=True)
class PQSequences:
    P: tuple
    Q: tuple


def shift_matrix(params: SystemParams) -> list[list[Fraction]]:
    """The cyclic weighted shift: row ``j`` holds ``p_j`` in column ``j + 1``."""
    k = params.k
    M = [[Fraction(0)] * k for _ in range(k)]
    for j in range(k):
        M[j][(j + 1) % k] += params.p[j]
    return M


def solve_alpha_linear(params: SystemParams) -> tuple:
    """Solve ``(P - I) alpha = 1`` by exact Gauss-Jordan elimination."""
    k = params.k
    A = shift_matrix(params)
    for j in range(k):
        A[j][j] -= 1
        A[j].append(Fraction(1))
    for col in range(k):
        pivot = next((r for r in range(col, k) if A[r][col] != 0), None)
        if pivot is None:
            raise SingularSystem("P - I is singular")
        A[col], A[pivot] = A[pivot], A[col]
        inv = 1 / A[col][col]
        A[col] = [x * inv for x in A[col]]
        for r in range(k):
            if r != col and A[r][col] != 0:
                factor = A[r][col]
                A[r] = [x - factor * y for x, y in zip(A[r], A[col])]
    return tuple(A[j][k] for j in range(k))


def _alpha_closed_form(params: SystemParams) -> tuple:
    k = params.k
    denom = prod(params.p) - 1
    alpha = []
    for j in range(k):
        num = Fraction(1)
        run = Fraction(1)
        for h in range(k - 1):
            run *= params.pj(j + h)
            num += run
        alpha.append(num / denom)
    return tuple(alpha)


def _classify(alpha_max: Fraction, n: int) -> Criticality:
    half = Fraction(n, 2)
    if alpha_max < half:
        return Criticality.SUBCRITICAL
    if alpha_max == half:
        return Criticality.CRITICAL
    return Criticality.SUPERCRITICAL


def compute_alpha(params: SystemParams) -> ExponentProfile:
    """Critical exponent vector from the closed form, checked against the linear solve.

    Ties in ``alpha_max`` go to the smallest index.
    """
    if params.degenerate:
        raise SingularSystem("p = (1, ..., 1) makes P - I singular")
    alpha = _alpha_closed_form(params)
    check = solve_alpha_linear(params)
    if alpha != check:  # pragma: no cover - would indicate an algebra bug
        raise AssertionError(f"closed form {alpha} disagrees with linear solve {check}")
    amax = max(alpha)
    jmax = alpha.index(amax)
    return ExponentProfile(params, alpha, amax, jmax, _classify(amax, params.n))


def compute_pq(params: SystemParams) -> PQSequences:
    """``P`` and ``Q`` sequences for ``k >= 2``, with their identities asserted.

    ``P[j]`` is the 0-based storage of ``P_{j+1}``. The last entries are
    ``P_k = p_k + 1`` and ``Q_k = 1``.
    """
    k = params.k
    if k < 2:
        raise DomainError("P/Q sequences are defined for k >= 2")
    p = params.p
    # defining sums, read off directly
    P, Q = [None] * k, [None] * k
    P[k - 1], Q[k - 1] = p[k - 1] + 1, Fraction(1)
    for j in range(1, k):
        i = k - 1 - j
        run, sp, sq = Fraction(1), Fraction(1), Fraction(1)
        for h in range(j + 1):
            run *= p[i + h]
            sp += run
            if h < j:
                sq += run
        P[i], Q[i] = sp, sq
    prof = compute_alpha(params)
    d = P[0] - Q[0] - 1
    checks = [P[i] == p[i] * P[i + 1] + 1 and Q[i] == p[i] * Q[i + 1] + 1 for i in range(k - 1)]
    checks += [P[i] - Q[i] == prod(p[i:]) for i in range(k)]
    checks += [prof.alpha[0] == Q[0] / d, prof.alpha[1] == P[1] / d]
    if not all(checks):  # pragma: no cover - would indicate an algebra bug
        raise AssertionError(f"P/Q identities fail for p={p}")
    return PQSequences(tuple(P), tuple(Q))


def blowup_rate_identity(params: SystemParams) -> list[bool]:
    """Check ``p_{j-1} alpha_j - 1 == alpha_{j-1}`` cyclically, exactly.

    Entry ``j`` refers to the identity whose right side is ``alpha_{j-1}``.
    """
    alpha = compute_alpha(params).alpha
    k = params.k
    return [params.pj(j - 1) * alpha[j] - 1 == alpha[(j - 1) % k] for j in range(k)]


def lifespan_exponent(profile: ExponentProfile) -> Fraction:
    """Predicted log-log slope ``-1 / (alpha_max - n/2)`` of lifespan against data size."""
    gap = profile.alpha_max - profile.half_n
    if gap <= 0:
        raise NotSupercritical(f"alpha_max = {profile.alpha_max} <= n/2 = {profile.half_n}")
    return -1 / gap


def parse_exponents(values: Sequence) -> tuple:
    """Parse ``"2, 3/2"``-style input into Fractions."""
    if isinstance(values, str):
        values = [v for v in values.replace(";", ",").split(",") if v.strip()]
    return tuple(_as_fraction(v.strip() if isinstance(v, str) else v) for v in values)
