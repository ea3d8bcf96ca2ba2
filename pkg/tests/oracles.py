"""Independent reference computations used by the tests.

Nothing here imports the package: the oracles re-derive the quantities from
their defining formulas (mpmath at high precision) or integrate with a plain
fixed-step method.
"""

import math

import mpmath


def rk4_cyclic(p, coeff, lam, f0, dt, t_end, cap=math.inf):
    """Classical RK4 at fixed ``dt`` for the cyclic system; stops early once ``max f > cap``.

    Returns lists ``ts`` and ``ys`` (ys[i] is a list of k values).
    """
    k = len(p)

    def rhs(t, f):
        out = [coeff[j] * abs(f[(j + 1) % k]) ** p[j] for j in range(k)]
        out[-1] *= math.exp(-lam * t)
        return out

    t, f = 0.0, list(map(float, f0))
    ts, ys = [t], [f[:]]
    n = int(round(t_end / dt))
    for i in range(n):
        t = i * dt
        k1 = rhs(t, f)
        k2 = rhs(t + dt / 2, [a + dt / 2 * b for a, b in zip(f, k1)])
        k3 = rhs(t + dt / 2, [a + dt / 2 * b for a, b in zip(f, k2)])
        k4 = rhs(t + dt, [a + dt * b for a, b in zip(f, k3)])
        f = [a + dt / 6 * (b + 2 * c + 2 * d + e) for a, b, c, d, e in zip(f, k1, k2, k3, k4)]
        ts.append((i + 1) * dt)
        ys.append(f[:])
        if max(f) > cap:
            break
    return ts, ys


def chain_oracle(p, C, lam, f2_0, dps=40):
    """Threshold, blow-up time and minorant parameters straight from the closed forms."""
    mp = mpmath.mp.clone()
    mp.dps = dps
    k = len(p)
    p = [mp.mpf(x) for x in p]
    C = [mp.mpf(x) for x in C]
    # P_k = p_k + 1, Q_k = 1, P_j = p_j P_{j+1} + 1, Q_j = p_j Q_{j+1} + 1
    P, Q = [None] * k, [None] * k
    P[-1], Q[-1] = p[-1] + 1, mp.mpf(1)
    for j in range(k - 2, -1, -1):
        P[j] = p[j] * P[j + 1] + 1
        Q[j] = p[j] * Q[j + 1] + 1
    A, L = [None] * k, [None] * k
    A[-1], L[-1] = C[-1] / P[-1], mp.mpf(lam)
    for j in range(k - 2, -1, -1):
        A[j] = C[j] / P[j] * A[j + 1] ** p[j]
        L[j] = p[j] * L[j + 1]
    d = P[0] - Q[0] - 1
    a1, a2 = Q[0] / d, P[1] / d
    Ct = (1 / L[0]) * d * mp.power(2, -p[0] * (P[1] - 1) / Q[0]) * (P[0] * A[0]) ** (1 / Q[0])
    c = (1 / Ct) * A[1] ** (1 / (a1 * P[1])) * C[0] ** (-Q[1] / (a1 * P[1]))
    thr = c**a2
    x = c * mp.mpf(f2_0) ** (-1 / a2)
    T0 = -(Q[0] / L[0]) * mp.log(1 - x) if x < 1 else mp.inf
    return dict(P=P, Q=Q, A=A, L=L, Ctilde=Ct, threshold=thr, T0=T0, alpha1=a1, alpha2=a2)


def bessel_zero():
    return float(mpmath.besseljzero(0, 1))
