"""Principal Dirichlet eigenfunction of the unit ball and the weights built from it.

``psi`` is normalised to unit mass over the ball and extended by zero; the
weights are ``phi_R(x) = psi(|x|/R)**2`` and the functionals are
``U_{j,R}(t) = int u_j(t, x) phi_R(x) dx``. Only radial profiles are needed, so
everything is a function of ``r = |x|``.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import log, pi
from typing import Callable

import numpy as np
from scipy import special

from .errors import MeshTooCoarse, NoRoot, NotSupercritical, UnsupportedDimension
from .mesh import simpson_weights, sphere_area

__all__ = [
    "TestFunctionSpec",
    "build_psi",
    "bessel_j0_root",
    "radial_integral",
    "weighted_mass",
    "initial_functional",
    "solve_R0",
]

MIN_NODES_INSIDE = 32
NODES_PER_UNIT = 512


def bessel_j0_root(tol: float = 1e-15) -> float:
    """First positive zero of ``J_0`` by bisection on the bracket ``[2, 3]``."""
    a, b = 2.0, 3.0
    fa = special.j0(a)
    while b - a > tol * b:
        m = 0.5 * (a + b)
        if m in (a, b):
            break
        fm = special.j0(m)
        if (fm > 0) == (fa > 0):
            a, fa = m, fm
        else:
            b = m
    return 0.5 * (a + b)


def _sinc_derivs(x):
    """``g = sin(x)/x`` and its first two derivatives, with series near 0."""
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < 1e-2
    xs = np.where(small, 1.0, x)
    s, c = np.sin(xs), np.cos(xs)
    g = np.where(small, 1 - x**2 / 6 + x**4 / 120, s / xs)
    g1 = np.where(small, -x / 3 + x**3 / 30 - x**5 / 840, (xs * c - s) / xs**2)
    g2 = np.where(
        small,
        -1 / 3 + x**2 / 10 - x**4 / 168,
        (-(xs**2) * s - 2 * xs * c + 2 * s) / xs**3,
    )
    return g, g1, g2


@dataclass(frozen=True)
class TestFunctionSpec:
    """Radial eigenfunction data for dimension ``n`` (1, 2 or 3).

    ``lam`` is twice the principal Dirichlet eigenvalue, matching
    ``-Lap psi = (lam / 2) psi``.
    """

    __test__ = False  # not a pytest class

    n: int
    lam: float
    bessel_root: float | None = None

    @property
    def eigenvalue(self) -> float:
        return 0.5 * self.lam

    # -- profile and derivatives, zero outside the unit ball ----------------
    def _raw(self, s):
        s = np.asarray(s, dtype=float)
        if self.n == 1:
            a = pi / 2
            return (pi / 4) * np.cos(a * s), -(pi / 4) * a * np.sin(a * s), -(pi / 4) * a * a * np.cos(a * s)
        if self.n == 3:
            g, g1, g2 = _sinc_derivs(pi * s)
            return (pi / 4) * g, (pi**2 / 4) * g1, (pi**3 / 4) * g2
        j = self.bessel_root
        c = j / (2 * pi * special.j1(j))
        z = j * s
        J0, J1 = special.j0(z), special.j1(z)
        zs = np.where(z == 0, 1.0, z)
        J1_over_z = np.where(z == 0, 0.5, J1 / zs)
        return c * J0, -c * j * J1, -c * j * j * (J0 - J1_over_z)

    def psi(self, r):
        r = np.abs(np.asarray(r, dtype=float))
        v, _, _ = self._raw(np.minimum(r, 1.0))
        return np.where(r < 1.0, v, 0.0)

    def dpsi(self, r):
        r = np.abs(np.asarray(r, dtype=float))
        _, d1, _ = self._raw(np.minimum(r, 1.0))
        return np.where(r < 1.0, d1, 0.0)

    def d2psi(self, r):
        r = np.abs(np.asarray(r, dtype=float))
        _, _, d2 = self._raw(np.minimum(r, 1.0))
        return np.where(r < 1.0, d2, 0.0)

    def laplacian_psi(self, r):
        """Radial Laplacian ``psi'' + (n-1) psi'/r`` (limit ``n psi''(0)`` at the origin)."""
        r = np.abs(np.asarray(r, dtype=float))
        d1, d2 = self.dpsi(r), self.d2psi(r)
        if self.n == 1:
            return d2
        rs = np.where(r == 0, 1.0, r)
        return np.where(r == 0, self.n * d2, d2 + (self.n - 1) * d1 / rs)

    # -- scaled weights ------------------------------------------------------
    def phi(self, r, R: float):
        return self.psi(np.asarray(r, dtype=float) / R) ** 2

    def neg_laplacian_phi(self, r, R: float):
        """``-Lap phi_R`` from the product rule, without using the eigen relation."""
        s = np.abs(np.asarray(r, dtype=float)) / R
        val = -2.0 * (self.dpsi(s) ** 2 + self.psi(s) * self.laplacian_psi(s)) / R**2
        return np.where(s < 1.0, val, 0.0)

    def phi_inequality_slack(self, r, R: float, factor: float = 1.0):
        """``factor * lam R^-2 phi_R + Lap phi_R``; nonnegative where the inequality holds."""
        return factor * self.lam / R**2 * self.phi(r, R) - self.neg_laplacian_phi(r, R)

    # -- diagnostics ---------------------------------------------------------
    def eigen_residual(self, r=None) -> float:
        """Max of ``|-Lap psi - (lam/2) psi|`` over interior nodes."""
        if r is None:
            r = np.linspace(0.0, 1.0, NODES_PER_UNIT + 1)[:-1]
        r = np.asarray(r, dtype=float)
        r = r[r < 1.0]
        return float(np.max(np.abs(-self.laplacian_psi(r) - self.eigenvalue * self.psi(r))))

    def fd_eigen_residual(self, intervals: int) -> float:
        """Eigen residual with the second-order central-difference radial Laplacian."""
        h = 1.0 / intervals
        r = np.linspace(0.0, 1.0, intervals + 1)
        u = self.psi(r)
        ri = r[1:-1]
        lap = (u[2:] - 2 * u[1:-1] + u[:-2]) / h**2
        if self.n > 1:
            lap = lap + (self.n - 1) / ri * (u[2:] - u[:-2]) / (2 * h)
        return float(np.max(np.abs(-lap - self.eigenvalue * u[1:-1])))

    def mass(self, nodes_per_unit: int = NODES_PER_UNIT) -> float:
        """Quadrature value of ``int psi`` over the unit ball (should be 1)."""
        return radial_integral(self.psi, 1.0, self.n, nodes_per_unit)

    def l2_norm_sq(self) -> float:
        return radial_integral(lambda r: self.psi(r) ** 2, 1.0, self.n)

    def profile_table(self, points: int = 101) -> np.ndarray:
        """Columns r, psi, psi', -Lap psi - (lam/2) psi."""
        r = np.linspace(0.0, 1.0, points)
        res = -self.laplacian_psi(r) - self.eigenvalue * self.psi(r)
        res[-1] = 0.0
        return np.column_stack([r, self.psi(r), self.dpsi(r), res])


def build_psi(n: int) -> TestFunctionSpec:
    """Closed-form principal eigenfunction for ``n`` in {1, 2, 3}."""
    if n == 1:
        return TestFunctionSpec(1, pi**2 / 2)
    if n == 2:
        j = bessel_j0_root()
        return TestFunctionSpec(2, 2 * j * j, j)
    if n == 3:
        return TestFunctionSpec(3, 2 * pi**2)
    raise UnsupportedDimension(f"closed-form eigenfunctions only for n <= 3, got n={n}")


def radial_integral(f: Callable, r_max: float, n: int, nodes_per_unit: int = NODES_PER_UNIT,
                    min_intervals: int = 256) -> float:
    """``int_{|x| < r_max} f(|x|) dx`` by composite Simpson on a uniform radial mesh."""
    m = max(min_intervals, int(np.ceil(nodes_per_unit * r_max)))
    m += m % 2
    r = np.linspace(0.0, r_max, m + 1)
    w = simpson_weights(m) * (r_max / m) * r ** (n - 1)
    return float(sphere_area(n) * np.dot(w, f(r)))


def weighted_mass(field, spec: TestFunctionSpec, R: float, j: int) -> float:
    """``U_{j,R}`` of a field on a radial mesh: ``int u_j phi_R dx``.

    ``field`` needs ``mesh`` (a :class:`~lifespan_lab.mesh.RadialMesh`) and
    ``u`` (components by nodes). Values beyond the mesh are taken as zero.
    """
    if R <= 0:
        raise ValueError("R must be positive")
    mesh = field.mesh
    if mesh.nodes_inside(R) < MIN_NODES_INSIDE:
        raise MeshTooCoarse(f"only {mesh.nodes_inside(R)} nodes inside R={R}")
    return float(np.dot(mesh.weights * spec.phi(mesh.r, R), field.u[j]))


def initial_functional(u0: Callable, spec: TestFunctionSpec, R: float,
                       support: float | None = None) -> float:
    """``int u0(|x|) phi_R(x) dx`` for a radial callable, integrating over ``[0, min(R, support)]``."""
    if R <= 0:
        return 0.0
    top = R if support is None else min(R, support)
    return radial_integral(lambda r: u0(r) * spec.phi(r, R), top, spec.n)


def solve_R0(U0_curve: Callable[[float], float], alpha_j0, n: int,
             chain_threshold: Callable[[float], float], rtol: float = 1e-10,
             start: float = 1.0) -> float:
    """Unique root of ``U0_curve(R) = chain_threshold(R)`` by bracketing bisection in ``log R``.

    ``U0_curve`` must be nondecreasing and vanish as ``R -> 0``;
    ``chain_threshold`` must be strictly decreasing.
    """
    if not float(alpha_j0) > n / 2:
        raise NotSupercritical(f"alpha_j0 = {alpha_j0} must exceed n/2 = {n / 2}")

    def gap(logR):
        R = np.exp(logR)
        u = U0_curve(R)
        if u <= 0:
            return -np.inf
        return log(u) - log(chain_threshold(R))

    lo = hi = log(start)
    g = gap(lo)
    step = log(2.0)
    if g < 0:
        while True:
            hi += step
            if hi > 690:
                raise NoRoot("U0 stays below the threshold for every radius")
            if gap(hi) >= 0:
                lo = hi - step
                break
    else:
        while True:
            lo -= step
            if lo < -690:
                raise NoRoot("U0 stays above the threshold as R -> 0")
            if gap(lo) < 0:
                hi = lo + step
                break
    tol = float(np.log1p(rtol))
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if gap(mid) < 0:
            lo = mid
        else:
            hi = mid
    return float(np.exp(0.5 * (lo + hi)))

