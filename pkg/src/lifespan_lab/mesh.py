"""Radial meshes on ``[0, r_max]`` with Simpson quadrature and finite-volume geometry.

Nodes are the image of a uniform grid ``xi in [0, 1]`` under either the identity
(uniform mesh) or ``r = r_max * sinh(beta * xi) / sinh(beta)``, which is nearly
uniform near the origin and geometric far out. The smooth map keeps composite
Simpson in ``xi`` high order and the finite-volume Laplacian second order.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from math import gamma, pi

import numpy as np
from scipy.optimize import brentq

__all__ = ["RadialMesh", "sphere_area", "simpson_weights"]


def sphere_area(n: int) -> float:
    """Surface measure of the unit sphere in R^n (2 for n = 1)."""
    return 2.0 * pi ** (n / 2) / gamma(n / 2)


def simpson_weights(m: int) -> np.ndarray:
    """Composite Simpson weights on ``m + 1`` unit-spaced points, ``m`` even."""
    if m < 2 or m % 2:
        raise ValueError(f"Simpson needs an even number of intervals, got {m}")
    w = np.ones(m + 1)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return w / 3.0


@dataclass(frozen=True)
class RadialMesh:
    r: np.ndarray
    n: int
    jacobian: np.ndarray  # dr/dxi at the nodes
    beta: float = 0.0

    @classmethod
    def build(cls, r_max: float, intervals: int, n: int, h0: float | None = None) -> "RadialMesh":
        """Mesh with ``intervals`` (even) cells; stretched if ``h0`` is below the uniform spacing."""
        if intervals % 2:
            intervals += 1
        xi = np.linspace(0.0, 1.0, intervals + 1)
        uniform_h = r_max / intervals
        if h0 is None or h0 >= uniform_h * (1 - 1e-12):
            return cls(r_max * xi, n, np.full_like(xi, r_max), 0.0)
        target = h0 * intervals / r_max  # beta / sinh(beta) at the origin
        beta = brentq(lambda b: b / np.sinh(b) - target, 1e-8, 700.0, xtol=1e-14)
        s = np.sinh(beta)
        r = r_max * np.sinh(beta * xi) / s
        r[-1] = r_max
        jac = r_max * beta * np.cosh(beta * xi) / s
        return cls(r, n, jac, float(beta))

    @property
    def size(self) -> int:
        return self.r.size

    @property
    def r_max(self) -> float:
        return float(self.r[-1])

    @cached_property
    def weights(self) -> np.ndarray:
        """Simpson weights for ``int f dx`` over the ball, surface factor included."""
        m = self.r.size - 1
        dxi = 1.0 / m
        return sphere_area(self.n) * simpson_weights(m) * dxi * self.jacobian * self.r ** (self.n - 1)

    @cached_property
    def faces(self) -> np.ndarray:
        return 0.5 * (self.r[1:] + self.r[:-1])

    @cached_property
    def volumes(self) -> np.ndarray:
        """Control volumes (surface factor included) around each node."""
        n = self.n
        edges = np.concatenate(([0.0], self.faces, [self.r[-1]]))
        return sphere_area(n) * (edges[1:] ** n - edges[:-1] ** n) / n

    @cached_property
    def conductance(self) -> np.ndarray:
        """Face flux coefficients ``|S| r_f^{n-1} / (r_{i+1} - r_i)``."""
        return sphere_area(self.n) * self.faces ** (self.n - 1) / np.diff(self.r)

    def nodes_inside(self, R: float) -> int:
        return int(np.count_nonzero(self.r < R))
