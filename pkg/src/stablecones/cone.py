"""Geometry of the axially symmetric cone {|x'| > beta |x_n|} and of cones
over spherical caps.

Every query reduces a point to the half-plane coordinates
(zeta, tau) = (|x'|, x_n).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .constants import sphere_area


def _as_points(x):
    x = np.asarray(x, dtype=float)
    return x, x.ndim == 1


@dataclass(frozen=True)
class Cone:
    """C(beta) = {|x'| > beta |x_n|} in R^n."""

    n: int
    beta: float

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise ValueError("cone dimension must be an integer >= 2")
        if not (self.beta > 0 and math.isfinite(self.beta)):
            raise ValueError("beta must be positive and finite")

    @property
    def edge_angle(self) -> float:
        """Angle between the boundary rays and the x_n axis."""
        return math.atan(self.beta)

    @property
    def ring_radius(self) -> float:
        """|x'| of the boundary points on the unit sphere."""
        return self.beta / math.sqrt(1.0 + self.beta**2)

    @property
    def ring_height(self) -> float:
        return 1.0 / math.sqrt(1.0 + self.beta**2)

    def reduce(self, x):
        x, single = _as_points(x)
        if x.shape[-1] != self.n:
            raise ValueError(f"expected points in R^{self.n}")
        zeta = np.linalg.norm(x[..., :-1], axis=-1)
        return zeta, x[..., -1], single

    def contains(self, x):
        zeta, tau, single = self.reduce(x)
        out = zeta > self.beta * np.abs(tau)
        return bool(out) if single else out


def _reduced_distance(zeta, tau, beta):
    # The complement of C(beta) is convex, so from inside the cone the
    # nearest boundary point is the foot on the line zeta = beta|tau|.
    # From inside the complement the foot lands on the boundary ray unless
    # the point lies past the vertex, in which case the vertex is nearest.
    q = 1.0 / math.sqrt(1.0 + beta * beta)
    line = (zeta - beta * np.abs(tau)) * q
    r = np.hypot(zeta, tau)
    # the foot is on the ray iff the projection onto the ray direction is >= 0
    proj = (beta * zeta + np.abs(tau)) * q
    inside_gap = np.where(proj >= 0, np.abs(line), r)
    return np.where(line >= 0, line, -inside_gap)


def signed_distance(c, x):
    """Signed Euclidean distance to the boundary, positive inside."""
    if isinstance(c, CapCone):
        return c.signed_distance(x)
    zeta, tau, single = c.reduce(x)
    d = _reduced_distance(zeta, tau, c.beta)
    return float(d) if single else d


def boundary_normal(c: Cone, x):
    """Unit inward normal at a boundary point, 0-homogeneous.

    Points off the surface are accepted and receive the normal of the
    nearer sheet; the vertex is rejected.
    """
    x, single = _as_points(x)
    xp = x[..., :-1]
    zeta = np.linalg.norm(xp, axis=-1)
    if np.any(zeta <= 0):
        raise ValueError("the normal is undefined at the vertex")
    tau = x[..., -1]
    q = 1.0 / math.sqrt(1.0 + c.beta**2)
    sgn = np.where(tau >= 0, 1.0, -1.0)
    nu = np.empty_like(x)
    nu[..., :-1] = xp / zeta[..., None] * q
    nu[..., -1] = -c.beta * sgn * q
    return nu


def cap_measure(c: Cone) -> float:
    """(n-2)-measure of the boundary trace on the unit sphere."""
    return 2.0 * sphere_area(c.n - 2) * c.ring_radius ** (c.n - 2)


def chart_point(c: Cone, side: int, rho, omega):
    """Boundary point at distance rho from the vertex on the given sheet.

    ``omega`` is a unit vector in R^{n-1}; ``side`` is +1 or -1.
    """
    if side not in (1, -1):
        raise ValueError("side must be +1 or -1")
    rho = np.asarray(rho, dtype=float)
    omega = np.asarray(omega, dtype=float)
    pt = np.empty(np.broadcast_shapes(rho.shape, omega.shape[:-1]) + (c.n,))
    pt[..., :-1] = (rho * c.ring_radius)[..., None] * omega
    pt[..., -1] = side * rho * c.ring_height
    return pt


def chart_area_density(c: Cone, rho):
    """Surface element per d(rho) d(omega), omega on S^{n-2}."""
    return np.asarray(rho, dtype=float) ** (c.n - 2) * c.ring_radius ** (c.n - 2)


def normal_gap_sq(c: Cone, cos_psi, same_side):
    """|nu(x) - nu(y)|^2 for two boundary points whose x' directions make
    angle psi, on the same or on opposite sheets."""
    b2 = c.beta**2
    base = 2.0 - 2.0 * np.asarray(cos_psi, dtype=float)
    return np.where(same_side, base, base + 4.0 * b2) / (1.0 + b2)


@dataclass(frozen=True)
class CapCone:
    """Cone over the spherical cap {x.e_n > |x| cos theta0}."""

    n: int
    theta0: float

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise ValueError("dimension must be an integer >= 2")
        if not (0.0 < self.theta0 < math.pi):
            raise ValueError("theta0 must lie in (0, pi)")

    def polar(self, x):
        x, single = _as_points(x)
        r = np.linalg.norm(x, axis=-1)
        zeta = np.linalg.norm(x[..., :-1], axis=-1)
        return r, np.arctan2(zeta, x[..., -1]), single

    def contains(self, x):
        _, th, single = self.polar(x)
        out = th < self.theta0
        return bool(out) if single else out

    def signed_distance(self, x):
        r, th, single = self.polar(x)
        gap = th - self.theta0
        d = np.where(np.abs(gap) <= 0.5 * math.pi, r * np.sin(np.abs(gap)), r)
        d = np.where(gap < 0, d, -d)
        return float(d) if single else d
