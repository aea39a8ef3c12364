"""Closed-form constants of the fractional one-phase problem and quadrature
checks of the integral identities behind them."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

IDENTITY_IDS = (
    "beta1",
    "beta2",
    "beta3",
    "beta4",
    "sphere",
    "trigA",
    "trigB",
    "gamma_s3",
    "duplication",
)


def check_order(s: float) -> float:
    s = float(s)
    if not (0.0 < s < 1.0) or not math.isfinite(s):
        raise ValueError(f"order s must lie in (0, 1), got {s!r}")
    return s


@dataclass(frozen=True)
class Params:
    """Dimension and order, with the derived weight exponent and Lambda."""

    n: int
    s: float

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"dimension must be a positive integer, got {self.n!r}")
        check_order(self.s)

    @property
    def a(self) -> float:
        return 1.0 - 2.0 * self.s

    @property
    def lambda_const(self) -> float:
        return math.gamma(1.0 + self.s)


def sphere_area(k: int) -> float:
    """Surface measure of the unit sphere S^k in R^{k+1}; |S^0| = 2."""
    if k < 0:
        raise ValueError("sphere dimension must be >= 0")
    return 2.0 * math.pi ** ((k + 1) / 2.0) / math.gamma((k + 1) / 2.0)


def c_ns(p: Params) -> float:
    """Normalising constant of the fractional Laplacian in R^n."""
    n, s = p.n, p.s
    return (
        s
        * 2.0 ** (2 * s)
        * math.gamma((n + 2 * s) / 2.0)
        / (math.pi ** (n / 2.0) * math.gamma(1.0 - s))
    )


def bar_cs(s: float) -> float:
    """(-Delta)^s of the half-line profile t_+^s evaluated at t = -1."""
    s = check_order(s)
    return -math.gamma(1.0 + s) / math.gamma(1.0 - s)


def expansion_constants(s: float) -> tuple[float, float, float]:
    s = check_order(s)
    c0 = -math.gamma(1.0 + s) / math.gamma(1.0 - s)
    cstar = s * math.gamma(1.0 + s) / math.gamma(2.0 - s)
    c1s = math.gamma(2.0 + s) / math.gamma(2.0 - s)
    return c0, cstar, c1s


def d_s(s: float) -> float:
    s = check_order(s)
    return 2.0 ** (2 * s - 1) * math.gamma(s) / math.gamma(1.0 - s)


@dataclass(frozen=True)
class IdentityReport:
    identity_id: str
    s: float
    n: int | None
    lhs: float
    rhs: float
    residual: float
    quadrature_error_estimate: float
    tol: float
    converged: bool = True

    @property
    def passed(self) -> bool:
        return (
            self.converged
            and math.isfinite(self.residual)
            and self.residual <= self.tol
        )


# Each identity returns (lhs, quad_err, rhs, converged).  Endpoint blow-up
# is removed by integrating against an algebraic weight (QUADPACK qaws),
# with the remaining factor written so it stays finite at both ends.

_QUAD = dict(epsabs=1e-14, epsrel=1e-12, limit=200)


def _qaws(f, a, b, alpha, beta):
    with np.errstate(all="ignore"):
        val, err, *rest = integrate.quad(
            f, a, b, weight="alg", wvar=(alpha, beta), full_output=1, **_QUAD
        )
    ok = len(rest) < 2 or not rest[1]
    return val, err, ok


def _beta1(s, n):
    val, err, ok = _qaws(lambda t: 1.0, 0.0, 1.0, s, -s)
    return val, err, math.gamma(1 + s) * math.gamma(1 - s), ok


def _beta2(s, n):
    # Map (0,1) onto (0,inf) with t = u/(1+u): integrand u^s (1+u)^{-2}.
    # A different route from beta1 although the integrands coincide.
    f = lambda u: u**s / (1.0 + u) ** 2
    with np.errstate(all="ignore"):
        v1, e1, *r1 = integrate.quad(
            lambda u: 1.0 / (1.0 + u) ** 2, 0.0, 1.0,
            weight="alg", wvar=(s, 0.0), full_output=1, **_QUAD,
        )
        v2, e2, *r2 = integrate.quad(f, 1.0, np.inf, full_output=1, **_QUAD)
    ok = (len(r1) < 2 or not r1[1]) and (len(r2) < 2 or not r2[1])
    return v1 + v2, e1 + e2, s * math.gamma(s) * math.gamma(1 - s), ok


def _beta3(s, n):
    val, err, ok = _qaws(lambda t: t, 0.0, 1.0, s, -s)
    return val, err, 0.5 * math.gamma(2 + s) * math.gamma(1 - s), ok


def _beta4(s, n):
    val, err, ok = _qaws(lambda t: 1.0 - t, 0.0, 1.0, s, -s)
    return val, err, 0.5 * math.gamma(1 + s) * math.gamma(2 - s), ok


def _sphere(s, n):
    if n is None or n < 2:
        raise ValueError("identity 'sphere' needs n >= 2")
    half = 0.5 * math.pi

    def f(p):
        # sin(p)/p and cos(p)/(pi/2 - p), both finite on [0, pi/2]
        r1 = np.sinc(p / math.pi)
        r2 = np.sinc((half - p) / math.pi)
        return r1 ** (n - 2) * r2 ** (2 * s)

    val, err, ok = _qaws(f, 0.0, half, float(n - 2), 2 * s)
    area = sphere_area(n - 2)
    rhs = (
        area
        * math.gamma((n - 1) / 2.0)
        * math.gamma(s + 0.5)
        / math.gamma(n / 2.0 + s)
    )
    return 2 * area * val, 2 * area * err, rhs, ok


def _trig_factor(th, s):
    # (1+cos)^{2s} sin^{1-2s} / (th^{1-2s} (pi-th)^{1+2s}), finite on [0, pi]
    u = math.pi - th
    half_cos = 0.5 * np.sinc(u / (2 * math.pi)) ** 2
    sin_ratio = (np.sinc(th / math.pi) + np.sinc(u / math.pi)) / math.pi
    return half_cos ** (2 * s) * sin_ratio ** (1 - 2 * s)


def _trigA(s, n):
    f = lambda th: _trig_factor(th, s) * (math.cos(th) - 1.0)
    val, err, ok = _qaws(f, 0.0, math.pi, 1 - 2 * s, 1 + 2 * s)
    return val, err, -2 * math.pi * s * (1 - s) / math.sin(math.pi * s), ok


def _trigB(s, n):
    f = lambda th: _trig_factor(th, s) * math.cos(th)
    val, err, ok = _qaws(f, 0.0, math.pi, 1 - 2 * s, 1 + 2 * s)
    return val, err, 2 * math.pi * s**2 / math.sin(math.pi * s), ok


def _gamma_s3(s, n):
    rhs = (
        d_s(s)
        / (math.gamma(1 + s) * math.gamma(s))
        * 2.0 ** (-2 * s)
        * 2
        * math.pi
        * s**4
        / math.sin(math.pi * s)
    )
    return s**3, 0.0, rhs, True


def _duplication(s, n):
    # Gamma(2s) from the Euler integral, split at 1
    v1, e1, ok1 = _qaws(lambda t: math.exp(-t), 0.0, 1.0, 2 * s - 1, 0.0)
    with np.errstate(all="ignore"):
        v2, e2, *r2 = integrate.quad(
            lambda t: t ** (2 * s - 1) * math.exp(-t), 1.0, np.inf,
            full_output=1, **_QUAD,
        )
    ok = ok1 and (len(r2) < 2 or not r2[1])
    rhs = (
        math.gamma(s)
        * math.gamma(s + 0.5)
        * 2.0 ** (2 * s - 1)
        / math.sqrt(math.pi)
    )
    return v1 + v2, e1 + e2, rhs, ok


_IDENTITIES = {
    "beta1": _beta1,
    "beta2": _beta2,
    "beta3": _beta3,
    "beta4": _beta4,
    "sphere": _sphere,
    "trigA": _trigA,
    "trigB": _trigB,
    "gamma_s3": _gamma_s3,
    "duplication": _duplication,
}


def verify_identity(
    identity_id: str, s: float, n: int | None = None, tol: float = 1e-8
) -> IdentityReport:
    """Compare a quadrature value against its closed form.

    Quadrature that QUADPACK reports as not converged comes back with
    ``converged=False`` and therefore never passes.
    """
    s = check_order(s)
    try:
        fn = _IDENTITIES[identity_id]
    except KeyError:
        raise ValueError(
            f"unknown identity {identity_id!r}; choose from {IDENTITY_IDS}"
        ) from None
    lhs, qerr, rhs, ok = fn(s, n)
    residual = abs(lhs - rhs)
    return IdentityReport(
        identity_id=identity_id,
        s=s,
        n=n if identity_id == "sphere" else None,
        lhs=float(lhs),
        rhs=float(rhs),
        residual=float(residual),
        quadrature_error_estimate=float(abs(qerr)),
        tol=float(tol),
        converged=bool(ok) and math.isfinite(lhs),
    )


def identity_suite(s_values, sphere_dims=(2, 3, 4, 5), tol=1e-8):
    reports = []
    for s in s_values:
        for iid in IDENTITY_IDS:
            if iid == "sphere":
                reports.extend(verify_identity(iid, s, n, tol) for n in sphere_dims)
            else:
                reports.append(verify_identity(iid, s, None, tol))
    return reports
