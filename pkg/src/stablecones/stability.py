"""Radial stability check H1 <= m(0) for critical cones, the planar Hardy
experiment, and the admissible-exponent arithmetic behind the dimension
bound."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import _quad
from .cone import Cone, cap_measure
from .constants import check_order
from .exponent import MeshControls, find_aperture
from .kernel import KernelConfig, cached_kernel_table, h1, mellin_m0
from .wos import McEstimate

INSTABILITY = "instability_certified"
CONSISTENT = "consistent_with_stability"
INCONCLUSIVE = "inconclusive"

DISCLAIMER = (
    "consistent_with_stability only means H1 <= m(0) at 3 sigma for radial "
    "perturbations at the zero Mellin frequency; it is not a stability proof."
)

# walks for H1 use a seed offset so that they are independent of the table
H1_SEED_OFFSET = 1_000_003


def verdict(h1_value: float, m0_value: float, sigma: float, degraded: bool = False) -> str:
    """Three-valued verdict with 3 sigma gates."""
    if degraded or not all(map(math.isfinite, (h1_value, m0_value, sigma))):
        return INCONCLUSIVE
    if h1_value - m0_value > 3.0 * sigma:
        return INSTABILITY
    if m0_value - h1_value > 3.0 * sigma:
        return CONSISTENT
    return INCONCLUSIVE


@dataclass(frozen=True)
class StabilityConfig:
    kernel: KernelConfig = field(default_factory=KernelConfig)
    mesh: MeshControls = field(default_factory=MeshControls)
    aperture_tol: float = 1e-3
    use_cache: bool = True


@dataclass
class StabilityReport:
    n: int
    s: float
    beta_star: float
    h1: McEstimate
    m0: McEstimate
    margin: float
    combined_sigma: float
    verdict: str
    provenance: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["note"] = DISCLAIMER
        return d

    def summary(self) -> str:
        lines = [
            f"n={self.n} s={self.s} beta*={self.beta_star:.10g}",
            f"H1   = {self.h1.value:.6g} +- {self.h1.std_err:.3g}",
            f"m(0) = {self.m0.value:.6g} +- {self.m0.std_err:.3g}",
            f"margin m(0) - H1 = {self.margin:.6g} ({self.combined_sigma:.3g} combined sigma)",
            f"verdict: {self.verdict}",
        ]
        for w in (*self.h1.warnings, *self.m0.warnings):
            lines.append(f"warning: {w}")
        lines.append(DISCLAIMER)
        return "\n".join(lines)


def check_stability(n: int, s: float, cfg: StabilityConfig = StabilityConfig()) -> StabilityReport:
    """Critical aperture, kernel table, H1 and m(0) for C(beta_{n,s})."""
    if int(n) != n or n < 2:
        raise ValueError("n must be an integer >= 2")
    s = check_order(s)
    ap = find_aperture(n, s, tol=cfg.aperture_tol, controls=cfg.mesh, use_cache=cfg.use_cache)
    cone = Cone(n, ap.beta)
    prov = {
        "aperture": {"beta": ap.beta, "residual": ap.residual, "mesh": ap.mesh, "cache_key": ap.cache_key},
        "kernel_config": cfg.kernel.signature(),
    }
    if n == 2:
        m0 = McEstimate(0.0, 0.0, 0)
        prov["m0"] = "analytic: the integrand vanishes identically for n = 2"
    else:
        table, key, hit = cached_kernel_table(cone, s, cfg.kernel, cfg.use_cache)
        m0 = mellin_m0(table, n)
        prov["kernel_table"] = {"cache_key": key, "from_cache": hit, "seed": table.seed, "paths": table.paths}
    hcfg = cfg.kernel.replace(wos=cfg.kernel.wos.replace(seed=cfg.kernel.wos.seed + H1_SEED_OFFSET))
    est = h1(cone, s, hcfg)
    prov["h1"] = {"seed": hcfg.wos.seed, "paths": hcfg.wos.paths}
    sigma = math.hypot(est.std_err, m0.std_err)
    return StabilityReport(
        n=int(n), s=s, beta_star=ap.beta, h1=est, m0=m0, margin=m0.value - est.value,
        combined_sigma=sigma, verdict=verdict(est.value, m0.value, sigma, est.degraded or m0.degraded),
        provenance=prov,
    )


# ---------------------------------------------------------------- planar Hardy


def smooth_step(t):
    """C-infinity cutoff: 0 for t <= 1/2, 1 for t >= 1."""
    u = np.clip(2.0 * np.asarray(t, float) - 1.0, 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore"):
        a = np.where(u > 0, np.exp(-1.0 / u), 0.0)
        b = np.where(u < 1, np.exp(-1.0 / (1.0 - u)), 0.0)
    return a / (a + b)


def zeta(R: float, t):
    """1 on [0, R], linear down to 0 on [R, 2R], 0 beyond."""
    return np.clip((2.0 * R - np.asarray(t, float)) / R, 0.0, 1.0)


def hardy_lhs(R: float, rays: float = 4.0) -> float:
    """sum over the rays of int_{1/2}^inf f_R(r)^2 / r dr with
    f_R = smooth_step * zeta_R, for R >= 1."""
    if R < 1.0:
        raise ValueError("R must be at least 1")
    cut, _ = _quad.integrate(lambda r: smooth_step(r) ** 2 / r, [0.5, 1.0], level=6)
    # int_R^{2R} ((2R - r)/R)^2 dr / r = 4 ln 2 - 5/2
    return rays * (cut + math.log(R) + 4.0 * math.log(2.0) - 2.5)


def hardy_rhs(R: float, level: int = 5) -> float:
    """int_0^inf int_0^inf (zeta_R(t) - zeta_R(tau))^2 / (t - tau)^2 by
    nested quadrature on [0, 2R]^2 plus the exact tail tau > 2R."""
    bps = [0.0, R, 2.0 * R]

    def inner(tau):
        tau = np.atleast_1d(tau)
        out = np.empty(tau.size)
        for i, tt in enumerate(tau):
            def g(t, tt=tt):
                d = t - tt
                with np.errstate(invalid="ignore", divide="ignore"):
                    q = (zeta(R, t) - zeta(R, tt)) ** 2 / d**2
                # the difference quotient is 1/R^2 or 0 where both lie in one piece
                return np.where(d == 0, 0.0, q)

            pts = sorted({0.0, R, 2.0 * R, float(tt)})
            out[i] = _quad.integrate(g, pts, level)[0]
        return out

    square, _ = _quad.integrate(inner, bps, level)
    # for tau > 2R: int_{2R}^inf dtau / (tau - t)^2 = 1 / (2R - t), twice by symmetry
    tail, _ = _quad.integrate(lambda t: zeta(R, t) ** 2 / (2.0 * R - t), bps, level)
    return float(square + 2.0 * tail)


@dataclass
class HardyScanResult:
    R_grid: list
    lhs_values: list
    rhs_values: list
    fitted_log_slope: float
    rays: float


def hardy_2d_demo(s: float = 0.5, R_list=(1e2, 1e3, 1e4), level: int = 5, aperture_kw: dict | None = None) -> HardyScanResult:
    """Hardy term versus seminorm of f_R on the rays of the planar critical
    cone.  The Hardy term grows like (ray count) * ln R while the seminorm
    stays bounded."""
    s = check_order(s)
    ap = find_aperture(2, s, **(aperture_kw or {}))
    rays = cap_measure(Cone(2, ap.beta))
    R = [float(r) for r in R_list]
    lhs = [hardy_lhs(r, rays) for r in R]
    rhs = [hardy_rhs(r, level) for r in R]
    slope = float(np.polyfit(np.log(R), lhs, 1)[0]) if len(R) >= 2 else float("nan")
    return HardyScanResult(R, lhs, rhs, slope, float(rays))


# ---------------------------------------------------------------- dimension bound


def alpha_feasibility(n: int):
    """Open interval of alpha with n - 2 alpha - 2 < 0 and n > 2 + alpha^2,
    i.e. ((n - 2)/2, sqrt(n - 2)); None when empty."""
    if int(n) != n or n < 3:
        raise ValueError("n must be an integer >= 3")
    lo, hi = 0.5 * (n - 2), math.sqrt(n - 2)
    return (lo, hi) if lo < hi else None


def max_unstable_dimension() -> int:
    """Largest n with a nonempty admissible alpha interval."""
    n = 3
    while alpha_feasibility(n + 1) is not None:
        n += 1
    return n
