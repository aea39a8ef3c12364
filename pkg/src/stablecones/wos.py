"""Walk-on-spheres Monte Carlo for the isotropic 2s-stable process.

From the centre of a ball of radius r the process exits at distance
R = r sqrt(1 + G1/G2), G1 ~ Gamma(1-s), G2 ~ Gamma(s), in a uniform
direction.  A chain jumps from ball to ball until it lands outside the
domain.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from . import _kernels as K
from .cone import CapCone, Cone
from .constants import check_order


class VarianceWarning(UserWarning):
    pass


@dataclass(frozen=True)
class Ball:
    center: tuple
    radius: float

    @property
    def n(self) -> int:
        return len(self.center)


@dataclass(frozen=True)
class HalfSpace:
    """{x_n > 0} in R^n."""

    n: int


@dataclass(frozen=True)
class WosConfig:
    seed: int = 0
    paths: int = 100_000
    ball_fraction: float = 0.5
    max_steps: int = 10_000
    batch_size: int = 10_000
    vertex_radius: float = 1e-3

    def __post_init__(self):
        if self.paths < 1:
            raise ValueError("paths must be >= 1")
        if not 0.0 < self.ball_fraction < 1.0:
            raise ValueError("ball_fraction must lie in (0, 1)")
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")

    def replace(self, **kw) -> "WosConfig":
        return WosConfig(**{**self.__dict__, **kw})


@dataclass(frozen=True)
class McEstimate:
    value: float
    std_err: float
    n_samples: int
    truncated_fraction: float = 0.0
    vertex_fraction: float = 0.0
    mean_steps: float = 0.0
    warnings: tuple = ()
    degraded: bool = False


@dataclass(frozen=True)
class GreenEstimate:
    x: tuple
    y: tuple
    value: float
    std_err: float
    n_samples: int
    truncated_fraction: float = 0.0
    method: str = "exit"
    warnings: tuple = ()


def domain_code(domain):
    if isinstance(domain, Cone):
        return K.CONE, np.array([domain.beta]), domain.n
    if isinstance(domain, Ball):
        return K.BALL, np.array([*domain.center, domain.radius], float), domain.n
    if isinstance(domain, HalfSpace):
        return K.HALFSPACE, np.zeros(1), domain.n
    if isinstance(domain, CapCone):
        return K.CAPCONE, np.array([domain.theta0]), domain.n
    raise TypeError(f"unsupported domain {domain!r}")


def distance(domain, x) -> np.ndarray:
    kind, prm, _ = domain_code(domain)
    x = np.atleast_2d(np.asarray(x, float))
    return K._dist_np(kind, prm, x)


def exit_density_constant(n: int, s: float) -> float:
    """C in the centre-start exit density C r^{2s} / ((|z|^2 - r^2)^s |z|^n)."""
    return math.gamma(n / 2.0) * math.sin(math.pi * s) / math.pi ** (n / 2.0 + 1.0)


def batch_stats(sums: np.ndarray, sizes: np.ndarray):
    """Mean and standard error from per-batch sums and batch sizes."""
    sums = np.asarray(sums, float)
    sizes = np.asarray(sizes, float)
    N = sizes.sum()
    mean = sums.sum(axis=0) / N
    B = sizes.size
    if B < 2:
        return mean, np.full_like(mean, np.inf)
    means = sums / sizes.reshape((-1,) + (1,) * (sums.ndim - 1))
    dev = means - mean
    var = np.sum((sizes.reshape(dev.shape[:1] + (1,) * (dev.ndim - 1)) * dev) ** 2, axis=0) / N**2
    return mean, np.sqrt(var * B / (B - 1))


def batch_sizes(paths: int, batch: int) -> np.ndarray:
    nb = -(-paths // batch)
    sizes = np.full(nb, batch)
    sizes[-1] = paths - batch * (nb - 1)
    return sizes


# ---------------------------------------------------------------- ball exit


def radial_exit_cdf(n: int, s: float, rho) -> np.ndarray:
    """P(|exit| <= rho) for a centre start in the unit ball.

    With w = 1/rho^2 the radial density integrates to the regularised
    incomplete beta function I_{1-w}(1-s, s)."""
    rho = np.asarray(rho, float)
    w = np.where(rho > 1, 1.0 / np.maximum(rho, 1.0) ** 2, 1.0)
    return special.betainc(1.0 - s, s, 1.0 - w)


def sample_ball_exit(center, radius, s, samples=1, seed=0, start=None):
    """Exit points of the ball B(center, radius) for the 2s-stable process.

    Centre starts use the exact radial law; off-centre starts use rejection
    against it.  Returns (points, rejections).
    """
    s = check_order(s)
    center = np.asarray(center, float)
    n = center.size
    st = np.zeros(n) if start is None else np.asarray(start, float) - center
    if np.linalg.norm(st) >= radius:
        raise ValueError("start must lie strictly inside the ball")
    pts, rejections = K.ball_exit(n, s, st, radius, samples, seed)
    return pts + center, int(rejections)


# ---------------------------------------------------------------- Dirichlet


def exit_points(domain, x, s, cfg: WosConfig):
    kind, prm, n = domain_code(domain)
    x = np.asarray(x, float)
    if x.size != n:
        raise ValueError("point dimension does not match the domain")
    if distance(domain, x)[0] <= 0:
        raise ValueError("start point must be interior")
    vr = cfg.vertex_radius * np.linalg.norm(x) if kind in (K.CONE, K.CAPCONE) else 0.0
    return K.exit_points(kind, prm, x, cfg.paths, cfg.seed, s, cfg.ball_fraction, cfg.max_steps, vr)


def solve_dirichlet(domain, x, g, s: float, cfg: WosConfig = WosConfig()) -> McEstimate:
    """u(x) for the s-harmonic function in ``domain`` equal to g outside.

    ``g`` maps an (m, n) array of exterior points to m values.  Paths that
    hit ``max_steps`` contribute 0 and are reported in truncated_fraction.
    """
    s = check_order(s)
    pts, steps, trunc, vert = exit_points(domain, x, s, cfg)
    pay = np.zeros(cfg.paths)
    ok = ~trunc
    pay[ok] = np.asarray(g(pts[ok]), float)
    sizes = batch_sizes(cfg.paths, cfg.batch_size)
    sums = np.add.reduceat(pay, np.concatenate([[0], np.cumsum(sizes)[:-1]]))
    mean, se = batch_stats(sums, sizes)
    tf = float(trunc.mean())
    warn = ()
    if tf > 0.01:
        warn = (f"truncated fraction {tf:.3%} above 1%",)
        warnings.warn(warn[0], VarianceWarning)
    return McEstimate(float(mean), float(se), cfg.paths, tf, float(vert.mean()), float(steps.mean()), warn)


# ---------------------------------------------------------------- Green


def riesz_potential(n: int, s: float, r):
    """Fundamental solution of (-Delta)^s in R^n (n > 2s)."""
    if not n > 2 * s:
        raise ValueError("the free-space potential needs n > 2s")
    c = math.gamma(n / 2.0 - s) / (2 ** (2 * s) * math.pi ** (n / 2.0) * math.gamma(s))
    return c * np.asarray(r, float) ** (2 * s - n)


def ball_green(n: int, s: float, radius: float, x, y):
    """Green function of B(0, radius), valid for n > 2s."""
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    R2 = radius * radius
    d2 = np.sum((x - y) ** 2, axis=-1)
    r0 = (R2 - np.sum(x * x, axis=-1)) * (R2 - np.sum(y * y, axis=-1)) / (R2 * d2)
    u0 = r0 / (1.0 + r0)
    kap = math.gamma(n / 2.0) / (2 ** (2 * s) * math.pi ** (n / 2.0) * math.gamma(s) ** 2)
    b = n / 2.0 - s
    return kap * d2 ** (s - n / 2.0) * special.beta(s, b) * special.betainc(s, b, u0)


def _centre_green(n, s, rho, r):
    kap = math.gamma(n / 2.0) / (2 ** (2 * s) * math.pi ** (n / 2.0) * math.gamma(s) ** 2)
    b = n / 2.0 - s
    return kap * rho ** (2 * s - n) * special.beta(s, b) * special.betainc(s, b, 1.0 - (rho / r) ** 2)


def green_method(n: int, s: float) -> str:
    # the ball sum has finite variance only when the pole singularity
    # rho^{2s-n} is square integrable, i.e. n < 4s
    return "ball" if n < 4 * s else "exit"


def green_estimates(domain, x, ys, s: float, cfg: WosConfig = WosConfig(), method: str = "auto"):
    """G(x, y) for several targets y sharing one set of chains from x."""
    s = check_order(s)
    kind, prm, n = domain_code(domain)
    x = np.asarray(x, float)
    ys = np.atleast_2d(np.asarray(ys, float))
    if np.any(distance(domain, ys) <= 0) or distance(domain, x)[0] <= 0:
        raise ValueError("x and y must be interior points")
    if np.any(np.linalg.norm(ys - x, axis=1) == 0):
        raise ValueError("x and y must differ")
    if method == "auto":
        method = green_method(n, s)
    sizes = batch_sizes(cfg.paths, cfg.batch_size)
    nb = sizes.size
    warn = []
    d0 = distance(domain, x)[0]
    if np.any(np.linalg.norm(ys - x, axis=1) < cfg.ball_fraction * d0):
        warn.append("target inside the first ball; estimator variance is large")
        warnings.warn(warn[-1], VarianceWarning)
    if method == "ball":
        if not n > 2 * s:
            raise ValueError("ball-sum estimator needs n > 2s")
        p, j, rho, r, _, ntr = K.green_hits(kind, prm, x, ys, cfg.paths, cfg.seed, s, cfg.ball_fraction, cfg.max_steps)
        vals = _centre_green(n, s, rho, r)
        sums = np.zeros((nb, ys.shape[0]))
        np.add.at(sums, (p // cfg.batch_size, j), vals)
        tf = ntr / cfg.paths
    elif method == "exit":
        pts, steps, trunc, _ = K.exit_points(kind, prm, x, cfg.paths, cfg.seed, s, cfg.ball_fraction, cfg.max_steps)
        dist = np.linalg.norm(pts[:, None, :] - ys[None, :, :], axis=2)
        vals = riesz_potential(n, s, np.linalg.norm(ys - x, axis=1))[None, :] - riesz_potential(n, s, dist)
        vals[trunc] = 0.0
        starts = np.concatenate([[0], np.cumsum(sizes)[:-1]])
        sums = np.add.reduceat(vals, starts, axis=0)
        tf = float(trunc.mean())
    else:
        raise ValueError(f"unknown method {method!r}")
    mean, se = batch_stats(sums, sizes)
    if tf > 0.01:
        warn.append(f"truncated fraction {tf:.3%} above 1%")
        warnings.warn(warn[-1], VarianceWarning)
    return [
        GreenEstimate(tuple(x), tuple(y), float(m), float(e), cfg.paths, float(tf), method, tuple(warn))
        for y, m, e in zip(ys, mean, se)
    ]


def green_estimate(domain, x, y, s: float, cfg: WosConfig = WosConfig(), method: str = "auto") -> GreenEstimate:
    return green_estimates(domain, x, [y], s, cfg, method)[0]


def exit_density_sums(domain, x, targets, s: float, cfg: WosConfig):
    """Per-batch sums of the next-event exit density at exterior targets.

    Averaging over paths gives the Poisson kernel P(x, z) of the domain.
    Returns (sums, batch sizes, mean steps, truncated fraction, vertex
    fraction)."""
    kind, prm, n = domain_code(domain)
    x = np.asarray(x, float)
    targets = np.atleast_2d(np.asarray(targets, float))
    vr = cfg.vertex_radius * np.linalg.norm(x) if kind in (K.CONE, K.CAPCONE) else 0.0
    sums, steps, ntr, nvert = K.exit_density(
        kind, prm, x, targets, cfg.paths, cfg.seed, s, cfg.ball_fraction,
        cfg.max_steps, cfg.batch_size, exit_density_constant(n, s), vr,
    )
    sizes = batch_sizes(cfg.paths, cfg.batch_size)
    return sums, sizes, steps / cfg.paths, ntr / cfg.paths, nvert / cfg.paths
