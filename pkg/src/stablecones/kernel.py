"""Boundary kernel of a cone, its radial reduction and the mass H1.

The kernel K(x, y) is the limit of G(xe, ye) / (d(xe)^s d(ye)^s) as the
points move onto the boundary.  It is estimated without forming G: the
Poisson kernel seen from xe near an exterior point z at depth delta behaves
like |c_s| M delta^{-s} + O(1), where M = lim G(xe, w) / d(w)^s at the foot
of z.  Differencing two depths on the normal through y removes the O(1)
term, and dividing by d(xe)^s gives raw(eps).  The limit eps -> 0 is taken
by extrapolation over geometric offsets.

Every estimate here is linear in the per-batch raw values, so integrals
are formed batch by batch and extrapolated afterwards; the batch spread
then carries the full uncertainty including the extrapolation.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import stats
from scipy.special import roots_legendre

from . import cache
from .cone import Cone, boundary_normal, chart_point, normal_gap_sq, signed_distance
from .constants import bar_cs, check_order, sphere_area
from .wos import HalfSpace, McEstimate, WosConfig, batch_stats, exit_density_constant, exit_density_sums


# exterior depths in units of the offset, and the smooth power removed
DEPTHS = (1.0, 2.0, 3.0)
SMOOTH_POWER = 1.0
WIDTH_CAP = 1.0
SKEW_LIMIT = 2.0
# batch means are heavy-tailed, so a 3 sigma difference is not rare enough
# to justify extrapolating from the finest level
RICHARDSON_SIGMAS = 5.0


@dataclass(frozen=True)
class KernelConfig:
    """Monte Carlo and quadrature controls for the kernel estimators.

    ``psi_nodes`` Gauss nodes per angular panel resolve the ring integral;
    ``rho_levels`` dyadic panels on each side of rho = 1 and ``rho_span``
    (in log rho) set the H1 radial grid; ``t_levels`` dyadic panels toward
    t = 1 set the m(0) grid.  ``gl_order`` is the Gauss order per panel.
    """

    wos: WosConfig = WosConfig(paths=20_000, batch_size=1_000)
    eps_levels: tuple = (0.08, 0.04)
    psi_nodes: int = 6
    gl_order: int = 4
    rho_levels: int = 6
    rho_span: float = 4.0
    t_levels: int = 6

    def __post_init__(self):
        e = np.asarray(self.eps_levels, float)
        if e.size < 2 or np.any(e <= 0) or np.any(np.diff(e) >= 0):
            raise ValueError("eps_levels must be positive and strictly decreasing")
        if e.size >= 3 and not np.allclose(e[:-1] / e[1:], e[0] / e[1]):
            raise ValueError("eps_levels must be geometric")
        if e[0] > 0.25:
            raise ValueError("eps_levels above 0.25 put the offsets too far from the boundary")
        if self.psi_nodes < 2 or self.gl_order < 2:
            raise ValueError("need at least two quadrature nodes")

    def signature(self) -> dict:
        d = asdict(self)
        d["eps_levels"] = list(self.eps_levels)
        return d

    def replace(self, **kw) -> "KernelConfig":
        return KernelConfig(**{**self.__dict__, **kw})


@dataclass(frozen=True)
class KernelPointEstimate:
    x: tuple
    y: tuple
    eps: tuple
    raw: tuple
    raw_std_err: tuple
    extrapolated: float
    std_err: float
    order: float
    degraded: bool = False


@dataclass
class KernelTable:
    """Radial kernel K~(1, t) on a grid in (0, 1).

    ``weights`` integrate over (0, 1); ``batch_values`` keeps the per-batch
    extrapolated values so integrals can be paired sample-wise.
    """

    n: int
    s: float
    beta: float
    t_grid: np.ndarray
    values: np.ndarray
    std_errs: np.ndarray
    eps_levels: tuple
    extrapolation_order: np.ndarray
    weights: np.ndarray | None = None
    batch_values: np.ndarray | None = field(default=None, repr=False)
    batch_sizes: np.ndarray | None = field(default=None, repr=False)
    seed: int = 0
    paths: int = 0
    degraded: bool = False

    def to_json(self) -> str:
        d = {k: (v.tolist() if isinstance(v, np.ndarray) else v) for k, v in self.__dict__.items()}
        d["eps_levels"] = list(self.eps_levels)
        return json.dumps(d)

    @classmethod
    def from_json(cls, text: str) -> "KernelTable":
        d = json.loads(text)
        for k in ("t_grid", "values", "std_errs", "extrapolation_order", "weights", "batch_values", "batch_sizes"):
            if d.get(k) is not None:
                d[k] = np.asarray(d[k], float)
        d["eps_levels"] = tuple(d["eps_levels"])
        return cls(**d)

    def to_csv(self) -> str:
        rows = ["t,value,std_err,order"]
        for t, v, e, o in zip(self.t_grid, self.values, self.std_errs, self.extrapolation_order):
            rows.append(f"{t:.17g},{v:.17g},{e:.17g},{o:.6g}")
        return "\n".join(rows) + "\n"


# ---------------------------------------------------------------- geometry


def _normal(domain, p):
    p = np.atleast_2d(p)
    if isinstance(domain, HalfSpace):
        nu = np.zeros_like(p)
        nu[:, -1] = 1.0
        return nu
    return boundary_normal(domain, p)


def _sdist(domain, p):
    p = np.atleast_2d(p)
    if isinstance(domain, HalfSpace):
        return p[:, -1].copy()
    return signed_distance(domain, p)


def _scales(domain, x, ys):
    """Offset scales (x side, y side) per target.

    The interior offset at x is measured against min(|x - y|, |x|) and
    rounded down to a power of two so that targets share walks and
    dilations by 2 map offsets onto offsets; the exterior depth at y uses
    min(|x - y|, |y|).  The vertex distances drop out for the half-space.
    """
    sep = np.linalg.norm(ys - x, axis=1)
    lx, ly = sep.copy(), sep.copy()
    if not isinstance(domain, HalfSpace):
        lx = np.minimum(lx, np.linalg.norm(x))
        ry = np.linalg.norm(ys, axis=1)
        # width of the exterior nappe across from y
        w = min(1.0, math.sin(2.0 * math.atan(domain.beta))) if isinstance(domain, Cone) else 1.0
        ly = np.minimum(ly, ry * min(1.0, WIDTH_CAP * w))
    if np.any(lx <= 0) or np.any(ly <= 0):
        raise ValueError("targets must differ from x and avoid the vertex")
    return 2.0 ** np.floor(np.log2(lx)), ly


def _check_boundary(domain, p, name):
    d = np.abs(_sdist(domain, p))
    scale = np.maximum(np.linalg.norm(np.atleast_2d(p), axis=1), 1.0)
    if np.any(d > 1e-9 * scale):
        raise ValueError(f"{name} must lie on the boundary")


# ---------------------------------------------------------------- engine


@dataclass
class _Raw:
    levels: np.ndarray  # (levels, batches, targets)
    sizes: np.ndarray
    mean_steps: float
    truncated: float
    vertex: float
    n_samples: int
    warnings: list = field(default_factory=list)


def _depth_weights(d, s):
    """Per-target weights on the exterior depths that annihilate the
    smooth part c0 + c1 * d of the exit density, normalised on d^-s."""
    k, m = d.shape
    A = np.stack([d ** -s, np.ones_like(d), d ** SMOOTH_POWER][:k], axis=0)  # (k, k, m)
    rhs = np.zeros((m, k))
    rhs[:, 0] = 1.0
    return np.linalg.solve(np.moveaxis(A, 2, 0), rhs[..., None])[..., 0].T


def _raw_batches(domain, s, x, ys, eps_levels, wcfg: WosConfig) -> _Raw:
    """Per-batch raw(eps) for every target and offset level."""
    ys = np.atleast_2d(ys)
    lx, ly = _scales(domain, x, ys)
    nu_x = _normal(domain, x)[0]
    nu_y = _normal(domain, ys)
    n = ys.shape[1]
    C = exit_density_constant(n, s)
    kh = np.array([half_space_kernel(n, s, x, y) for y in ys])
    nb = -(-wcfg.paths // wcfg.batch_size)
    out = np.zeros((len(eps_levels), nb, ys.shape[0]))
    steps = trunc = vert = 0.0
    runs = 0
    sizes = None
    for li, eps in enumerate(eps_levels):
        for sc in np.unique(lx):
            idx = np.flatnonzero(lx == sc)
            m = idx.size
            xe = x + eps * sc * nu_x
            dx = float(_sdist(domain, xe)[0])
            h = (eps * ly[idx])[:, None]
            zs = [ys[idx] - k * h * nu_y[idx] for k in DEPTHS]
            d = np.array([np.abs(_sdist(domain, z)) for z in zs])
            a = _depth_weights(d, s)
            sums, sizes, ms, tf, vf = exit_density_sums(domain, xe, np.vstack(zs), s, wcfg)
            P = (sums / sizes[:, None]).reshape(len(sizes), len(DEPTHS), m)
            # normalise by the flat-boundary model with the same offsets
            q = np.array([(dx / dk) ** s / np.sum((z - xe) ** 2, axis=1) ** (0.5 * n) for dk, z in zip(d, zs)])
            out[li][:, idx] = np.einsum("bkm,km->bm", P, a) / (C * np.sum(a * q, axis=0)) * kh[idx]
            steps += ms
            trunc = max(trunc, tf)
            vert = max(vert, vf)
            runs += 1
    return _Raw(out, sizes, steps / runs, trunc, vert, wcfg.paths)


def _stats(means, sizes):
    """Mean and standard error from per-batch means."""
    return batch_stats(means * sizes.reshape((-1,) + (1,) * (means.ndim - 1)), sizes)


def extrapolate(levels: np.ndarray, sizes: np.ndarray, ratio: float):
    """Limit of per-batch values at geometric offsets as the offset -> 0.

    ``levels`` has shape (levels, batches, quantities), coarsest first.
    Per quantity:

    * when the last two successive differences exceed RICHARDSON_SIGMAS
      standard errors with a common sign, the limit is
      Richardson-extrapolated with order gamma = log(d1/d2)/log(ratio)
      clipped to [0.5, 2] (gamma = 1 with only two levels);
    * otherwise the offset dependence is not resolved and the coarsest
      level consistent (3 sigma) with every finer level is returned,
      reported with order 0 (degraded when only the finest level
      qualifies);
    * successive differences of opposite sign, both beyond 3 sigma, flag
      the quantity as degraded;
    * a Richardson step that would rest on a heavy-tailed finest level, or
      that gives a non-positive limit, is refused: the coarsest level is
      returned and flagged as degraded.

    Returns (value, std_err, order, degraded, per-batch limit).
    """
    levels = np.asarray(levels, float)
    L, _, q = levels.shape
    order = np.zeros(q)
    degraded = np.zeros(q, bool)
    out = np.array(levels[-1])
    if L >= 2:
        dm, de = zip(*(_stats(levels[i] - levels[i + 1], sizes) for i in range(L - 1)))
        dm, de = np.array(dm), np.array(de)
        for j in range(q):
            sig = np.abs(dm[:, j]) > RICHARDSON_SIGMAS * de[:, j]
            big = np.abs(dm[:, j]) > 3.0 * de[:, j]
            flips = dm[:-1, j] * dm[1:, j] < 0
            degraded[j] = bool(np.any(flips & big[:-1] & big[1:]))
            if L == 2 and sig[-1]:
                g = 1.0
            elif L >= 3 and sig[-1] and sig[-2] and dm[-2, j] * dm[-1, j] > 0:
                g = float(np.clip(math.log(dm[-2, j] / dm[-1, j]) / math.log(ratio), 0.5, 2.0))
            else:
                g = 0.0
            if g > 0 and not degraded[j]:
                rich = levels[-1][:, j] - (levels[-2][:, j] - levels[-1][:, j]) / (ratio**g - 1.0)
                heavy = levels.shape[1] >= 20 and stats.skew(levels[-1][:, j]) > SKEW_LIMIT
                if heavy or np.mean(rich) <= 0:
                    # the fine level is not resolved; refuse to extrapolate from it
                    out[:, j] = levels[0][:, j]
                    degraded[j] = True
                    continue
                out[:, j] = rich
                order[j] = g
                continue
            for k in range(L):
                ok = True
                for i in range(k + 1, L):
                    m, e = _stats(levels[k][:, j : j + 1] - levels[i][:, j : j + 1], sizes)
                    if abs(m[0]) > 3.0 * e[0]:
                        ok = False
                        break
                if ok:
                    out[:, j] = levels[k][:, j]
                    degraded[j] |= k == L - 1
                    break
    v, e = _stats(out, sizes)
    return v, e, order, degraded, out


def _ratio(eps_levels):
    e = np.asarray(eps_levels, float)
    return float(e[-2] / e[-1])


def tail_warnings(levels, eps_levels, limit: float = SKEW_LIMIT):
    """Warn when batch means at some offset are strongly right-skewed, the
    signature of rare large contributions that the sample has not resolved."""
    out = []
    if levels.shape[1] < 20:
        return out
    for eps, lev in zip(eps_levels, levels):
        g = stats.skew(lev, axis=0)
        if np.nanmax(g) > limit:
            out.append(f"heavy-tailed batch means at eps={eps:g} (skewness {np.nanmax(g):.1f}); increase paths")
    return out


def _integrals(domain, s, x, ys, W, cfg: KernelConfig):
    """Extrapolated linear functionals W @ K(x, ys) with batch detail."""
    raw = _raw_batches(domain, s, x, ys, cfg.eps_levels, cfg.wos)
    agg = np.einsum("lbm,qm->lbq", raw.levels, np.atleast_2d(W))
    v, e, g, deg, batch = extrapolate(agg, raw.sizes, _ratio(cfg.eps_levels))
    raw.warnings = tail_warnings(agg[:, :, :1], cfg.eps_levels)
    return v, e, g, deg, batch, raw


# ---------------------------------------------------------------- point kernel


def kernel_point(domain, x, y, s: float, cfg: KernelConfig = KernelConfig()) -> KernelPointEstimate:
    """K(x, y) for boundary points x != y of a cone or half-space."""
    s = check_order(s)
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    _check_boundary(domain, x, "x")
    _check_boundary(domain, y, "y")
    if np.allclose(x, y):
        raise ValueError("x and y must differ")
    v, e, g, deg, _, raw = _integrals(domain, s, x, y[None, :], np.ones((1, 1)), cfg)
    means, errs = zip(*(_stats(raw.levels[i][:, :1], raw.sizes) for i in range(raw.levels.shape[0])))
    return KernelPointEstimate(
        x=tuple(x), y=tuple(y), eps=tuple(cfg.eps_levels),
        raw=tuple(float(m[0]) for m in means), raw_std_err=tuple(float(r[0]) for r in errs),
        extrapolated=float(v[0]), std_err=float(e[0]), order=float(g[0]), degraded=bool(deg[0]),
    )


def half_space_kernel(n: int, s: float, x, y) -> float:
    """Closed-form boundary kernel of the half-space."""
    s = check_order(s)
    r = float(np.linalg.norm(np.asarray(x, float) - np.asarray(y, float)))
    return math.gamma(n / 2) / (math.pi ** (n / 2) * math.gamma(s) * math.gamma(1 + s) * r**n)


# ---------------------------------------------------------------- ring integrals


def reference_point(cone: Cone, side: int = 1) -> np.ndarray:
    """x1 on the boundary at unit distance from the vertex."""
    e1 = np.zeros(cone.n - 1)
    e1[0] = 1.0
    return chart_point(cone, side, 1.0, e1)


def _psi_rule(m: int, width: float):
    """Nodes and weights on (0, pi) for integrands peaked at psi = 0 with
    the given width: m Gauss nodes on (0, width), then m nodes per decade
    in log psi up to pi, where the peak decays like a power of psi."""
    xg, wg = roots_legendre(m)
    w0 = min(max(width, 1e-8), 2.0)
    psi = [0.5 * w0 * (xg + 1.0)]
    wts = [0.5 * w0 * wg]
    decades = max(1, math.ceil(math.log10(math.pi / w0)))
    edges = np.linspace(math.log(w0), math.log(math.pi), decades + 1)
    for a, b in zip(edges[:-1], edges[1:]):
        u = a + 0.5 * (b - a) * (xg + 1.0)
        psi.append(np.exp(u))
        wts.append(0.5 * (b - a) * wg * np.exp(u))
    return np.concatenate(psi), np.concatenate(wts)


def ring_targets(cone: Cone, rho: float, cfg: KernelConfig, x_side: int = 1):
    """Boundary points on {|y| = rho} and weights for
    rho^{2-n} int_{|y|=rho} f(y) d sigma(y), with the normal gap
    |nu(x1) - nu(y)|^2 of each point relative to x1."""
    n = cone.n
    pts, wts, gaps = [], [], []
    for side in (1, -1):
        same = side == x_side
        if n == 2:
            for om in (1.0, -1.0):
                pts.append(chart_point(cone, side, rho, np.array([om])))
                wts.append(1.0)
                gaps.append(float(normal_gap_sq(cone, om, same)))
            continue
        width = abs(1.0 - rho) / (cone.ring_radius * math.sqrt(rho)) if same else 2.0
        psi, w = _psi_rule(cfg.psi_nodes, width)
        om = np.zeros((psi.size, n - 1))
        om[:, 0] = np.cos(psi)
        om[:, 1] = np.sin(psi)
        pts.extend(chart_point(cone, side, rho, om))
        wts.extend(cone.ring_radius ** (n - 2) * sphere_area(n - 3) * np.sin(psi) ** (n - 3) * w)
        gaps.extend(normal_gap_sq(cone, np.cos(psi), same))
    P = np.array(pts).reshape(-1, n)
    return P, np.array(wts, float), np.array(gaps, float)


def _mc(value, err, raw: _Raw, degraded, warn=()):
    return McEstimate(
        float(value), float(err), raw.n_samples, raw.truncated, raw.vertex, raw.mean_steps,
        tuple(raw.warnings) + tuple(warn), bool(degraded),
    )


def kernel_tilde(cone: Cone, t: float, s: float, cfg: KernelConfig = KernelConfig(), x_side: int = 1) -> McEstimate:
    """K~(1, t) = t^{2-n} int_{|y|=t} K(x1, y) d sigma(y)."""
    s = check_order(s)
    if not t > 0:
        raise ValueError("t must be positive")
    if abs(t - 1.0) < 1e-3:
        raise ValueError("t is inside the guard band around 1")
    x1 = reference_point(cone, x_side)
    Y, w, _ = ring_targets(cone, t, cfg, x_side)
    v, e, _, deg, _, raw = _integrals(cone, s, x1, Y, w[None, :], cfg)
    return _mc(v[0], e[0], raw, deg[0])


def _dyadic_panels(a, b, levels, toward_b=True):
    """Panels on [a, b] halving toward one end."""
    L = b - a
    cuts = [L * (1.0 - 2.0**-k) for k in range(levels + 1)] + [L]
    if not toward_b:
        cuts = [L - c for c in cuts[::-1]]
    cuts = sorted(set(cuts))
    return [(a + lo, a + hi) for lo, hi in zip(cuts[:-1], cuts[1:])]


def _gl_on(panels, order):
    xg, wg = roots_legendre(order)
    X, W = [], []
    for lo, hi in panels:
        X.extend(lo + 0.5 * (hi - lo) * (xg + 1.0))
        W.extend(0.5 * (hi - lo) * wg)
    return np.array(X), np.array(W)


def t_rule(cfg: KernelConfig):
    """Gauss nodes on (0, 1) graded dyadically toward t = 1.  The first
    panel (0, a) is mapped by t = a u^2 so that the t^{(n-2)/2} factor of
    odd n stays smooth."""
    panels = _dyadic_panels(0.0, 1.0, cfg.t_levels)
    a = panels[0][1]
    u, wu = _gl_on([(0.0, 1.0)], cfg.gl_order)
    t, w = _gl_on(panels[1:], cfg.gl_order)
    return np.concatenate([a * u**2, t]), np.concatenate([2.0 * a * u * wu, w])


def build_kernel_table(cone: Cone, s: float, cfg: KernelConfig = KernelConfig(), t_grid=None) -> KernelTable:
    """K~(1, t) on the m(0) grid (or a supplied grid) from one set of walks."""
    s = check_order(s)
    if t_grid is None:
        t, wt = t_rule(cfg)
    else:
        t = np.asarray(t_grid, float)
        wt = None
        if np.any((t <= 0) | (t >= 1)):
            raise ValueError("t_grid must lie in (0, 1)")
    x1 = reference_point(cone)
    blocks = [ring_targets(cone, ti, cfg) for ti in t]
    Y = np.vstack([b[0] for b in blocks])
    W = np.zeros((t.size, Y.shape[0]))
    k = 0
    for i, b in enumerate(blocks):
        W[i, k : k + b[1].size] = b[1]
        k += b[1].size
    v, e, g, deg, batch, raw = _integrals(cone, s, x1, Y, W, cfg)
    return KernelTable(
        n=cone.n, s=s, beta=cone.beta, t_grid=t, values=v, std_errs=e,
        eps_levels=tuple(cfg.eps_levels), extrapolation_order=g, weights=wt,
        batch_values=batch, batch_sizes=raw.sizes.astype(float), seed=cfg.wos.seed,
        paths=cfg.wos.paths, degraded=bool(deg.any()),
    )


def mellin_m0(table: KernelTable, n: int) -> McEstimate:
    """m(0) = 2 int_0^1 (1 - t^{(n-2)/2})^2 K~(1, t) dt, paired per batch."""
    if n != table.n:
        raise ValueError("table dimension does not match n")
    nb = 0 if table.batch_values is None else table.batch_values.shape[0]
    if n == 2:
        return McEstimate(0.0, 0.0, int(table.paths))
    if table.weights is None or table.batch_values is None:
        raise ValueError("m(0) needs a table built on the graded quadrature grid")
    t = np.asarray(table.t_grid, float)
    warn = []
    if 1.0 - t.max() > 1.0 / 32.0:
        warn.append("t-grid grading toward 1 is insufficient")
    f = 2.0 * (1.0 - t ** (0.5 * (n - 2))) ** 2 * table.weights
    per_batch = table.batch_values @ f
    v, e = _stats(per_batch[:, None], table.batch_sizes)
    return McEstimate(float(v[0]), float(e[0]), int(table.paths), warnings=tuple(warn), degraded=table.degraded)


# ---------------------------------------------------------------- H1


def rho_rule(cfg: KernelConfig):
    """Gauss nodes in log rho on [-span, span], refined dyadically toward
    rho = 1 from both sides; returns rho and weights for d rho."""
    right = _dyadic_panels(0.0, cfg.rho_span, cfg.rho_levels, toward_b=False)
    panels = [(-hi, -lo) for lo, hi in right[::-1]] + right
    u, w = _gl_on(panels, cfg.gl_order)
    rho = np.exp(u)
    return rho, w * rho


def h1(cone: Cone, s: float, cfg: KernelConfig = KernelConfig(), x_side: int = 1) -> McEstimate:
    """H1 = int over the boundary of |nu(x1) - nu(y)|^2 K(x1, y).

    Beyond the radial grid the critical-cone asymptotics are used: the
    ring integrand tends to a constant at the vertex and decays like
    rho^{-n} at infinity (the kernel is (-n)-homogeneous and bounded at
    the vertex when lambda = s).  The tails are evaluated at the grid ends.
    """
    s = check_order(s)
    n = cone.n
    rho, wr = rho_rule(cfg)
    lo, hi = math.exp(-cfg.rho_span), math.exp(cfg.rho_span)
    nodes = np.concatenate([rho, [lo, hi]])
    coef = np.concatenate([
        wr * rho ** (n - 2),
        [lo ** (n - 1) / (n - 1), hi ** (n - 1)],
    ])
    x1 = reference_point(cone, x_side)
    Ys, Ws = [], []
    for r, c in zip(nodes, coef):
        P, w, gap = ring_targets(cone, r, cfg, x_side)
        keep = gap > 0
        Ys.append(P[keep])
        Ws.append(c * w[keep] * gap[keep])
    Y = np.vstack(Ys)
    W = np.concatenate(Ws)
    ntail = sum(len(w) for w in Ws[-2:])
    Wsplit = np.vstack([W, np.concatenate([np.zeros(W.size - ntail), W[-ntail:]])])
    v, e, _, deg, _, raw = _integrals(cone, s, x1, Y, Wsplit, cfg)
    warn = []
    if abs(v[1]) > 0.05 * abs(v[0]):
        warn.append(f"tails carry {abs(v[1] / v[0]):.1%} of H1; widen rho_span")
    return _mc(v[0], e[0], raw, deg.any(), warn)


# ---------------------------------------------------------------- caching


def cached_kernel_table(cone: Cone, s: float, cfg: KernelConfig = KernelConfig(), use_cache: bool = True):
    sig = {"n": cone.n, "s": float(s), "beta": float(cone.beta), "cfg": cfg.signature()}
    if use_cache:
        hit = cache.load("kernel_table", sig)
        if hit is not None:
            return KernelTable.from_json(hit), cache.cache_key("kernel_table", sig), True
    table = build_kernel_table(cone, s, cfg)
    if use_cache:
        cache.store("kernel_table", sig, table.to_json())
    return table, cache.cache_key("kernel_table", sig), False
