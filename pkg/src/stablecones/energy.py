"""Localised one-dimensional energy and the first variation of its free
boundary term.

The profile is u(t) = U0 (t - p)_+^s, optionally capped as
U0 min((t - p)_+, L)^s so that the localised seminorm is finite.  The
competitor moves the free boundary by a domain variation
v_eps = u o g^{-1}, where g is the identity outside [p - b, p + b], a
translation by eps on [p - b, p + a - eps] and affine in between.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import _quad
from .constants import Params, c_ns, check_order
from .fraclap import Profile1D, QuadratureSpec, Tail, flap_1d


class FitRejected(RuntimeError):
    pass


class ResolutionWarning(UserWarning):
    pass


@dataclass(frozen=True)
class Configuration1D:
    free_boundary_point: float = 0.0
    slope_coefficient: float = 1.0
    window: tuple = (-2.0, 2.0)
    lambda_param: float = 1.0
    cap: float | None = None
    level: int = 4

    def __post_init__(self):
        lo, hi = self.window
        if not lo < self.free_boundary_point < hi:
            raise ValueError("window must strictly contain the free boundary point")
        if self.slope_coefficient < 0:
            raise ValueError("U0 must be nonnegative")
        if self.cap is not None and not self.cap > 0:
            raise ValueError("cap must be positive")
        if self.level < 2:
            raise ValueError("level must be >= 2")

    def u(self, t, s):
        d = np.maximum(np.asarray(t, float) - self.free_boundary_point, 0.0)
        if self.cap is not None:
            d = np.minimum(d, self.cap)
        return self.slope_coefficient * d**s

    def kinks(self):
        k = [self.free_boundary_point]
        if self.cap is not None:
            k.append(self.free_boundary_point + self.cap)
        return k

    def profile(self, s) -> Profile1D:
        p = self.free_boundary_point
        if self.cap is None:
            if p != 0.0:
                raise ValueError("an uncapped profile needs the free boundary at 0 to have a power tail")
            right = Tail(self.slope_coefficient, s)
        else:
            right = Tail(self.slope_coefficient * self.cap**s, 0.0)
        return Profile1D.custom(lambda t: self.u(t, s), self.kinks(), Tail(0.0, 0.0), right)

    def variation_support(self):
        """(a, b) of the domain variation, sized to sit inside the window."""
        lo, hi = self.window
        p = self.free_boundary_point
        b = 0.5 * min(p - lo, hi - p)
        return 0.5 * b, b


def _split(bps):
    return sorted(set(float(b) for b in bps))


# ---------------------------------------------------------------- energy


def _seminorm_local(c: Configuration1D, s: float, level: int) -> float:
    """(1/2) c_{1,s} times the seminorm over R^2 minus (B^c)^2."""
    if c.cap is None:
        raise ValueError("the localised seminorm of an uncapped profile diverges; set cap")
    b0, b1 = c.window
    p = c.free_boundary_point
    top = p + c.cap
    C = c.slope_coefficient * c.cap**s
    u = lambda t: c.u(t, s)
    kinks = [k for k in c.kinks() if b0 < k < b1]
    outer = _split([b0, b1, *kinks])
    total = 0.0
    for xa, xb in zip(outer[:-1], outer[1:]):
        X, WX = _quad.nodes(xa, xb, level)
        # inside-inside, counted as twice the y < x half
        inner = _split([b0, *[k for k in kinks if k < xb]])
        acc = np.zeros_like(X)
        for ya, yb in zip(inner[:-1], inner[1:]):
            Y, WY = _quad.nodes(ya, yb, level)
            D = X[:, None] - Y[None, :]
            acc += np.sum(WY * (u(X)[:, None] - u(Y)[None, :]) ** 2 * D ** (-1 - 2 * s), axis=1)
        lo_, hi_, w = _quad.rule(level)
        L = X - xa
        D = L[:, None] * hi_[None, :]  # piece [xa, x] approached from x
        acc += np.sum(w * L[:, None] * (u(X)[:, None] - u(X[:, None] - D)) ** 2 * D ** (-1 - 2 * s), axis=1)
        acc *= 2.0
        # inside-outside (both orders), left part: u = 0 there
        acc += 2.0 * u(X) ** 2 * (X - b0) ** (-2 * s) / (2 * s)
        # right part: numerical up to the cap, closed form beyond
        start = b1
        if top > b1:
            Y, WY = _quad.nodes(b1, top, level)
            acc += 2.0 * np.sum(WY * (u(X)[:, None] - u(Y)[None, :]) ** 2 * (Y[None, :] - X[:, None]) ** (-1 - 2 * s), axis=1)
            start = top
        acc += 2.0 * (u(X) - C) ** 2 * (start - X) ** (-2 * s) / (2 * s)
        total += np.sum(WX * acc)
    return 0.5 * c_ns(Params(1, s)) * total


def energy_local(c: Configuration1D, s: float, full_output: bool = False):
    """Localised energy of a capped profile in the window B.

    The error estimate compares quadrature levels ``level`` and
    ``level - 1``; a ``ResolutionWarning`` is emitted above 1e-6 relative.
    """
    s = check_order(s)
    b0, b1 = c.window
    if c.slope_coefficient == 0:
        val, err = 0.0, 0.0
    else:
        fine = _seminorm_local(c, s, c.level)
        coarse = _seminorm_local(c, s, c.level - 1)
        val, err = fine, abs(fine - coarse)
        if err > 1e-6 * abs(fine):
            warnings.warn(f"energy quadrature under-resolved: {err:.2e}", ResolutionWarning)
    pos = max(0.0, b1 - max(b0, c.free_boundary_point)) if c.slope_coefficient > 0 else 0.0
    J = val + c.lambda_param**2 * pos
    return (J, err) if full_output else J


# ---------------------------------------------------------------- first variation


def _gmap(eps, a, b):
    """Piecewise-linear inverse domain map and its pieces (origin at p)."""
    k = eps / (b - a)
    shift = eps * b / (b - a)
    bks = np.array([-b, -a - eps, a - eps, b])
    offs = np.array([shift, eps, shift])
    slopes = np.array([1.0 / (1.0 - k), 1.0, 1.0 / (1.0 + k)])

    def g(X):
        X = np.asarray(X, float)
        i = np.clip(np.searchsorted(bks, X, side="right") - 1, 0, 2)
        inside = (X > -b) & (X < b)
        gx = np.where(inside, _affine(X, i, offs, slopes, eps), X)
        dg = np.where(inside, slopes[i], 1.0)
        piece = np.where(inside, i, np.where(X <= -b, -1, 3))
        return gx, dg, piece

    return g, bks


def _affine(X, i, offs, slopes, eps):
    # middle piece is a pure translation; outer pieces scale about +-b
    return np.where(i == 1, X + eps, (X + offs[i]) * slopes[i])


@lru_cache(maxsize=256)
def seminorm_change(eps: float, s: float, a: float, b: float, level: int = 5):
    """(c_{1,s}/2) times the change of the seminorm of t_+^s under the
    domain variation, with an error estimate.  Exactly proportional to U0^2."""
    s = check_order(s)
    if not abs(eps) < min(a, b - a):
        raise ValueError("eps too large for the variation support")
    fine = _delta_seminorm(eps, s, a, b, level)
    coarse = _delta_seminorm(eps, s, a, b, level - 1)
    return fine, abs(fine - coarse)


def _delta_seminorm(eps, s, a, b, level):
    g, gb = _gmap(eps, a, b)
    u = lambda t: np.maximum(t, 0.0) ** s
    p1 = 1.0 + 2.0 * s
    bks = _split([-b, -a - eps, a - eps, 0.0, b])
    lo_, hi_, w = _quad.rule(level)

    def bracket(X, Y, D):
        gx, dx, px = g(X)
        gy, dy, py = g(Y)
        ad = np.abs(D)
        same = px == py
        with np.errstate(divide="ignore", invalid="ignore"):
            k = dx  # slope shared within a piece
            b_same = (k ** (1.0 - 2 * s) - 1.0) * ad ** (-p1)
            b_diff = dx * dy * np.abs(gx - gy) ** (-p1) - ad ** (-p1)
            out = (u(X) - u(Y)) ** 2 * np.where(same, b_same, b_diff)
        # nodes that round onto X carry no weight
        return np.where(np.isfinite(out), out, 0.0)

    total = 0.0
    for xa, xb in zip(bks[:-1], bks[1:]):
        X, WX = _quad.nodes(xa, xb, level)
        acc = np.zeros_like(X)
        Xc = X[:, None]
        # Y in other pieces of [-b, b]
        for ya, yb in zip(bks[:-1], bks[1:]):
            if ya == xa:
                continue
            Y, WY = _quad.nodes(ya, yb, level)
            Yr = Y[None, :]
            acc += np.sum(WY * bracket(Xc, Yr, Yr - Xc), axis=1)
        # Y in the same piece, split at X
        L1 = (X - xa)[:, None]
        D = -L1 * hi_[None, :]
        acc += np.sum(w * L1 * bracket(Xc, Xc + D, D), axis=1)
        L2 = (xb - X)[:, None]
        D = L2 * lo_[None, :]
        acc += np.sum(w * L2 * bracket(Xc, Xc + D, D), axis=1)
        # Y < -b: u(Y) = 0, closed form; both orders of the pair
        gx, dx, _ = g(X)
        pos = X > 0
        with np.errstate(divide="ignore", invalid="ignore"):
            left = u(X) ** 2 * (dx * (gx + b) ** (-2 * s) - (X + b) ** (-2 * s)) / (2 * s)
        acc += 2.0 * np.where(pos, left, 0.0)
        # Y > b: Y = b / v
        V, WV = _quad.nodes(0.0, 1.0, level)
        V = np.maximum(V, 1e-300)
        Y = (b / V)[None, :]
        with np.errstate(over="ignore", invalid="ignore"):
            core = np.expm1(np.log(dx)[:, None] - p1 * np.log1p((Xc - gx[:, None]) / (Y - Xc)))
            f = (u(X)[:, None] - Y**s) ** 2 * (Y - Xc) ** (-p1) * core * (b / V**2)[None, :]
        f = np.where(np.isfinite(f), f, 0.0)
        acc += 2.0 * np.sum(WV * f, axis=1)
        total += np.sum(WX * acc)
    return 0.5 * c_ns(Params(1, s)) * total


@dataclass(frozen=True)
class FirstVariationResult:
    eps: tuple
    delta_energy: tuple
    slope: float
    quadratic: float
    seminorm_slope: float
    crossing_U0: float
    fit_residual: float
    quad_error: float


def default_eps(c: Configuration1D):
    _, b = c.variation_support()
    base = np.array([0.01, 0.02, 0.04]) * b
    return tuple(np.concatenate([-base[::-1], base]))


def _fit(eps, y, degree):
    A = np.stack([eps**k for k in range(1, degree + 1)], axis=1)
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    return coef, y - A @ coef


def first_variation_scan(c: Configuration1D, s: float, eps_list=None) -> FirstVariationResult:
    """Energy change J(v_eps) - J(u) over a set of eps and its slope at 0.

    Positive eps shrinks the positivity set.  The slope comes from a cubic
    fit through the origin; the scan is rejected when a linear plus
    quadratic fit leaves a residual above 10% of the quadratic term.
    """
    s = check_order(s)
    if c.cap is not None:
        raise ValueError("the first variation scan uses the uncapped profile")
    a, b = c.variation_support()
    eps = np.asarray(default_eps(c) if eps_list is None else eps_list, float)
    if eps.size < 4 or np.any(eps == 0):
        raise ValueError("need at least four nonzero eps values")
    ds, errs = zip(*(seminorm_change(float(e), s, a, b, c.level + 1) for e in eps))
    ds = np.array(ds)
    U2 = c.slope_coefficient**2
    dJ = U2 * ds - c.lambda_param**2 * eps
    coef2, res2 = _fit(eps, dJ, 2)
    quad_term = abs(coef2[1]) * np.max(eps**2)
    if np.max(np.abs(res2)) > 0.1 * quad_term:
        raise FitRejected(
            f"linear+quadratic residual {np.max(np.abs(res2)):.3e} exceeds 10% of the quadratic term {quad_term:.3e}"
        )
    coef3, res3 = _fit(eps, dJ, 3)
    cs, _ = _fit(eps, ds, 3)
    crossing = c.lambda_param / math.sqrt(cs[0]) if cs[0] > 0 else math.nan
    return FirstVariationResult(
        eps=tuple(eps),
        delta_energy=tuple(dJ),
        slope=float(coef3[0]),
        quadratic=float(coef3[1]),
        seminorm_slope=float(cs[0]),
        crossing_U0=float(crossing),
        fit_residual=float(np.max(np.abs(res3))),
        quad_error=float(U2 * max(errs)),
    )


# ---------------------------------------------------------------- identity


def shifted_competitor(c: Configuration1D, eps: float, s: float) -> Profile1D:
    """v_eps as a profile: u composed with the inverse domain variation."""
    a, b = c.variation_support()
    p = c.free_boundary_point
    # g sends -b, -a - eps, a - eps, b to -b, -a, a, b; invert piecewise
    xs = np.array([-b, -a, a, b])
    Xs = np.array([-b, -a - eps, a - eps, b])

    def f(t):
        d = np.asarray(t, float) - p
        inside = np.abs(d) < b
        return c.u(p + np.where(inside, np.interp(d, xs, Xs), d), s)

    base = c.profile(s)
    kinks = sorted(set([*base.kinks, *(p + xs), p + eps]))
    return Profile1D.custom(f, kinks, base.left, base.right)


def bump_competitor(c: Configuration1D, s: float, center: float, width: float, amplitude: float) -> Profile1D:
    """u plus amplitude * (1 - ((t - center)/width)^2)^3 on |t - center| < width."""
    base = c.profile(s)

    def f(t):
        t = np.asarray(t, float)
        r2 = ((t - center) / width) ** 2
        return base(t) + amplitude * np.where(r2 < 1, (1 - r2) ** 3, 0.0)

    kinks = sorted(set([*base.kinks, center - width, center + width]))
    return Profile1D.custom(f, kinks, base.left, base.right)


def _as_profile(obj, s):
    return obj.profile(s) if isinstance(obj, Configuration1D) else obj


def _right_exponent(prof: Profile1D) -> float:
    return prof.right.exponent if prof.right is not None else 0.0


def seminorm_identity_check(u, v, s: float, window=None, level: int = 4, q: QuadratureSpec | None = None):
    """Compare (c/2)[S_B(v) - S_B(u)] with int_B (v - u) (-Delta)^s (v + u).

    ``u`` and ``v`` are Configuration1D or Profile1D objects that agree
    outside ``window``.  Returns (lhs, rhs, residual) with the residual
    relative to max(|lhs|, |rhs|).
    """
    s = check_order(s)
    if window is None:
        if isinstance(u, Configuration1D):
            window = u.window
        else:
            raise ValueError("window is required for profile inputs")
    b0, b1 = map(float, window)
    pu, pv = _as_profile(u, s), _as_profile(v, s)
    phi = lambda t: pv(t) - pu(t)
    wsum = lambda t: pv(t) + pu(t)
    probe = np.concatenate([np.linspace(b0 - 5, b0, 50), np.linspace(b1, b1 + 5, 50)])
    if np.max(np.abs(phi(probe))) > 1e-12:
        raise ValueError("u and v must agree outside the window")
    kinks = sorted(set(k for k in (*pu.kinks, *pv.kinks) if b0 < k < b1))
    if np.max(np.abs(phi(np.linspace(b0, b1, 2001)))) == 0.0:
        return 0.0, 0.0, 0.0
    lo_, hi_, w = _quad.rule(level)
    p1 = 1.0 + 2.0 * s
    outer = _split([b0, b1, *kinks])
    lhs = 0.0
    for xa, xb in zip(outer[:-1], outer[1:]):
        X, WX = _quad.nodes(xa, xb, level)
        Xc = X[:, None]
        acc = np.zeros_like(X)
        for ya, yb in zip(outer[:-1], outer[1:]):
            if ya == xa:
                continue
            Y, WY = _quad.nodes(ya, yb, level)
            Yr = Y[None, :]
            acc += np.sum(WY * (phi(Xc) - phi(Yr)) * (wsum(Xc) - wsum(Yr)) * np.abs(Yr - Xc) ** (-p1), axis=1)
        for L, D in (((X - xa)[:, None], -(X - xa)[:, None] * hi_), ((xb - X)[:, None], (xb - X)[:, None] * lo_)):
            Y = Xc + D
            acc += np.sum(w * L * (phi(Xc) - phi(Y)) * (wsum(Xc) - wsum(Y)) * np.abs(D) ** (-p1), axis=1)
        # x in B, y outside B, both orders; phi(y) = 0 and u = 0 left of B
        acc += 2.0 * phi(X) * wsum(X) * (X - b0) ** (-2 * s) / (2 * s)
        V, WV = _quad.nodes(0.0, 1.0, level)
        V = np.maximum(V, 1e-300)
        scale = max(1.0, b1 - b0)
        with np.errstate(over="ignore", invalid="ignore"):
            Y = b1 + scale * (1.0 / V - 1.0)
            f = (wsum(Xc) - wsum(Y[None, :])) * (Y[None, :] - Xc) ** (-p1) * (scale / V**2)[None, :]
        f = np.where(np.isfinite(f), f, 0.0)
        acc += 2.0 * phi(X) * np.sum(WV * f, axis=1)
        lhs += np.sum(WX * acc)
    lhs *= 0.5 * c_ns(Params(1, s))

    wprof = Profile1D.custom(
        wsum, kinks, Tail(0.0, 0.0),
        Tail(2.0 * pu.right.coef, _right_exponent(pu)) if pu.right is not None else None,
    )
    rlevel = max(2, level - 1)
    q = q or QuadratureSpec(target_rel_err=1e-6)
    rhs = 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for xa, xb in zip(outer[:-1], outer[1:]):
            X, WX = _quad.nodes(xa, xb, rlevel)
            ph = phi(X)
            for x, wx, f in zip(X, WX, ph):
                # nodes hugging a kink carry negligible weight
                if abs(wx * f) < 1e-12 or x in kinks:
                    continue
                rhs += wx * f * flap_1d(wprof, s, x, q)
    scale = max(abs(lhs), abs(rhs))
    return float(lhs), float(rhs), float(abs(lhs - rhs) / scale) if scale > 0 else 0.0
