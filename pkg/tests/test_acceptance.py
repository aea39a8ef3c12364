"""One test per acceptance criterion, each at its stated tolerance and
runtime budget.  Every test records a PASS/FAIL line that is printed in the
terminal summary."""

import contextlib
import math
import time
import warnings

import numpy as np
import pytest
from scipy import integrate, stats

from conftest import ACCEPTANCE
from stablecones.cone import CapCone, Cone, chart_point
from stablecones.constants import bar_cs, identity_suite
from stablecones.energy import Configuration1D, first_variation_scan
from stablecones.exponent import extrapolated_eigenvalue, find_aperture, lambda_of_beta
from stablecones.fraclap import Profile1D, flap_1d, large_solution_harmonicity
from stablecones.kernel import KernelConfig, half_space_kernel, kernel_point, kernel_tilde
from stablecones.stability import (
    CONSISTENT,
    INCONCLUSIVE,
    INSTABILITY,
    StabilityConfig,
    alpha_feasibility,
    check_stability,
    hardy_2d_demo,
    max_unstable_dimension,
)
from stablecones.wos import HalfSpace, WosConfig, green_estimate, radial_exit_cdf, sample_ball_exit, solve_dirichlet


@contextlib.contextmanager
def criterion(key, budget):
    """Time the block, record the outcome and enforce the runtime budget."""
    info = {"detail": ""}
    t0 = time.perf_counter()
    ok = False
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            yield info
        ok = True
    finally:
        dt = time.perf_counter() - t0
        within = dt < budget
        ACCEPTANCE[key] = (ok and within, f"{info['detail']} [{dt:.1f} s / {budget:g} s]")
        print(f"{key} {'PASS' if ok and within else 'FAIL'} {info['detail']} [{dt:.1f} s]")
    assert dt < budget, f"{key} took {dt:.1f} s, budget {budget} s"


def kcfg(paths, seed, batch=None):
    return KernelConfig(wos=WosConfig(paths=paths, batch_size=batch or paths // 100, seed=seed))


def test_c1_identity_suite():
    with criterion("C1", 5) as info:
        reps = identity_suite([round(0.1 * k, 1) for k in range(1, 10)])
        worst = max(r.residual for r in reps)
        info["detail"] = f"{len(reps)} identities, max residual {worst:.1e}"
        assert all(r.passed for r in reps) and worst < 1e-8


def test_c2_half_space_derivative():
    with criterion("C2", 10) as info:
        worst = 0.0
        for s in (0.25, 0.5, 0.75):
            for tau in (0.5, 1.0, 2.0):
                v = flap_1d(Profile1D.power_plus(s), s, -tau)
                worst = max(worst, abs(v / (bar_cs(s) * tau ** (-s)) - 1))
        info["detail"] = f"max relative error {worst:.1e}"
        assert worst < 1e-3


def test_c3_large_solution():
    with criterion("C3", 10) as info:
        grid = np.geomspace(0.05, 20, 9)
        worst = max(large_solution_harmonicity(s, grid) for s in (0.25, 0.5, 0.75))
        info["detail"] = f"max scaled residual {worst:.1e}"
        assert worst < 1e-3


def test_c4_first_variation():
    with criterion("C4", 60) as info:
        s = 0.5
        r = first_variation_scan(Configuration1D(), s)
        ratio = r.crossing_U0 * math.gamma(1 + s) / 1.0
        lo = first_variation_scan(Configuration1D(slope_coefficient=0.9 * r.crossing_U0), s).slope
        hi = first_variation_scan(Configuration1D(slope_coefficient=1.1 * r.crossing_U0), s).slope
        info["detail"] = f"U0* Gamma(1+s)/Lambda = {ratio:.6f}, slopes at -10%/+10%: {lo:+.3e}/{hi:+.3e}"
        assert abs(ratio - 1) < 0.02 and lo < 0 < hi


def test_c5_half_space_exponent():
    with criterion("C5", 300) as info:
        errs = []
        for n, s in ((2, 0.5), (3, 0.5), (3, 0.75)):
            mu = extrapolated_eigenvalue(n, s, CapCone(n, math.pi / 2))[0]
            errs.append(abs(mu / (s * (n - s)) - 1))
        info["detail"] = "relative errors " + ", ".join(f"{e:.1e}" for e in errs)
        assert max(errs) < 1e-3


def test_c6_aperture():
    with criterion("C6", 900) as info:
        ap = find_aperture(3, 0.5, use_cache=False)
        betas = np.geomspace(0.4, 2.5, 8)
        res = [lambda_of_beta(3, 0.5, b) for b in betas]
        lam = np.array([r.lam for r in res])
        err = np.array([r.error_estimate for r in res])
        monotone = bool(np.all(np.diff(lam) > err[1:] + err[:-1]))
        info["detail"] = f"beta* = {ap.beta:.10f}, |lambda - 1/2| = {ap.residual:.1e}, sweep lambda in [{lam.min():.3f}, {lam.max():.3f}], monotone {monotone}"
        assert ap.residual < 1e-3 and monotone and np.all((lam > 0) & (lam < 1))


def test_c7_wos_suite():
    with criterion("C7", 300) as info:
        n, s = 3, 0.5
        pts, _ = sample_ball_exit(np.zeros(n), 1.0, s, 1_000_000, seed=21)
        ks = stats.kstest(np.linalg.norm(pts, axis=1), lambda r: radial_exit_cdf(n, s, r)).statistic

        f = lambda w: w ** (-s) / (1 + w)
        exact = math.sin(math.pi * s) / math.pi * (integrate.quad(f, 1, 2)[0] + integrate.quad(f, 2, np.inf)[0])
        x = np.array([0.0, 0.0, 1.0])
        hs = solve_dirichlet(HalfSpace(n), x, lambda z: (z[:, -1] < -1.0).astype(float), s, WosConfig(paths=100_000, seed=22))
        z_hs = (hs.value - exact) / hs.std_err

        cone = Cone(n, find_aperture(n, s).beta)
        a, b = np.array([1.0, 0.0, 0.2]), np.array([0.0, 1.2, -0.1])
        cfg = WosConfig(paths=100_000, seed=23)
        gab = green_estimate(cone, a, b, s, cfg)
        gba = green_estimate(cone, b, a, s, cfg.replace(seed=24))
        z_sym = (gab.value - gba.value) / math.hypot(gab.std_err, gba.std_err)
        r = 2.5
        gr = green_estimate(cone, r * a, r * b, s, cfg.replace(seed=25))
        fac = r ** (n - 2 * s)
        z_sc = (fac * gr.value - gab.value) / math.hypot(fac * gr.std_err, gab.std_err)
        info["detail"] = (f"KS {ks:.1e}; half-space z {z_hs:+.2f} (sigma {hs.std_err / exact:.2%}); "
                          f"symmetry z {z_sym:+.2f}; scaling z {z_sc:+.2f}")
        assert ks < 0.002
        assert abs(z_hs) < 3 and hs.std_err < 0.01 * exact
        assert abs(z_sym) < 3 and abs(z_sc) < 3


def test_c8_kernel_identities():
    with criterion("C8", 1800) as info:
        n, s = 3, 0.5
        cone = Cone(n, find_aperture(n, s).beta)
        zs = []
        for i, t in enumerate((0.5, 0.25)):
            a = kernel_tilde(cone, t, s, kcfg(100_000, 100 + 2 * i))
            b = kernel_tilde(cone, 1 / t, s, kcfg(100_000, 101 + 2 * i))
            zs.append((a.value - t**-n * b.value) / math.hypot(a.std_err, t**-n * b.std_err))

        rng = np.random.default_rng(8)

        def pair():
            x = chart_point(cone, 1, 1.0, np.array([1.0, 0.0]))
            ang = rng.uniform(0, math.pi)
            y = chart_point(cone, int(rng.choice([1, -1])), float(np.exp(rng.uniform(-1.5, 1.5))),
                            np.array([math.cos(ang), math.sin(ang)]))
            return x, y

        zh = []
        for k in range(5):
            x, y = pair()
            p = kernel_point(cone, x, y, s, kcfg(60_000, 200 + 2 * k))
            q = kernel_point(cone, 2 * x, 2 * y, s, kcfg(60_000, 201 + 2 * k))
            zh.append((p.extrapolated - 2**n * q.extrapolated) / math.hypot(p.std_err, 2**n * q.std_err))

        bound = 10 * half_space_kernel(n, s, np.zeros(n), np.eye(n)[0])
        scaled = []
        for k in range(10):
            x, y = pair()
            p = kernel_point(cone, x, y, s, kcfg(60_000, 300 + k))
            r = np.linalg.norm(x - y) ** n
            scaled.append((p.extrapolated * r, p.std_err * r))
        top = max(v - 3 * e for v, e in scaled)
        info["detail"] = (f"inversion z {', '.join(f'{z:+.2f}' for z in zs)}; homogeneity max |z| "
                          f"{max(map(abs, zh)):.2f}; max K|x-y|^n {max(v for v, _ in scaled):.3f} (bound {bound:.3f})")
        assert all(abs(z) < 3 for z in zs)
        assert all(abs(z) < 3 for z in zh)
        assert top < bound and all(np.isfinite(v) for v, _ in scaled)


def test_c9_planar_instability():
    with criterion("C9", 1800) as info:
        rep = check_stability(2, 0.5, StabilityConfig(kernel=kcfg(50_000, 0, batch=500)))
        info["detail"] = f"H1 = {rep.h1.value:.4f} +- {rep.h1.std_err:.4f}, m0 = {rep.m0.value}, verdict {rep.verdict}"
        assert rep.m0.value == 0.0 and rep.m0.std_err == 0.0
        assert rep.h1.value > 3 * rep.h1.std_err
        assert rep.verdict == INSTABILITY


def test_c10_hardy_planar():
    with criterion("C10", 60) as info:
        r = hardy_2d_demo(0.5, (1e2, 1e3, 1e4))
        ratio = r.fitted_log_slope / 4
        var = (max(r.rhs_values) - min(r.rhs_values)) / np.mean(r.rhs_values)
        info["detail"] = f"slope/4 = {ratio:.4f}, rhs variation {var:.1e}"
        assert 0.95 <= ratio <= 1.05 and var < 0.05


def test_c11_dimension_arithmetic():
    with criterion("C11", 1) as info:
        m = max_unstable_dimension()
        info["detail"] = f"max_unstable_dimension = {m}, alpha_feasibility(6) = {alpha_feasibility(6)}"
        assert m == 5 and alpha_feasibility(6) is None


def test_c12_higher_dimensions_pipeline():
    # completion and reporting only; the verdicts are not asserted
    with criterion("C12", 1800) as info:
        cfg = StabilityConfig(kernel=kcfg(2000, 0, batch=100))
        parts = []
        for n in range(3, 8):
            rep = check_stability(n, 0.5, cfg)
            assert rep.verdict in (INSTABILITY, CONSISTENT, INCONCLUSIVE)
            assert math.isfinite(rep.h1.value) and math.isfinite(rep.m0.value)
            parts.append(f"n={n}: H1 {rep.h1.value:.3g}+-{rep.h1.std_err:.2g} m0 {rep.m0.value:.3g}+-{rep.m0.std_err:.2g} {rep.verdict}")
        info["detail"] = "; ".join(parts)
