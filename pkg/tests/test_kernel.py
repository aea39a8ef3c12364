import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from stablecones.cone import Cone, cap_measure, chart_point
from stablecones.exponent import find_aperture
from stablecones.kernel import (
    KernelConfig,
    KernelTable,
    build_kernel_table,
    cached_kernel_table,
    extrapolate,
    half_space_kernel,
    kernel_point,
    kernel_tilde,
    mellin_m0,
    rho_rule,
    ring_targets,
    t_rule,
    tail_warnings,
    _psi_rule,
)
from stablecones.wos import HalfSpace, WosConfig, ball_green


def kcfg(paths, seed=0, batch=None, **kw):
    return KernelConfig(wos=WosConfig(paths=paths, batch_size=batch or paths // 100, seed=seed), **kw)


@pytest.mark.parametrize("n", [2, 3])
def test_half_space_formula_from_ball_green(n):
    # a huge ball looks like a half-space near its boundary
    R, d, s = 1e4, 1e-4, 0.4
    x, y = np.zeros(n), np.zeros(n)
    x[-1] = R - d
    y[0], y[-1] = 1.0, math.sqrt((R - d) ** 2 - 1.0)
    g = ball_green(n, s, R, x, y) / d ** (2 * s)
    assert g == pytest.approx(half_space_kernel(n, s, x, y), rel=1e-4)


@pytest.mark.parametrize("n, paths", [(2, 100_000), (3, 200_000)])
def test_half_space_kernel_estimate(n, paths):
    x, y = np.zeros(n), np.zeros(n)
    y[0] = 1.0
    k = kernel_point(HalfSpace(n), x, y, 0.5, kcfg(paths, seed=2))
    exact = half_space_kernel(n, 0.5, x, y)
    assert abs(k.extrapolated - exact) < 3 * k.std_err
    assert k.std_err < 0.15 * exact


@pytest.fixture(scope="module")
def cone3():
    return Cone(3, find_aperture(3, 0.5).beta)


def test_kernel_homogeneity_in_cone(cone3):
    x = chart_point(cone3, 1, 1.0, np.array([1.0, 0.0]))
    y = chart_point(cone3, 1, 1.6, np.array([0.0, 1.0]))
    a = kernel_point(cone3, x, y, 0.5, kcfg(60_000, seed=1))
    b = kernel_point(cone3, 2 * x, 2 * y, 0.5, kcfg(60_000, seed=2))
    scaled, err = b.extrapolated * 8, b.std_err * 8
    assert abs(scaled - a.extrapolated) < 3 * math.hypot(err, a.std_err)


def test_kernel_symmetry_in_cone(cone3):
    x = chart_point(cone3, 1, 1.0, np.array([1.0, 0.0]))
    y = chart_point(cone3, 1, 1.4, np.array([0.6, 0.8]))
    a = kernel_point(cone3, x, y, 0.5, kcfg(60_000, seed=3))
    b = kernel_point(cone3, y, x, 0.5, kcfg(60_000, seed=4))
    assert abs(a.extrapolated - b.extrapolated) < 3 * math.hypot(a.std_err, b.std_err)


def test_kernel_point_validation(cone3):
    x = chart_point(cone3, 1, 1.0, np.array([1.0, 0.0]))
    with pytest.raises(ValueError):
        kernel_point(cone3, x, x, 0.5, kcfg(1000))
    with pytest.raises(ValueError):
        kernel_point(cone3, x, 1.1 * x + 0.3, 0.5, kcfg(1000))
    with pytest.raises(ValueError):
        kernel_tilde(cone3, 1.0, 0.5, kcfg(1000))


def test_inversion_planar():
    cone = Cone(2, find_aperture(2, 0.5).beta)
    t = 0.5
    a = kernel_tilde(cone, t, 0.5, kcfg(100_000, seed=5))
    b = kernel_tilde(cone, 1 / t, 0.5, kcfg(100_000, seed=6))
    assert abs(a.value - t ** (-2) * b.value) < 3 * math.hypot(a.std_err, t ** (-2) * b.std_err)


# ---------------------------------------------------------------- extrapolation


def synthetic(values, noise, batches=200, seed=0):
    rng = np.random.default_rng(seed)
    lev = np.array([v + noise * rng.normal(size=(batches, 1)) for v in values])
    return lev, np.full(batches, 100.0)


def test_extrapolate_linear_offset():
    eps = np.array([0.08, 0.04])
    lev, sizes = synthetic(1.0 + 5.0 * eps, 0.01)
    v, e, g, deg, _ = extrapolate(lev, sizes, 2.0)
    assert g[0] == 1.0 and not deg[0]
    assert abs(v[0] - 1.0) < 4 * e[0]


def test_extrapolate_fits_order_with_three_levels():
    eps = np.array([0.16, 0.08, 0.04])
    lev, sizes = synthetic(2.0 - 3.0 * eps**1.5, 0.002)
    v, e, g, deg, _ = extrapolate(lev, sizes, 2.0)
    assert g[0] == pytest.approx(1.5, abs=0.15)
    assert abs(v[0] - 2.0) < 4 * e[0] + 1e-3


def test_extrapolate_plateau_keeps_coarse_level():
    lev, sizes = synthetic([1.0, 1.0, 1.0], 0.05)
    v, e, g, deg, _ = extrapolate(lev, sizes, 2.0)
    assert g[0] == 0 and not deg[0]
    assert v[0] == pytest.approx(np.mean(lev[0]))


def test_extrapolate_flags_oscillation():
    lev, sizes = synthetic([1.0, 2.0, 1.0], 0.01)
    assert extrapolate(lev, sizes, 2.0)[3][0]


def test_extrapolate_refuses_heavy_tailed_fine_level():
    lev, sizes = synthetic([1.0, 0.7], 0.01)
    lev[1, :3, 0] = 5.0  # a few rare large batches
    lev[1] -= np.mean(lev[1]) - 0.7
    v, e, g, deg, _ = extrapolate(lev, sizes, 2.0)
    assert deg[0] and g[0] == 0
    assert v[0] == pytest.approx(np.mean(lev[0]))


def test_tail_warnings():
    lev, _ = synthetic([1.0, 1.0], 0.01)
    assert tail_warnings(lev, (0.08, 0.04)) == []
    lev[1, 0, 0] = 50.0
    w = tail_warnings(lev, (0.08, 0.04))
    assert len(w) == 1 and "eps=0.04" in w[0]


@settings(max_examples=20, deadline=None)
@given(shift=st.floats(-5, 5), scale=st.floats(0.1, 10))
def test_extrapolate_is_affine_equivariant(shift, scale):
    eps = np.array([0.08, 0.04])
    lev, sizes = synthetic(3.0 + 2.0 * eps, 0.01, seed=1)
    v1 = extrapolate(lev, sizes, 2.0)[0][0]
    v2 = extrapolate(scale * lev + shift, sizes, 2.0)[0][0]
    if v1 > 0 and scale * v1 + shift > 0:
        assert v2 == pytest.approx(scale * v1 + shift, rel=1e-9, abs=1e-9)


# ---------------------------------------------------------------- quadrature


@pytest.mark.parametrize("n", [2, 3, 4])
@pytest.mark.parametrize("rho", [0.3, 0.97, 2.0])
def test_ring_weights_integrate_constant(n, rho):
    cone = Cone(n, 0.9)
    _, w, gap = ring_targets(cone, rho, KernelConfig())
    assert w.sum() == pytest.approx(cap_measure(cone), rel=1e-5)
    assert np.all(gap >= 0)


@pytest.mark.parametrize("width", [0.01, 0.3, 2.0])
def test_psi_rule_resolves_peak(width):
    psi, w = _psi_rule(6, width)
    f = lambda p: 1.0 / (width**2 + p**2)
    exact = integrate.quad(f, 0, math.pi, points=[width])[0]
    assert np.sum(w * f(psi)) == pytest.approx(exact, rel=1e-6)


def test_rho_and_t_rules():
    cfg = KernelConfig()
    rho, w = rho_rule(cfg)
    assert np.sum(w / rho) == pytest.approx(2 * cfg.rho_span)
    t, wt = t_rule(cfg)
    assert np.all((t > 0) & (t < 1)) and np.sum(wt) == pytest.approx(1.0)
    assert np.sum(wt * (1 - t) ** 2) == pytest.approx(1 / 3)


def synthetic_table(n, value=1.0, batches=10):
    t, wt = t_rule(KernelConfig())
    return KernelTable(
        n=n, s=0.5, beta=1.0, t_grid=t, values=np.full(t.size, value), std_errs=np.zeros(t.size),
        eps_levels=(0.08, 0.04), extrapolation_order=np.zeros(t.size), weights=wt,
        batch_values=np.full((batches, t.size), value), batch_sizes=np.full(batches, 10.0), paths=100,
    )


def test_mellin_m0_quadrature():
    # m(0) of a constant table: 2 int (1 - t^{(n-2)/2})^2 dt
    assert mellin_m0(synthetic_table(4), 4).value == pytest.approx(2 / 3)
    assert mellin_m0(synthetic_table(3), 3).value == pytest.approx(2 * (1 - 4 / 3 + 0.5), rel=1e-9)
    assert mellin_m0(synthetic_table(2), 2).value == 0.0
    with pytest.raises(ValueError):
        mellin_m0(synthetic_table(3), 4)


def test_table_json_roundtrip():
    tab = synthetic_table(3)
    back = KernelTable.from_json(tab.to_json())
    np.testing.assert_array_equal(back.values, tab.values)
    assert back.eps_levels == tab.eps_levels
    assert tab.to_csv().splitlines()[0] == "t,value,std_err,order"


def test_cached_table_hit():
    cone = Cone(3, 1.1)
    cfg = kcfg(400, batch=100, psi_nodes=2, gl_order=2, t_levels=1)
    a, key, hit = cached_kernel_table(cone, 0.5, cfg)
    b, key2, hit2 = cached_kernel_table(cone, 0.5, cfg)
    assert not hit and hit2 and key == key2
    np.testing.assert_array_equal(a.values, b.values)


def test_config_validation():
    for eps in ((0.08,), (0.04, 0.08), (0.3, 0.15), (0.08, 0.04, 0.01)):
        with pytest.raises(ValueError):
            KernelConfig(eps_levels=eps)
    with pytest.raises(ValueError):
        KernelConfig(psi_nodes=1)
    with pytest.raises(ValueError):
        build_kernel_table(Cone(3, 1.0), 0.5, kcfg(200, batch=100), t_grid=[0.5, 1.5])
