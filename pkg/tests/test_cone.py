import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from stablecones.cone import (
    CapCone,
    Cone,
    boundary_normal,
    cap_measure,
    chart_area_density,
    chart_point,
    normal_gap_sq,
    signed_distance,
)


def brute_distance(c: Cone, x, samples=200_001):
    """Distance to the boundary by sampling the 2D meridian picture."""
    zeta = np.linalg.norm(x[:-1])
    tau = x[-1]
    rho = np.linspace(0, 4 * (np.linalg.norm(x) + 1), samples)
    best = np.inf
    for side in (1, -1):
        bz, bt = rho * c.ring_radius, side * rho * c.ring_height
        best = min(best, np.min(np.hypot(zeta - bz, tau - bt)))
    return best


points = st.lists(st.floats(-3, 3), min_size=3, max_size=3)


@settings(max_examples=60, deadline=None)
@given(beta=st.floats(0.2, 4.0), p=points)
def test_signed_distance_matches_sampling(beta, p):
    c = Cone(3, beta)
    x = np.array(p)
    d = signed_distance(c, x)
    assert abs(d) == pytest.approx(brute_distance(c, x), abs=1e-3)
    if abs(d) > 1e-9:
        assert (d > 0) == c.contains(x)


@settings(max_examples=40, deadline=None)
@given(beta=st.floats(0.2, 4.0), rho=st.floats(0.1, 5.0), ang=st.floats(0, 2 * math.pi), side=st.sampled_from([1, -1]))
def test_normal_is_inward_unit_and_orthogonal(beta, rho, ang, side):
    c = Cone(3, beta)
    p = chart_point(c, side, rho, np.array([math.cos(ang), math.sin(ang)]))
    nu = boundary_normal(c, p)
    assert np.linalg.norm(nu) == pytest.approx(1.0)
    assert np.dot(nu, p) == pytest.approx(0.0, abs=1e-12)
    assert signed_distance(c, p) == pytest.approx(0.0, abs=1e-12)
    h = 1e-3 * rho
    assert signed_distance(c, p + h * nu) == pytest.approx(h, rel=1e-6)
    np.testing.assert_allclose(boundary_normal(c, 7.0 * p), nu)


def test_normal_rejects_vertex():
    with pytest.raises(ValueError):
        boundary_normal(Cone(3, 1.0), np.zeros(3))


def test_cap_measure():
    assert cap_measure(Cone(2, 0.3)) == 4.0
    c = Cone(3, 1.0)
    assert cap_measure(c) == pytest.approx(2 * 2 * math.pi * math.sqrt(0.5))


def test_chart_area_density_integrates_to_cap_measure():
    c = Cone(4, 0.8)
    # surface area of the boundary within the unit ball: both sheets, rho in (0, 1)
    area = 2 * chart_area_density(c, 1.0) * (4 * math.pi) / (c.n - 1)
    assert area == pytest.approx(cap_measure(c) / (c.n - 1))


def test_normal_gap_against_vectors():
    c = Cone(3, 0.7)
    a = chart_point(c, 1, 1.0, np.array([1.0, 0.0]))
    for psi in (0.3, 2.0):
        w = np.array([math.cos(psi), math.sin(psi)])
        for side in (1, -1):
            b = chart_point(c, side, 2.0, w)
            gap = np.sum((boundary_normal(c, a) - boundary_normal(c, b)) ** 2)
            assert normal_gap_sq(c, math.cos(psi), side == 1) == pytest.approx(gap)


def test_cap_cone_half_space():
    h = CapCone(3, math.pi / 2)
    x = np.array([[0.3, -1.0, 2.0], [1.0, 1.0, -0.5], [0, 0, -2.0]])
    np.testing.assert_allclose(h.signed_distance(x), x[:, -1])
    assert list(h.contains(x)) == [True, False, False]


def test_validation():
    for bad in ((1, 1.0), (3, 0.0), (3, math.inf), (2.5, 1.0)):
        with pytest.raises(ValueError):
            Cone(*bad)
    with pytest.raises(ValueError):
        CapCone(3, 0.0)
    with pytest.raises(ValueError):
        chart_point(Cone(3, 1.0), 0, 1.0, np.array([1.0, 0.0]))
    with pytest.raises(ValueError):
        Cone(3, 1.0).contains(np.zeros(2))
