import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from stablecones.cone import CapCone, Cone
from stablecones.exponent import (
    MeshControls,
    TheoryViolation,
    build_mesh,
    extrapolated_eigenvalue,
    find_aperture,
    lambda_from_mu,
    lambda_of_beta,
    principal_eigenvalue,
    richardson,
)


@pytest.mark.parametrize("n, s", [(2, 0.5), (3, 0.5), (3, 0.75), (4, 0.3)])
def test_half_space_eigenvalue(n, s):
    ext, err, mus, _ = extrapolated_eigenvalue(n, s, CapCone(n, math.pi / 2))
    assert ext == pytest.approx(s * (n - s), rel=1e-4)
    # conforming discretisation: refinement lowers the eigenvalue
    assert mus[0] > mus[1] > mus[2] > ext - err


def test_eigenvalue_reports_positive_mode():
    r = principal_eigenvalue(3, 0.5, Cone(3, 1.0), build_mesh(Cone(3, 1.0), 20))
    assert r.positive and r.residual < 1e-8 and r.dofs > 20


def test_dimension_mismatch():
    with pytest.raises(ValueError):
        principal_eigenvalue(2, 0.5, Cone(3, 1.0), build_mesh(Cone(3, 1.0), 10))


@settings(max_examples=50, deadline=None)
@given(n=st.integers(2, 8), s=st.floats(0.05, 0.95), lam=st.floats(0.0, 2.0))
def test_lambda_from_mu_inverts_quadratic(n, s, lam):
    mu = lam * (lam + n - 2 * s)
    assert lambda_from_mu(n, s, mu) == pytest.approx(lam, abs=1e-9)


def test_richardson_second_order():
    h = 0.1 * 0.5 ** np.arange(3)
    ext, p, err = richardson(3.0 + 2.0 * h**2)
    assert ext == pytest.approx(3.0, abs=1e-12)
    assert p == pytest.approx(2.0)


def test_richardson_falls_back_on_oscillation():
    ext, p, err = richardson([1.0, 1.2, 1.1])
    assert ext == 1.1 and math.isnan(p) and err == pytest.approx(0.1)


def test_lambda_monotone_in_beta_and_in_range():
    betas = np.geomspace(0.4, 2.5, 8)
    res = [lambda_of_beta(3, 0.5, b) for b in betas]
    lam = np.array([r.lam for r in res])
    err = np.array([r.error_estimate for r in res])
    assert np.all(np.diff(lam) > err[1:] + err[:-1])
    assert np.all((lam > 0) & (lam < 1))


def test_theory_violation_is_raised(monkeypatch):
    import stablecones.exponent as ex

    # an eigenvalue above the admissible range must not pass silently
    monkeypatch.setattr(ex, "extrapolated_eigenvalue", lambda *a, **k: (50.0, 0.0, [50.0, 50.0], 2.0))
    with pytest.raises(TheoryViolation):
        ex.lambda_of_beta(3, 0.5, 1.0)


def test_mesh_needs_cells():
    with pytest.raises(ValueError):
        build_mesh(Cone(3, 1.0), 4)


# reference apertures from this solver, cross-checked on a twice finer mesh
@pytest.mark.parametrize("n, s, beta", [(2, 0.5, 0.4741143926), (3, 0.5, 1.073428298)])
def test_aperture_frozen(n, s, beta):
    a = find_aperture(n, s, use_cache=False)
    assert a.beta == pytest.approx(beta, rel=1e-8)
    assert a.residual < 1e-3
    fine = find_aperture(n, s, controls=MeshControls(cells=40), use_cache=False)
    assert fine.beta == pytest.approx(beta, rel=1e-4)


def test_aperture_cache_roundtrip():
    a = find_aperture(2, 0.5)
    b = find_aperture(2, 0.5)
    assert b.from_cache and b.beta == a.beta and b.cache_key == a.cache_key
