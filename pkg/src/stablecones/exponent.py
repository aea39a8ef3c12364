"""Homogeneity exponent of the positive s-harmonic function on a cone.

A lambda-homogeneous solution extends to a function rho^lambda Phi on the
upper half of R^{n+1} with weight y^a, a = 1 - 2s.  Axial symmetry leaves a
two-dimensional eigenproblem for Phi(theta, phi), where

    x_n = rho cos(phi) cos(theta),  |x'| = rho cos(phi) sin(theta),
    y = rho sin(phi),

with eigenvalue mu = lambda (lambda + n - 2s).  The problem is discretised by
bilinear finite elements on a tensor mesh graded toward the Dirichlet edge
and toward phi = 0.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy import optimize
from scipy.special import roots_jacobi, roots_legendre

from . import cache
from .cone import CapCone, Cone
from .constants import check_order


class TheoryViolation(RuntimeError):
    """A computed exponent left the interval (0, 2s) beyond its error bar."""


class BracketNotFound(RuntimeError):
    pass


def graded(a: float, b: float, cells: int, q: float, toward: str) -> np.ndarray:
    """Nodes on [a, b] clustered like t^q toward one end."""
    t = np.linspace(0.0, 1.0, cells + 1) ** q
    if toward == "a":
        return a + (b - a) * t
    return b - (b - a) * t[::-1]


@dataclass(frozen=True)
class AngularMesh:
    """Tensor mesh on the angular quotient.

    ``dirichlet`` flags the theta nodes whose phi = 0 node lies in the trace
    of the complement.  ``theta_max`` is pi for a cap cone and pi/2 for
    C(beta), whose even symmetry under x_n -> -x_n makes theta = pi/2 a
    natural boundary.
    """

    theta: np.ndarray
    phi: np.ndarray
    dirichlet: np.ndarray

    @property
    def h(self) -> float:
        return float(max(np.diff(self.theta).max(), np.diff(self.phi).max()))

    @property
    def size(self) -> int:
        return self.theta.size * self.phi.size


def _theta_nodes(edge, theta_max, cells, q):
    n1 = max(4, int(round(cells * edge / theta_max)))
    n2 = max(4, cells - n1)
    left = graded(0.0, edge, n1, q, "b")
    right = graded(edge, theta_max, n2, q, "a")
    return np.concatenate([left, right[1:]])


def build_mesh(domain, cells: int, grading: float = 2.5, phi_ratio: float = 0.5) -> AngularMesh:
    """Mesh with ``cells`` theta cells and ``phi_ratio * cells`` phi cells."""
    if cells < 8:
        raise ValueError("need at least 8 theta cells")
    n_phi = max(4, int(round(phi_ratio * cells)))
    phi = graded(0.0, 0.5 * math.pi, n_phi, grading, "a")
    if isinstance(domain, Cone):
        edge = domain.edge_angle
        theta = _theta_nodes(edge, 0.5 * math.pi, cells, grading)
        dirichlet = theta <= edge * (1 + 1e-14)
    elif isinstance(domain, CapCone):
        edge = domain.theta0
        theta = _theta_nodes(edge, math.pi, cells, grading)
        dirichlet = theta >= edge * (1 - 1e-14)
    else:
        raise TypeError("domain must be a Cone or a CapCone")
    return AngularMesh(theta, phi, dirichlet)


_GL_X, _GL_W = roots_legendre(10)


def _element_matrices(nodes, weight, jacobi_exp=None, smooth_part=None):
    """1D P1 mass and stiffness with a weight function.

    When ``jacobi_exp`` is given, the first cell uses Gauss-Jacobi against
    (x - x0)^jacobi_exp and ``smooth_part`` supplies weight / (x - x0)^exp.
    """
    m = nodes.size
    a, b = nodes[:-1], nodes[1:]
    h = b - a
    x = a[:, None] + h[:, None] * (1 + _GL_X[None, :]) / 2
    w = _GL_W[None, :] * h[:, None] / 2 * weight(x)
    if jacobi_exp is not None:
        xj, wj = roots_jacobi(10, 0.0, jacobi_exp)
        x0 = a[0] + h[0] * (1 + xj) / 2
        x[0] = x0
        w[0] = wj * (h[0] / 2) ** (1 + jacobi_exp) * smooth_part(x0)
    n0 = (b[:, None] - x) / h[:, None]
    n1 = (x - a[:, None]) / h[:, None]
    m00 = np.sum(w * n0 * n0, axis=1)
    m01 = np.sum(w * n0 * n1, axis=1)
    m11 = np.sum(w * n1 * n1, axis=1)
    k = np.sum(w, axis=1) / h**2
    idx = np.arange(m - 1)
    rows = np.concatenate([idx, idx, idx + 1, idx + 1])
    cols = np.concatenate([idx, idx + 1, idx, idx + 1])
    M = sp.csr_matrix((np.concatenate([m00, m01, m01, m11]), (rows, cols)), shape=(m, m))
    K = sp.csr_matrix((np.concatenate([k, -k, -k, k]), (rows, cols)), shape=(m, m))
    return M, K


def _safe_sinc_ratio(x):
    return np.sinc(x / math.pi)  # sin(x)/x, equal to 1 at 0


def assemble(n: int, s: float, mesh: AngularMesh):
    """Reduced stiffness A, mass B and the prolongation P to the full grid."""
    a = 1.0 - 2.0 * s
    th, ph = mesh.theta, mesh.phi
    Mt, Kt = _element_matrices(th, lambda x: np.sin(x) ** (n - 2))

    def phi_mats(cos_pow):
        return _element_matrices(
            ph,
            lambda x: np.sin(x) ** a * np.cos(x) ** cos_pow,
            jacobi_exp=a,
            smooth_part=lambda x: _safe_sinc_ratio(x) ** a * np.cos(x) ** cos_pow,
        )

    Mp, Kp = phi_mats(n - 1)
    # the theta-gradient term carries 1/cos^2(phi); its weight vanishes at
    # the pole only when n > 3, so the pole row is removed explicitly
    Mp2, _ = phi_mats(n - 3)
    Mp2 = Mp2.tolil()
    Mp2[-1, :] = 0.0
    Mp2[:, -1] = 0.0
    Mp2 = Mp2.tocsr()
    A = sp.kron(Mt, Kp) + sp.kron(Kt, Mp2)
    B = sp.kron(Mt, Mp)

    nt, nph = th.size, ph.size
    rows, cols = [], []
    k = 0
    for i in range(nt):
        for j in range(nph - 1):
            if j == 0 and mesh.dirichlet[i]:
                continue
            rows.append(i * nph + j)
            cols.append(k)
            k += 1
    # all nodes at phi = pi/2 are the same point of the sphere
    for i in range(nt):
        rows.append(i * nph + nph - 1)
        cols.append(k)
    P = sp.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(nt * nph, k + 1))
    return (P.T @ A @ P).tocsc(), (P.T @ B @ P).tocsc(), P


@dataclass(frozen=True)
class EigenResult:
    mu: float
    residual: float
    positive: bool
    dofs: int
    mesh_h: float


def principal_eigenvalue(n: int, s: float, domain, mesh: AngularMesh) -> EigenResult:
    s = check_order(s)
    if domain.n != n:
        raise ValueError("domain dimension does not match n")
    A, B, _ = assemble(n, s, mesh)
    try:
        vals, vecs = spla.eigsh(A, k=1, M=B, sigma=0.0, which="LM")
    except spla.ArpackNoConvergence as exc:
        raise RuntimeError("eigen iteration did not converge") from exc
    mu = float(vals[0])
    v = vecs[:, 0]
    tol = 1e-10 * np.abs(v).max()
    positive = bool(np.all(v > -tol) or np.all(v < tol))
    if not positive:
        raise RuntimeError("principal eigenfunction changes sign; discretisation fault")
    r = A @ v - mu * (B @ v)
    residual = float(np.linalg.norm(r) / np.linalg.norm(B @ v))
    return EigenResult(mu, residual, positive, A.shape[0], mesh.h)


@dataclass(frozen=True)
class MeshControls:
    """Coarsest theta cell count, number of halvings and grading power."""

    cells: int = 20
    levels: int = 3
    grading: float = 2.5
    phi_ratio: float = 0.5

    def signature(self) -> dict:
        return asdict(self)


def richardson(values):
    """Extrapolate a sequence computed at h, h/2, h/4, ...

    Returns (limit, observed order, error estimate).  With fewer than three
    values, or a non-monotone tail, the finest value is returned and the
    error estimate is the last difference.
    """
    v = np.asarray(values, dtype=float)
    if v.size < 3:
        d = abs(v[-1] - v[-2]) if v.size > 1 else math.inf
        return float(v[-1]), math.nan, float(d)
    d1, d2 = v[-3] - v[-2], v[-2] - v[-1]
    if d1 * d2 <= 0 or abs(d1) <= abs(d2):
        return float(v[-1]), math.nan, float(abs(d2))
    p = min(max(math.log2(d1 / d2), 0.5), 4.0)
    ext = v[-1] - d2 / (2.0**p - 1.0)
    return float(ext), float(p), float(abs(ext - v[-1]))


def extrapolated_eigenvalue(n: int, s: float, domain, controls: MeshControls = MeshControls()):
    mus = []
    for lev in range(controls.levels):
        mesh = build_mesh(domain, controls.cells * 2**lev, controls.grading, controls.phi_ratio)
        mus.append(principal_eigenvalue(n, s, domain, mesh).mu)
    ext, p, err = richardson(mus)
    return ext, err, mus, p


def lambda_from_mu(n: int, s: float, mu: float) -> float:
    b = n - 2.0 * s
    return 0.5 * (-b + math.sqrt(b * b + 4.0 * mu))


@dataclass(frozen=True)
class ExponentResult:
    beta: float
    mu: float
    lam: float
    mesh_h: float
    error_estimate: float
    order: float


def lambda_of_beta(n: int, s: float, beta: float, controls: MeshControls = MeshControls()) -> ExponentResult:
    s = check_order(s)
    cone = Cone(n, beta)
    mu, mu_err, mus, p = extrapolated_eigenvalue(n, s, cone, controls)
    lam = lambda_from_mu(n, s, mu)
    lam_fine = lambda_from_mu(n, s, mus[-1])
    err = abs(lam - lam_fine)
    if lam + err <= 0.0 or lam - err >= 2.0 * s:
        raise TheoryViolation(f"lambda={lam:.6g} outside (0, {2 * s}) at beta={beta}")
    h = build_mesh(cone, controls.cells * 2 ** (controls.levels - 1), controls.grading).h
    return ExponentResult(float(beta), mu, lam, h, err, p)


@dataclass(frozen=True)
class ApertureResult:
    n: int
    s: float
    beta: float
    lam: float
    mu: float
    error_estimate: float
    residual: float
    mesh: dict
    cache_key: str
    from_cache: bool = False


SWEEP = tuple(10.0 ** (k / 2.0) for k in range(-6, 7))


def find_aperture(
    n: int,
    s: float,
    tol: float = 1e-3,
    controls: MeshControls = MeshControls(),
    use_cache: bool = True,
) -> ApertureResult:
    """Aperture beta with lambda(beta) = s.

    The sign change is located on a geometric grid over [1e-3, 1e3],
    expanding outward from beta = 1, and refined with Brent's method.
    """
    s = check_order(s)
    sig = {"n": int(n), "s": float(s), "tol": float(tol), "mesh": controls.signature()}
    key = cache.cache_key("aperture", sig)
    if use_cache:
        hit = cache.load("aperture", sig)
        if hit is not None:
            return ApertureResult(**{**hit, "mesh": controls.signature(), "cache_key": key, "from_cache": True})

    memo: dict[float, ExponentResult] = {}

    def res(beta):
        if beta not in memo:
            memo[beta] = lambda_of_beta(n, s, beta, controls)
        return memo[beta]

    f = lambda b: res(b).lam - s
    centre = SWEEP.index(1.0)
    bracket = None
    for off in range(len(SWEEP)):
        for i, j in ((centre - off - 1, centre - off), (centre + off, centre + off + 1)):
            if 0 <= i and j < len(SWEEP):
                if f(SWEEP[i]) * f(SWEEP[j]) <= 0:
                    bracket = (SWEEP[i], SWEEP[j])
                    break
        if bracket:
            break
    if bracket is None:
        raise BracketNotFound(f"no sign change of lambda - s on [1e-3, 1e3] for n={n}, s={s}")
    beta = optimize.brentq(f, *bracket, xtol=1e-14, rtol=1e-12, maxiter=200)
    r = res(beta)
    residual = abs(r.lam - s)
    if residual >= tol:
        raise RuntimeError(f"aperture residual {residual:.2e} above tol {tol}")
    payload = {
        "n": int(n),
        "s": float(s),
        "beta": float(beta),
        "lam": r.lam,
        "mu": r.mu,
        "error_estimate": r.error_estimate,
        "residual": residual,
    }
    if use_cache:
        cache.store("aperture", sig, payload)
    return ApertureResult(**payload, mesh=controls.signature(), cache_key=key)
