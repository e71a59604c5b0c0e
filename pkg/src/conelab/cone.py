"""Geometry and calculus of homogeneous functions on the forward light cone.

Null vectors are parameterized as l = (1, n) with n a unit 3-vector; every
cone function is stored by its samples on this section, with the homogeneity
degree kept as metadata.  The metric is (+,-,-,-) and all 4-vectors in code
are arrays of contravariant components.

The spherical calculus (quadrature, harmonic transforms, tangential
derivatives) lives in :class:`SphereEngine`.  Vector cone fields orthogonal
to l are handled through their tangent representative: the spatial part of
F - F^0 l, which is a tangent field on the unit sphere and determines the
equivalence class of F modulo multiples of l.

Operator orientation: ``gradient`` of a degree-0 scalar has tangent
representative -grad_S(phi), and ``divergence`` is defined so that
divergence(gradient(phi)) equals the Laplace-Beltrami operator of phi
divided by (t.l)^2, i.e. eigenvalue -l(l+1) on Y_lm.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import special

from .errors import HomogeneityError

__all__ = [
    "minkowski",
    "NullDirection",
    "ConeGrid",
    "make_grid",
    "SphereEngine",
    "get_engine",
    "HomogeneousConeField",
    "integrate_cone",
    "tangential_derivative",
    "check_invariant_integrals",
    "curl_defect",
    "tangent_rep",
    "field_from_tangent",
    "boost_matrix",
    "hyperboloid_derivative",
    "dump_grid_csv",
    "dump_field_csv",
]

TIME_AXIS = np.array([1.0, 0.0, 0.0, 0.0])


def minkowski(a, b):
    """Minkowski product a.b = a0 b0 - a_vec . b_vec on the last axis."""
    a = np.asarray(a)
    b = np.asarray(b)
    return a[..., 0] * b[..., 0] - np.sum(a[..., 1:] * b[..., 1:], axis=-1)


def lower_index(a):
    """Covariant components (a0, -a1, -a2, -a3) of a contravariant array."""
    out = np.array(a, copy=True)
    out[..., 1:] *= -1.0
    return out


@dataclass(frozen=True)
class NullDirection:
    """A null direction l = (1, n_hat) on the forward cone."""

    n_hat: np.ndarray

    def __post_init__(self):
        n = np.asarray(self.n_hat, dtype=float)
        if n.shape != (3,) or abs(np.linalg.norm(n) - 1.0) > 1e-14:
            raise ValueError("n_hat must be a unit 3-vector")
        object.__setattr__(self, "n_hat", n)

    @property
    def l_vector(self):
        return np.concatenate(([1.0], self.n_hat))


@dataclass(frozen=True)
class ConeGrid:
    """Quadrature nodes and weights for null directions.

    Product Gauss-Legendre (cos theta) x uniform azimuth grid; ``order`` is
    the guaranteed spherical-harmonic exactness degree: all integrands of
    harmonic band limit <= 2*order + 1 are integrated exactly.
    """

    order: int
    theta: np.ndarray
    phi: np.ndarray
    weights: np.ndarray
    nodes: np.ndarray  # (n, 3) unit vectors
    l_vectors: np.ndarray = field(init=False)  # (n, 4)

    def __post_init__(self):
        lv = np.concatenate([np.ones((len(self.weights), 1)), self.nodes], axis=1)
        object.__setattr__(self, "l_vectors", lv)

    def __len__(self):
        return len(self.weights)

    def integrate(self, values):
        """Quadrature sum over the section; values indexed by node first."""
        return np.einsum("n,n...->...", self.weights, np.asarray(values))

    def node_directions(self):
        return [NullDirection(n) for n in self.nodes]


def make_grid(order: int) -> ConeGrid:
    """Build the product quadrature grid of the given exactness order."""
    if order < 2:
        raise ValueError("grid order must be >= 2")
    n_theta = order + 1
    n_phi = 2 * order + 2
    x, w = np.polynomial.legendre.leggauss(n_theta)
    theta1 = np.arccos(x)
    phi1 = 2.0 * np.pi * np.arange(n_phi) / n_phi
    w_phi = 2.0 * np.pi / n_phi
    theta = np.repeat(theta1, n_phi)
    phi = np.tile(phi1, n_theta)
    weights = np.repeat(w * w_phi, n_phi)
    st = np.sin(theta)
    nodes = np.stack([st * np.cos(phi), st * np.sin(phi), np.cos(theta)], axis=1)
    return ConeGrid(order=order, theta=theta, phi=phi, weights=weights, nodes=nodes)


# ---------------------------------------------------------------------------
# spherical-harmonic tables


def _complex_harm_tables(theta, phi, l_max, with_grad=True):
    """Y_lm and (d/dtheta Y, im Y / sin theta) tables at the given points.

    Returns (Y, dth, dphs) each of shape (npts, K) with K = (l_max+1)^2 and
    coefficient index k = l^2 + l + m; the derivative tables are None when
    with_grad is unset.
    """
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    npts = theta.size
    K = (l_max + 1) ** 2
    Y = np.zeros((npts, K), dtype=complex)
    for ell in range(l_max + 1):
        for m in range(-ell, ell + 1):
            Y[:, ell * ell + ell + m] = special.sph_harm_y(ell, m, theta, phi)
    if not with_grad:
        return Y, None, None
    sin_t = np.clip(np.sin(theta), 1e-300, None)
    cot_t = np.cos(theta) / sin_t
    dth = np.zeros_like(Y)
    dphs = np.zeros_like(Y)
    for ell in range(l_max + 1):
        for m in range(-ell, ell + 1):
            k = ell * ell + ell + m
            dth[:, k] = m * cot_t * Y[:, k]
            if m + 1 <= ell:
                dth[:, k] += (
                    np.sqrt((ell - m) * (ell + m + 1))
                    * np.exp(-1j * phi)
                    * Y[:, ell * ell + ell + m + 1]
                )
            dphs[:, k] = 1j * m * Y[:, k] / sin_t
    return Y, dth, dphs


def _real_from_complex(l_max):
    """Sparse-ish unitary map from complex to real harmonic coefficients.

    Real basis: m=0 -> Y_l0;  m>0 -> sqrt2 (-1)^m Re Y_lm;
    m<0 -> sqrt2 (-1)^|m| Im Y_l|m|.  Returns U with R = C @ U
    (C complex table columns, R real table columns).
    """
    K = (l_max + 1) ** 2
    U = np.zeros((K, K), dtype=complex)
    s = 1.0 / np.sqrt(2.0)
    for ell in range(l_max + 1):
        base = ell * ell + ell
        U[base, base] = 1.0
        for m in range(1, ell + 1):
            sign = (-1.0) ** m
            # Re Y_lm = (Y_lm + (-1)^m Y_l,-m)/2 ; Im Y_lm = (Y_lm - (-1)^m Y_l,-m)/2i
            U[base + m, base + m] = sign * s
            U[base - m, base + m] = s
            U[base + m, base - m] = sign * s / 1j
            U[base - m, base - m] = -s / 1j
    return U


def real_harmonics_at(nhat, l_max, with_grad=False):
    """Real spherical harmonics (and tangent gradients) at arbitrary points.

    nhat: (npts, 3) unit vectors.  Returns Y (npts, K) real, and when
    with_grad is set also gradY (npts, 3, K) with Cartesian components of
    the tangential surface gradient.
    """
    nhat = np.atleast_2d(np.asarray(nhat, dtype=float))
    z = np.clip(nhat[:, 2], -1.0, 1.0)
    theta = np.arccos(z)
    phi = np.arctan2(nhat[:, 1], nhat[:, 0])
    Yc, dth, dphs = _complex_harm_tables(theta, phi, l_max, with_grad=with_grad)
    U = _real_from_complex(l_max)
    Y = (Yc @ U).real
    if not with_grad:
        return Y
    st, ct = np.sin(theta), np.cos(theta)
    sp, cp = np.sin(phi), np.cos(phi)
    theta_hat = np.stack([ct * cp, ct * sp, -st], axis=1)
    phi_hat = np.stack([-sp, cp, np.zeros_like(sp)], axis=1)
    gth = (dth @ U).real
    gph = (dphs @ U).real
    grad = theta_hat[:, :, None] * gth[:, None, :] + phi_hat[:, :, None] * gph[:, None, :]
    return Y, grad


class SphereEngine:
    """Cached spherical-harmonic machinery on a cone grid.

    Scalar fields are analyzed/synthesized in the real harmonic basis
    (complex coefficients allowed); tangent fields are split into gradient
    and curl potentials (Helmholtz decomposition), which diagonalizes the
    tangential calculus.
    """

    def __init__(self, grid: ConeGrid, l_max: int):
        if l_max > grid.order - 1:
            raise ValueError(
                f"l_max={l_max} too large for tangent-field analysis on an "
                f"order-{grid.order} grid (need l_max <= order - 1)"
            )
        self.grid = grid
        self.l_max = l_max
        self.Y, self.gradY = real_harmonics_at(grid.nodes, l_max, with_grad=True)
        self.rotY = np.cross(grid.nodes[:, None, :], self.gradY.transpose(0, 2, 1)).transpose(0, 2, 1)
        ls = np.concatenate([[ell] * (2 * ell + 1) for ell in range(l_max + 1)])
        self.ells = ls.astype(int)
        self.lap_eig = -(self.ells * (self.ells + 1.0))
        self._wY = grid.weights[:, None] * self.Y
        self._wgradY = grid.weights[:, None, None] * self.gradY
        self._wrotY = grid.weights[:, None, None] * self.rotY

    # -- scalar transforms --------------------------------------------------

    def analyze(self, values):
        """Harmonic coefficients of node samples (extra axes pass through)."""
        return np.einsum("nk,n...->k...", self._wY, np.asarray(values))

    def synth(self, coeffs):
        return np.einsum("nk,k...->n...", self.Y, np.asarray(coeffs))

    def synth_at(self, coeffs, nhat):
        """Evaluate a coefficient set at arbitrary unit vectors (chunked)."""
        nhat = np.atleast_2d(np.asarray(nhat, dtype=float))
        coeffs = np.asarray(coeffs)
        K = (self.l_max + 1) ** 2
        block = max(1, int(8e6 // K))
        pieces = []
        for i in range(0, len(nhat), block):
            Y = real_harmonics_at(nhat[i:i + block], self.l_max)
            pieces.append(np.einsum("pk,k...->p...", Y, coeffs))
        return np.concatenate(pieces, axis=0)

    def resolution_defect(self, values):
        """Relative norm of the part of a sample set not captured at l_max."""
        coeffs = self.analyze(values)
        back = self.synth(coeffs)
        num = np.sqrt(self.grid.integrate(np.abs(values - back) ** 2).sum())
        den = np.sqrt(self.grid.integrate(np.abs(values) ** 2).sum()) + 1e-300
        return float(num / den)

    # -- tangent-field transforms -------------------------------------------

    def surface_gradient(self, values):
        """grad_S of scalar node samples -> tangent field (n, 3, ...)."""
        c = self.analyze(values)
        return np.einsum("nik,k...->ni...", self.gradY, c)

    def helmholtz(self, tangent):
        """Potentials (alpha, beta) with v = grad_S alpha + n x grad_S beta.

        Coefficients are in the real basis; the l=0 entries are zero.
        """
        a = np.einsum("nik,ni...->k...", self._wgradY, np.asarray(tangent))
        b = np.einsum("nik,ni...->k...", self._wrotY, np.asarray(tangent))
        scale = np.zeros(len(self.ells))
        scale[1:] = 1.0 / (self.ells[1:] * (self.ells[1:] + 1.0))
        a = np.einsum("k,k...->k...", scale, a)
        b = np.einsum("k,k...->k...", scale, b)
        return a, b

    def surface_divergence(self, tangent):
        """div_S of a tangent field, from its gradient potential."""
        a, _ = self.helmholtz(tangent)
        return self.synth(np.einsum("k,k...->k...", self.lap_eig, a))

    def surface_laplacian(self, values):
        c = self.analyze(values)
        return self.synth(np.einsum("k,k...->k...", self.lap_eig, c))


@lru_cache(maxsize=16)
def get_engine(order: int, l_max: int) -> SphereEngine:
    return SphereEngine(make_grid(order), l_max)


# ---------------------------------------------------------------------------
# cone fields


@dataclass(frozen=True)
class HomogeneousConeField:
    """Samples of a homogeneous cone function on the l0 = 1 section.

    values has the node axis first; a trailing axis of length 4 right after
    the node axis is the 4-vector index when orthogonal_to_l is set.
    """

    values: np.ndarray
    degree: int
    orthogonal_to_l: bool = False
    grid: ConeGrid = None

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values))
        if self.orthogonal_to_l:
            self.check_orthogonality()

    def check_orthogonality(self, tol=1e-12):
        res = minkowski_with_l(self.values, self.grid)
        scale = np.abs(self.values).max() + 1e-300
        worst = np.abs(res).max() / scale
        if worst > tol:
            raise ValueError(f"field is not orthogonal to l: residual {worst:.2e}")
        return worst

    def eval_at(self, l_vectors, engine: SphereEngine):
        """Evaluate at arbitrary forward null vectors using homogeneity."""
        lv = np.atleast_2d(np.asarray(l_vectors, dtype=float))
        scale = lv[:, 0] ** self.degree
        nhat = lv[:, 1:] / lv[:, :1]
        coeffs = engine.analyze(self.values)
        vals = engine.synth_at(coeffs, nhat)
        return np.einsum("p,p...->p...", scale, vals)


def minkowski_with_l(values, grid: ConeGrid):
    """l . V at every node for 4-vector-valued samples (nodes, 4, ...)."""
    v = np.asarray(values)
    lv = grid.l_vectors
    return v[:, 0, ...] - np.einsum("ni,ni...->n...", lv[:, 1:], v[:, 1:, ...])


def tangent_rep(values, grid: ConeGrid):
    """Tangent representative of l-orthogonal 4-vector samples.

    Returns the spatial part of V - V^0 l, shape (nodes, 3, ...).
    """
    v = np.asarray(values)
    return v[:, 1:, ...] - grid.nodes.reshape(
        (len(grid), 3) + (1,) * (v.ndim - 2)
    ) * v[:, :1, ...].reshape((len(grid), 1) + v.shape[2:])


def field_from_tangent(tangent, grid: ConeGrid, degree=-1):
    """4-vector field (zero time component) from a tangent representative."""
    t = np.asarray(tangent)
    vals = np.zeros((t.shape[0], 4) + t.shape[2:], dtype=t.dtype)
    vals[:, 1:, ...] = t
    return HomogeneousConeField(vals, degree=degree, orthogonal_to_l=True, grid=grid)


def integrate_cone(f: HomogeneousConeField, grid: ConeGrid):
    """Invariant integral of a degree -2 cone function over null directions."""
    if f.degree != -2:
        raise HomogeneityError(f"integrate_cone needs degree -2, got {f.degree}")
    return grid.integrate(f.values)


_PAIRS = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]


def tangential_derivative(f: HomogeneousConeField, kind: str, engine: SphereEngine):
    """Tangential calculus on cone fields.

    kind = 'full_gradient': covariant 4-gradient of a scalar (degree drops
    by one; contravariant components are returned, spatial sign flipped).
    kind = 'L_ab': the six intrinsic derivatives, returned as a dict keyed
    by index pairs (degree preserved).
    kind = 'divergence': for l-orthogonal vector fields; oriented so that
    divergence(full_gradient(phi)) is the surface Laplacian of phi.
    """
    g = f.values
    if kind == "full_gradient":
        grad = engine.surface_gradient(g)
        nh = engine.grid.nodes.reshape((len(engine.grid), 3) + (1,) * (g.ndim - 1))
        spatial = f.degree * nh * g[:, None, ...] + grad
        vals = np.zeros((g.shape[0], 4) + g.shape[1:], dtype=np.result_type(g, float))
        vals[:, 1:, ...] = -spatial
        return HomogeneousConeField(
            vals, degree=f.degree - 1,
            orthogonal_to_l=(f.degree == 0), grid=engine.grid,
        )
    if kind == "L_ab":
        grad = engine.surface_gradient(g)
        nh = engine.grid.nodes
        out = {}
        for (a, b) in _PAIRS:
            if a == 0:
                j = b - 1
                comp = f.degree * nh[:, j].reshape((-1,) + (1,) * (g.ndim - 1)) * g
                comp = comp + grad[:, j, ...]
            else:
                i, j = a - 1, b - 1
                comp = -(
                    nh[:, i].reshape((-1,) + (1,) * (g.ndim - 1)) * grad[:, j, ...]
                    - nh[:, j].reshape((-1,) + (1,) * (g.ndim - 1)) * grad[:, i, ...]
                )
            out[(a, b)] = HomogeneousConeField(comp, degree=f.degree, grid=engine.grid)
        return out
    if kind == "divergence":
        v = tangent_rep(g, engine.grid)
        div = -engine.surface_divergence(v)
        return HomogeneousConeField(div, degree=f.degree - 1, grid=engine.grid)
    raise ValueError(f"unknown derivative kind {kind!r}")


def curl_defect(f: HomogeneousConeField, engine: SphereEngine):
    """Norm of the curl part of an l-orthogonal field, relative to its norm.

    Vanishes exactly when the tangent representative is a surface gradient,
    which is the admissibility condition on zero-frequency profile values.
    """
    v = tangent_rep(f.values, engine.grid)
    a, b = engine.helmholtz(v)
    w = engine.ells * (engine.ells + 1.0)
    curl_norm2 = np.einsum("k,k...->...", w, np.abs(b) ** 2)
    grad_norm2 = np.einsum("k,k...->...", w, np.abs(a) ** 2)
    total = np.sqrt(np.sum(curl_norm2) + np.sum(grad_norm2)) + 1e-300
    return float(np.sqrt(np.sum(curl_norm2)) / total)


def check_invariant_integrals(f: HomogeneousConeField, V: HomogeneousConeField,
                              engine: SphereEngine):
    """Residual report for the two invariant-integral identities.

    f must be a smooth degree -2 scalar, V a degree -1 vector orthogonal to
    l; both integrals over null directions must vanish.
    """
    if f.degree != -2:
        raise HomogeneityError("first field must have degree -2")
    if V.degree != -1:
        raise HomogeneityError("second field must have degree -1")
    labf = tangential_derivative(f, "L_ab", engine)
    res_l = {
        pair: complex(integrate_cone(fld, engine.grid))
        for pair, fld in labf.items()
    }
    divV = tangential_derivative(V, "divergence", engine)
    res_div = complex(integrate_cone(divV, engine.grid))
    return {
        "L_ab": {pair: abs(v) for pair, v in res_l.items()},
        "max_L_ab": max(abs(v) for v in res_l.values()),
        "divergence": abs(res_div),
    }


def boost_matrix(velocity):
    """Pure boost along the given 3-velocity (|v| < 1)."""
    v = np.asarray(velocity, dtype=float)
    beta2 = v @ v
    if beta2 >= 1.0:
        raise ValueError("speed must be < 1")
    if beta2 == 0.0:
        return np.eye(4)
    gamma = 1.0 / np.sqrt(1.0 - beta2)
    L = np.eye(4)
    L[0, 0] = gamma
    L[0, 1:] = L[1:, 0] = gamma * v
    L[1:, 1:] += (gamma - 1.0) * np.outer(v, v) / beta2
    return L


def hyperboloid_derivative(*_args, **_kwargs):
    """Intrinsic derivatives on the mass hyperboloid.

    Kept as a named symbol only: no numerical operation in this laboratory
    needs it (it appears solely inside symbolic kernel bounds).
    """
    raise NotImplementedError("hyperboloid derivatives are not built")


# ---------------------------------------------------------------------------
# CSV dumps


def dump_grid_csv(grid: ConeGrid, path):
    header = "theta,phi_az,weight"
    data = np.column_stack([grid.theta, grid.phi, grid.weights])
    np.savetxt(path, data, delimiter=",", header=header, comments="")


def dump_field_csv(f: HomogeneousConeField, grid: ConeGrid, path):
    vals = f.values.reshape(len(grid), -1)
    cols = [grid.theta, grid.phi, grid.weights]
    names = ["theta", "phi_az", "weight"]
    for j in range(vals.shape[1]):
        cols.extend([vals[:, j].real, vals[:, j].imag])
        names.extend([f"re_{j}", f"im_{j}"])
    np.savetxt(path, np.column_stack(cols), delimiter=",",
               header=",".join(names), comments="")
