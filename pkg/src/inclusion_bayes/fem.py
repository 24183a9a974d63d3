"""P1 Galerkin solver for -div(mu grad u) + gamma u = 0 with Dirichlet data.

Coefficient fields live either on elements (piecewise constant) or on
vertices (piecewise linear).  Element-wise coefficients are integrated
exactly; nodal coefficients use the 3-point edge-midpoint rule.  The
eliminated interior system is symmetric positive definite and is solved
with Jacobi-preconditioned conjugate gradients.

The absorbed energy density H = gamma * u comes in two discretizations:
element-wise H (gamma element-wise, u averaged per element) and nodal H
(gamma nodal, pointwise product at vertices).
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import cg

#: relative residual tolerance of the interior solve
CG_RTOL = 1e-10


class SolverError(RuntimeError):
    """Conjugate-gradient iteration failed to converge."""


@dataclass(frozen=True)
class NodalField:
    """One value per mesh vertex (P1 coefficient vector)."""

    mesh: object
    values: np.ndarray

    def __post_init__(self):
        vals = np.ascontiguousarray(self.values, dtype=float)
        if vals.shape != (self.mesh.vertex_count,):
            raise ValueError(
                f"nodal field needs {self.mesh.vertex_count} values, got {vals.shape}"
            )
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @property
    def carrier(self):
        return "node"


@dataclass(frozen=True)
class ElementField:
    """One value per mesh triangle (piecewise-constant field)."""

    mesh: object
    values: np.ndarray

    def __post_init__(self):
        vals = np.ascontiguousarray(self.values, dtype=float)
        if vals.shape != (self.mesh.element_count,):
            raise ValueError(
                f"element field needs {self.mesh.element_count} values, got {vals.shape}"
            )
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @property
    def carrier(self):
        return "element"


def constant_field(mesh, value, carrier="element"):
    if carrier == "element":
        return ElementField(mesh, np.full(mesh.element_count, float(value)))
    if carrier == "node":
        return NodalField(mesh, np.full(mesh.vertex_count, float(value)))
    raise ValueError(f"unknown carrier {carrier!r}")


@dataclass(frozen=True)
class BoundaryData:
    """Dirichlet illumination: evaluator plus positive lower/upper bounds."""

    evaluate: callable
    g_min: float
    g_max: float

    def __post_init__(self):
        if not (0.0 < self.g_min <= self.g_max):
            raise ValueError(
                f"illumination bounds must satisfy 0 < g_min <= g_max, "
                f"got ({self.g_min}, {self.g_max})"
            )

    def boundary_values(self, mesh):
        vals = np.asarray(self.evaluate(mesh.vertices[mesh.boundary]), dtype=float)
        if vals.min() <= 0.0:
            raise ValueError("illumination is nonpositive at a boundary vertex")
        if vals.min() < self.g_min * (1 - 1e-12) or vals.max() > self.g_max * (1 + 1e-12):
            raise ValueError("boundary values leave the declared [g_min, g_max] range")
        return vals


def constant_boundary(value):
    v = float(value)
    return BoundaryData(lambda pts: np.full(len(pts), v), v, v)


def _element_geometry(mesh):
    """Edge cotangent data: b_i = y_j - y_k, c_i = x_k - x_j (cyclic)."""
    p = mesh.vertices[mesh.triangles]  # (N_e, 3, 2)
    x, y = p[..., 0], p[..., 1]
    b = np.stack([y[:, 1] - y[:, 2], y[:, 2] - y[:, 0], y[:, 0] - y[:, 1]], axis=1)
    c = np.stack([x[:, 2] - x[:, 1], x[:, 0] - x[:, 2], x[:, 1] - x[:, 0]], axis=1)
    return b, c


def _local_stiffness(mesh, mu_int):
    """(N_e,3,3) local stiffness blocks given per-element integrals of mu."""
    b, c = _element_geometry(mesh)
    areas = mesh.areas()
    scale = mu_int / (4.0 * areas * areas)
    return scale[:, None, None] * (
        b[:, :, None] * b[:, None, :] + c[:, :, None] * c[:, None, :]
    )


_MASS_CONST = (np.eye(3) + np.ones((3, 3))) / 12.0
# lambda outer-products at the three edge midpoints, each weighted 1/3
_MIDPOINTS = np.array([[0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5]])
_MASS_MID = np.einsum("qa,qb->qab", _MIDPOINTS, _MIDPOINTS) / 3.0


def _local_mass(mesh, gamma):
    areas = mesh.areas()
    if isinstance(gamma, ElementField):
        return (gamma.values * areas)[:, None, None] * _MASS_CONST[None, :, :]
    gq = _MIDPOINTS @ gamma.values[mesh.triangles].T  # (3 quad pts, N_e)
    local = np.einsum("qe,qab->eab", gq, _MASS_MID)
    return areas[:, None, None] * local


def _integral_of(mesh, coeff):
    """Per-element integral of a coefficient field."""
    areas = mesh.areas()
    if isinstance(coeff, ElementField):
        return coeff.values * areas
    return areas * coeff.values[mesh.triangles].mean(axis=1)


def _check_coefficient(name, field, mesh):
    if field.mesh is not mesh:
        raise ValueError(f"{name} lives on a different mesh")
    if field.values.min() < 0.0:
        raise ValueError(f"{name} has a negative entry ({field.values.min()})")


def assemble(mesh, mu, gamma):
    """Stiffness-plus-mass matrix of the bilinear form.

    A[i, j] = int mu grad psi_i . grad psi_j + int gamma psi_i psi_j.
    Exact for element-wise coefficients; nodal coefficients integrate
    with the degree-2 midpoint rule.
    """
    _check_coefficient("mu", mu, mesh)
    _check_coefficient("gamma", gamma, mesh)
    if mu.values.max() == 0.0 and gamma.values.max() == 0.0:
        raise ValueError("mu and gamma cannot both vanish identically")
    local = _local_stiffness(mesh, _integral_of(mesh, mu)) + _local_mass(mesh, gamma)
    tri = mesh.triangles
    rows = np.repeat(tri, 3, axis=1).ravel()
    cols = np.tile(tri, (1, 3)).ravel()
    n = mesh.vertex_count
    A = sp.coo_matrix((local.ravel(), (rows, cols)), shape=(n, n)).tocsr()
    A.sum_duplicates()
    return A


def solve_dirichlet(A, mesh, g, x0=None, rtol=CG_RTOL):
    """Solve A u = 0 with u = g on the boundary vertices.

    Boundary rows/columns are eliminated (values moved to the right-hand
    side), keeping the interior block symmetric positive definite.  An
    optional x0 warm-starts the conjugate-gradient iteration.
    """
    interior = mesh.interior()
    bvals = g.boundary_values(mesh)
    A_ii = A[interior][:, interior].tocsr()
    A_ib = A[interior][:, mesh.boundary].tocsr()
    rhs = -A_ib @ bvals
    u_int, residual = cg_solve(A_ii, rhs, x0=None if x0 is None else x0[interior],
                               rtol=rtol, maxiter=10 * mesh.vertex_count)
    u = np.empty(mesh.vertex_count)
    u[interior] = u_int
    u[mesh.boundary] = bvals
    return NodalField(mesh, u)


def cg_solve(A_ii, rhs, x0=None, rtol=CG_RTOL, maxiter=None):
    """Jacobi-preconditioned CG on the eliminated SPD system."""
    diag = A_ii.diagonal()
    if np.any(diag <= 0):
        raise SolverError("eliminated system has a nonpositive diagonal entry")
    M = sp.diags(1.0 / diag)
    x, info = cg(A_ii, rhs, x0=x0, rtol=rtol, atol=0.0, maxiter=maxiter, M=M)
    if info != 0:
        raise SolverError(f"conjugate gradients did not converge (info={info})")
    norm = np.linalg.norm(rhs)
    res = np.linalg.norm(rhs - A_ii @ x) / norm if norm > 0 else 0.0
    return x, res


def element_means(mesh, nodal_values):
    """Average of a nodal field over each triangle's corners."""
    return nodal_values[mesh.triangles].mean(axis=1)


def forward_map(mesh, mu, gamma, g, x0=None):
    """Absorbed energy density H = gamma * u.

    gamma element-wise gives element-wise H (gamma_E times the vertex
    average of u over the element); gamma nodal gives nodal H.
    """
    if gamma.values.min() <= 0.0 or mu.values.min() <= 0.0:
        raise ValueError("forward map requires strictly positive mu and gamma")
    A = assemble(mesh, mu, gamma)
    u = solve_dirichlet(A, mesh, g, x0=x0)
    if isinstance(gamma, ElementField):
        return ElementField(mesh, gamma.values * element_means(mesh, u.values))
    return NodalField(mesh, gamma.values * u.values)


def l2_norm(field):
    """L2(D) norm in the field's own carrier."""
    mesh, v = field.mesh, field.values
    if isinstance(field, ElementField):
        return float(np.sqrt(np.sum(mesh.areas() * v * v)))
    ve = v[mesh.triangles]
    s = ve.sum(axis=1)
    quad = (ve * ve).sum(axis=1) + s * s
    return float(np.sqrt(np.sum(mesh.areas() / 12.0 * quad)))


def l2_distance(f1, f2):
    if type(f1) is not type(f2) or f1.mesh is not f2.mesh:
        raise ValueError("fields must share carrier and mesh")
    return l2_norm(type(f1)(f1.mesh, f1.values - f2.values))


def lipschitz_probe(mesh, mu, g, pairs):
    """Empirical continuity ratios of the forward map.

    For each pair (gamma1, gamma2) returns the ratio |H1 - H2| / |g1 - g2|
    in L2 and its reciprocal, as two arrays (forward, inverse).
    """
    fwd, inv = [], []
    for g1, g2 in pairs:
        dg = l2_distance(g1, g2)
        if dg == 0.0:
            raise ValueError("probe pairs must differ (gamma1 != gamma2)")
        h1 = forward_map(mesh, mu, g1, g)
        h2 = forward_map(mesh, mu, g2, g)
        dh = l2_distance(h1, h2)
        fwd.append(dh / dg)
        inv.append(dg / dh)
    return np.array(fwd), np.array(inv)
