"""Numerical quadrature on triangulated meshes.

Two symmetric rules on the reference triangle are used throughout:
the 3-point edge-midpoint rule (degree 2) for assembling mass terms
with nodal coefficients, and a 6-point degree-4 rule for integrating
smooth functions (eigenbasis projections, tube measures).
Weights are normalized to sum to 1 and scale with the element area.
"""

import numpy as np

# barycentric coordinates (rows) and weights, reference triangle
MIDPOINT_RULE = (
    np.array([[0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5]]),
    np.array([1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0]),
)

_A1, _B1 = 0.816847572980459, 0.091576213509771
_A2, _B2 = 0.108103018168070, 0.445948490915965
SIXPOINT_RULE = (
    np.array(
        [
            [_A1, _B1, _B1],
            [_B1, _A1, _B1],
            [_B1, _B1, _A1],
            [_A2, _B2, _B2],
            [_B2, _A2, _B2],
            [_B2, _B2, _A2],
        ]
    ),
    np.array([0.109951743655322] * 3 + [0.223381589678011] * 3),
)


def rule(order):
    """Return (barycentric points, weights) exact at least to `order`."""
    if order <= 2:
        return MIDPOINT_RULE
    if order <= 4:
        return SIXPOINT_RULE
    raise ValueError(f"no triangle rule of order {order} available")


def physical_points(mesh, order=4):
    """Quadrature nodes and area-scaled weights for every element.

    Returns (points, weights) where points has shape (N_e * n_q, 2) and
    weights (N_e * n_q,); the nodes of element k occupy the slice
    [k * n_q, (k + 1) * n_q).  Integral of f over the mesh is then
    weights @ f(points).
    """
    bary, w = rule(order)
    corners = mesh.vertices[mesh.triangles]  # (N_e, 3, 2)
    pts = np.einsum("qj,ejd->eqd", bary, corners)
    areas = mesh.areas()
    weights = (areas[:, None] * w[None, :]).ravel()
    return pts.reshape(-1, 2), weights


def barycentric_matrix(mesh, order=4):
    """Map nodal values to quadrature-node values.

    Returns a dense (n_q, 3) barycentric table; callers combine it with
    mesh.triangles to interpolate P1 fields at the nodes of
    physical_points(mesh, order).
    """
    bary, _ = rule(order)
    return bary


def interpolate_nodal(mesh, nodal_values, order=4):
    """Evaluate a P1 nodal field at the quadrature nodes of the mesh."""
    bary, _ = rule(order)
    vals = nodal_values[mesh.triangles]  # (N_e, 3)
    return (vals[:, None, :] * bary[None, :, :]).sum(axis=2).ravel()


def expand_element(mesh, element_values, order=4):
    """Evaluate a piecewise-constant element field at the quadrature nodes."""
    n_q = rule(order)[0].shape[0]
    return np.repeat(element_values, n_q)


def gauss_legendre(n, a=0.0, b=1.0):
    """Gauss-Legendre nodes/weights on [a, b]."""
    x, w = np.polynomial.legendre.leggauss(n)
    half = 0.5 * (b - a)
    return a + half * (x + 1.0), half * w
