"""Shape maps taking Gaussian fields to piecewise-constant absorption.

Two parametrizations: star-shaped regions whose boundary radius is
exp(theta(angle)) around a fixed center (values of overlapping regions
add on top of the background), and level-set thresholding of a planar
field through a ramp of half-width eps replacing the Heaviside jump
(eps = 0 reproduces the sharp map).

Geometric utilities used by the continuity checks live here too: the
area of the symmetric difference of two star regions via the radial
homotopy K(s, t) = [s r1(t) + (1-s) r2(t)] (cos t, sin t), and the area
of the tube {|theta - c| < eps} where the smoothed and sharp maps can
disagree.
"""

from dataclasses import dataclass, field

import numpy as np

from .fem import ElementField, NodalField
from .priors import KLField
from .quadrature import gauss_legendre, physical_points

#: tube gradients below this flag a level set as numerically critical
CRITICAL_GRADIENT_FLOOR = 1e-3


def heaviside(z):
    """Sharp unit step, 1 for z >= 0."""
    return (np.asarray(z, dtype=float) >= 0.0).astype(float)


def h_eps(z, eps):
    """Piecewise-linear ramp: 0 below -eps, 1 above eps, slope 1/(2 eps)."""
    if eps <= 0.0:
        raise ValueError("ramp half-width eps must be positive")
    z = np.asarray(z, dtype=float)
    return np.clip(z / (2.0 * eps) + 0.5, 0.0, 1.0)


def step(z, eps):
    return h_eps(z, eps) if eps > 0.0 else heaviside(z)


def piecewise_map(values, levels, kappas, eps):
    """Sum of kappa_i over the smoothed level cells of a value array.

    Computes sum_i kappa_i [H(v - c_{i-1}) - H(v - c_i)] with the
    conventions H(v - c_0) = 1 and H(v - c_N) = 0, i.e. a partition of
    unity in the value variable.
    """
    levels = np.asarray(levels, dtype=float)
    kappas = np.asarray(kappas, dtype=float)
    if kappas.size != levels.size + 1:
        raise ValueError("need one more material value than thresholds")
    if levels.size and np.any(np.diff(levels) <= 0.0):
        raise ValueError("level thresholds must be strictly increasing")
    v = np.asarray(values, dtype=float)
    out = np.zeros_like(v)
    lower = np.ones_like(v)
    for i, kappa in enumerate(kappas):
        upper = step(v - levels[i], eps) if i < levels.size else np.zeros_like(v)
        out += kappa * (lower - upper)
        lower = upper
    return out


def evaluate_at(theta, points):
    """Value array of a field-like object: KLField or plain callable."""
    if isinstance(theta, KLField):
        return theta.evaluate(points)
    return np.asarray(theta(points), dtype=float)


# ---------------------------------------------------------------- star maps


@dataclass(frozen=True)
class StarConfig:
    """Fixed centers, material values, and per-region boundary fields.

    kappas[0] is the background; kappas[i] is added wherever region i
    covers, so overlapping regions stack additively.
    """

    centers: np.ndarray
    kappas: np.ndarray
    fields: tuple

    def __post_init__(self):
        centers = np.atleast_2d(np.asarray(self.centers, dtype=float))
        kappas = np.asarray(self.kappas, dtype=float)
        object.__setattr__(self, "centers", centers)
        object.__setattr__(self, "kappas", kappas)
        object.__setattr__(self, "fields", tuple(self.fields))
        n = centers.shape[0]
        if len(self.fields) != n or kappas.size != n + 1:
            raise ValueError("need one field per center and one extra material value")
        if np.any(kappas <= 0.0):
            raise ValueError("material values must be positive")
        if np.any(np.hypot(centers[:, 0], centers[:, 1]) >= 1.0):
            raise ValueError("centers must lie in the open unit disk")

    @property
    def n_inclusions(self):
        return self.centers.shape[0]


def star_boundary_radius(theta, angles):
    """Boundary radius exp(theta(angle)) of the deformed circle."""
    return np.exp(evaluate_at(theta, np.asarray(angles, dtype=float)))


def point_in_star(points, center, theta):
    """Membership test; the boundary counts as inside."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    d = pts - np.asarray(center, dtype=float)
    dist = np.hypot(d[:, 0], d[:, 1])
    ang = np.arctan2(d[:, 1], d[:, 0]) % (2.0 * np.pi)
    return dist <= star_boundary_radius(theta, ang)


def rasterize_star(config, mesh):
    """Element field kappa_0 + sum_i kappa_i 1[centroid in region i]."""
    values = np.full(mesh.element_count, config.kappas[0])
    cent = mesh.centroids()
    for i in range(config.n_inclusions):
        inside = point_in_star(cent, config.centers[i], config.fields[i])
        values += config.kappas[i + 1] * inside
    return ElementField(mesh, values)


def sym_diff_area(theta1, theta2, n_angle=2048, n_s=4):
    """Area of the symmetric difference of two star regions (same center).

    Quadrature of |det JK| over [0,1] x [0,2pi] for the radial homotopy
    K; the determinant is |r1 - r2| (s r1 + (1-s) r2), positive since
    radii are positive, so the image covers the symmetric difference
    exactly once.
    """
    t = 2.0 * np.pi * np.arange(n_angle) / n_angle
    r1 = star_boundary_radius(theta1, t)
    r2 = star_boundary_radius(theta2, t)
    s, ws = gauss_legendre(n_s, 0.0, 1.0)
    radial = np.abs(r1 - r2)[None, :] * (s[:, None] * r1[None, :] + (1.0 - s[:, None]) * r2[None, :])
    return float((ws @ radial).sum() * (2.0 * np.pi / n_angle))


# ----------------------------------------------------------- level-set maps


@dataclass(frozen=True)
class LevelSetConfig:
    """Thresholds, material values, ramp width, and the planar field."""

    levels: np.ndarray
    kappas: np.ndarray
    eps: float
    field: object = None

    def __post_init__(self):
        levels = np.asarray(self.levels, dtype=float)
        kappas = np.asarray(self.kappas, dtype=float)
        object.__setattr__(self, "levels", levels)
        object.__setattr__(self, "kappas", kappas)
        if kappas.size != levels.size + 1:
            raise ValueError("need one more material value than thresholds")
        if levels.size and np.any(np.diff(levels) <= 0.0):
            raise ValueError("level thresholds must be strictly increasing")
        if np.any(kappas <= 0.0):
            raise ValueError("material values must be positive")
        if self.eps < 0.0:
            raise ValueError("ramp half-width must be >= 0 (0 selects the sharp map)")


def apply_levelset(config, mesh, theta=None):
    """Nodal field of the (smoothed) level-set map at the mesh vertices."""
    theta = config.field if theta is None else theta
    vals = evaluate_at(theta, mesh.vertices)
    return NodalField(mesh, piecewise_map(vals, config.levels, config.kappas, config.eps))


def tube_measure(theta, c, eps, mesh, order=4):
    """Area of {x in D : |theta(x) - c| < eps} by quadrature counting."""
    if eps <= 0.0:
        raise ValueError("tube half-width must be positive")
    pts, w = physical_points(mesh, order)
    vals = evaluate_at(theta, pts)
    return float(w @ (np.abs(vals - c) < eps))


@dataclass(frozen=True)
class RampErrorProbe:
    """L2 distances between ramped and sharp maps, per ramp width."""

    eps_list: np.ndarray
    errors: np.ndarray
    min_tube_gradient: float
    critical_ok: bool
    slope: float = field(default=np.nan)


def phi_eps_approx_error(theta, config, eps_list, mesh, order=4):
    """Distance |Phi_eps(theta) - Phi(theta)|_L2 for each ramp width.

    Also reports the smallest |grad theta| over the widest tube around
    any threshold; if it falls below CRITICAL_GRADIENT_FLOOR the level
    set is numerically critical and the O(sqrt(eps)) decay is not
    guaranteed (flagged, not fatal).
    """
    eps_list = np.asarray(eps_list, dtype=float)
    if np.any(eps_list <= 0.0):
        raise ValueError("ramp widths must be positive")
    pts, w = physical_points(mesh, order)
    vals = evaluate_at(theta, pts)
    sharp = piecewise_map(vals, config.levels, config.kappas, 0.0)
    errors = np.empty(eps_list.size)
    for i, eps in enumerate(eps_list):
        smooth = piecewise_map(vals, config.levels, config.kappas, eps)
        errors[i] = np.sqrt(w @ (smooth - sharp) ** 2)
    wide = eps_list.max()
    in_tube = np.zeros(pts.shape[0], dtype=bool)
    for c in np.asarray(config.levels, dtype=float):
        in_tube |= np.abs(vals - c) < wide
    if in_tube.any() and isinstance(theta, KLField):
        grad = theta.gradient(pts[in_tube])
        min_grad = float(np.hypot(grad[:, 0], grad[:, 1]).min())
    else:
        min_grad = np.inf
    positive = errors > 0.0
    if positive.sum() >= 2:
        slope = float(np.polyfit(np.log(eps_list[positive]), np.log(errors[positive]), 1)[0])
    else:
        slope = np.nan
    return RampErrorProbe(
        eps_list=eps_list,
        errors=errors,
        min_tube_gradient=min_grad,
        critical_ok=min_grad > CRITICAL_GRADIENT_FLOOR,
        slope=slope,
    )


def nonuniform_pair(n):
    """Radial fields 1/n + r^(2n) and its negative.

    On the disk of radius 1/2 both stay sign-definite while their sup
    distance shrinks like 1/n, so the sharp two-level map keeps the two
    images a fixed L2 distance apart no matter how close the fields get.
    """
    def plus(points):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        r = np.hypot(pts[:, 0], pts[:, 1])
        return 1.0 / n + r ** (2 * n)

    def minus(points):
        return -plus(points)

    return plus, minus
