"""Ground-truth absorption phantom, diffusion field, and illumination.

The phantom is a 0.1 background with two anomalies: a bean-shaped
region around (-0.4, 0.4) adding 0.4 and a four-lobed star around
(0.4, -0.4) adding 0.2.  The diffusion coefficient follows the usual
reduced-scattering construction mu = 1 / (2 (gamma0 + 0.2 mu_s)) with
mu_s a blurred copy of 100 gamma0; the blur runs on a 256^2 raster of
[-1, 1]^2 with a Gaussian kernel of physical standard deviation 0.1.

Illumination is a superposition of three Gaussian bumps centered on the
boundary circle at 45, 135 and 225 degrees with strengths 10, 2, 5; it
is smooth and strictly positive on the whole boundary.
"""

from dataclasses import dataclass, field

import numpy as np
from matplotlib.path import Path
from scipy.interpolate import RegularGridInterpolator
from scipy.ndimage import gaussian_filter

from .fem import BoundaryData, ElementField, NodalField

BACKGROUND = 0.1
BEAN_VALUE = 0.4
STAR_VALUE = 0.2
BEAN_CENTER = (-0.4, 0.4)
STAR_CENTER = (0.4, -0.4)

SMOOTHING_WIDTH = 0.1
RASTER_SIZE = 256


def bean_boundary(t):
    """Closed curve 0.18 (cos t + 0.65 cos 2t, 1.5 sin t) around its center."""
    x = BEAN_CENTER[0] + 0.18 * (np.cos(t) + 0.65 * np.cos(2.0 * t))
    y = BEAN_CENTER[1] + 0.18 * 1.5 * np.sin(t)
    return np.column_stack([x, y])


def star_radius(t):
    """Polar radius 0.12 sqrt(0.8 + 0.8 (cos 4t - 1)^2) of the lobed region."""
    return 0.12 * np.sqrt(0.8 + 0.8 * (np.cos(4.0 * t) - 1.0) ** 2)


@dataclass(frozen=True)
class Phantom:
    """Membership machinery for the two-anomaly ground truth."""

    n_polygon: int = 4096
    _bean_path: Path = field(init=False, repr=False)

    def __post_init__(self):
        t = np.linspace(0.0, 2.0 * np.pi, self.n_polygon, endpoint=False)
        object.__setattr__(self, "_bean_path", Path(bean_boundary(t)))

    def absorption(self, points):
        """Sharp phantom values at arbitrary points."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        vals = np.full(pts.shape[0], BACKGROUND)
        vals += BEAN_VALUE * self._bean_path.contains_points(pts)
        d = pts - np.asarray(STAR_CENTER)
        r = np.hypot(d[:, 0], d[:, 1])
        ang = np.arctan2(d[:, 1], d[:, 0])
        vals += STAR_VALUE * (r <= star_radius(ang))
        return vals

    def absorption_field(self, mesh, carrier="element"):
        if carrier == "element":
            return ElementField(mesh, self.absorption(mesh.centroids()))
        return NodalField(mesh, self.absorption(mesh.vertices))

    def _scattering_interpolator(self):
        if not hasattr(self, "_mu_s_cache"):
            axis = np.linspace(-1.0, 1.0, RASTER_SIZE)
            X, Y = np.meshgrid(axis, axis, indexing="ij")
            grid = self.absorption(np.column_stack([X.ravel(), Y.ravel()]))
            sigma_px = SMOOTHING_WIDTH * (RASTER_SIZE - 1) / 2.0
            mu_s = gaussian_filter(100.0 * grid.reshape(RASTER_SIZE, RASTER_SIZE),
                                   sigma=sigma_px, mode="nearest")
            interp = RegularGridInterpolator((axis, axis), mu_s, method="linear")
            object.__setattr__(self, "_mu_s_cache", interp)
        return self._mu_s_cache

    def diffusion(self, points):
        """mu = 1 / (2 (gamma0 + 0.2 mu_s)) at arbitrary points."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        mu_s = self._scattering_interpolator()(pts)
        return 0.5 / (self.absorption(pts) + mu_s * (1.0 - 0.8))

    def diffusion_field(self, mesh, carrier="element"):
        if carrier == "element":
            return ElementField(mesh, self.diffusion(mesh.centroids()))
        return NodalField(mesh, self.diffusion(mesh.vertices))


BUMP_CENTERS = (
    (0.5 * np.sqrt(2.0), 0.5 * np.sqrt(2.0)),
    (-0.5 * np.sqrt(2.0), 0.5 * np.sqrt(2.0)),
    (-0.5 * np.sqrt(2.0), -0.5 * np.sqrt(2.0)),
)
BUMP_STRENGTHS = (10.0, 2.0, 5.0)


def illumination_values(points):
    """Sum of the three boundary bumps s exp(-2 |x - m|^2)."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    vals = np.zeros(pts.shape[0])
    for (mx, my), s in zip(BUMP_CENTERS, BUMP_STRENGTHS):
        vals += s * np.exp(-2.0 * ((pts[:, 0] - mx) ** 2 + (pts[:, 1] - my) ** 2))
    return vals


def illumination(n_probe=4096):
    """BoundaryData with bounds probed on a dense boundary grid."""
    t = np.linspace(0.0, 2.0 * np.pi, n_probe, endpoint=False)
    probe = illumination_values(np.column_stack([np.cos(t), np.sin(t)]))
    return BoundaryData(
        evaluate=illumination_values,
        g_min=float(probe.min()) * (1.0 - 1e-9),
        g_max=float(probe.max()) * (1.0 + 1e-9),
    )
