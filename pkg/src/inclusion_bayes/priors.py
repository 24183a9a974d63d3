"""Truncated Karhunen-Loeve Gaussian fields on the circle and a square torus.

Coefficients are i.i.d. standard normal; the spectral weights
w_l = q (tau^2 + |l|^2)^(-delta/2) enter at evaluation time, so a field
is represented by its whitened coefficient vector.  That is the natural
coordinate system for the Crank-Nicolson sampler, whose proposals must
preserve the N(0, I) law of the coefficients.

Basis conventions (fixed so chains and files are reproducible):

* circle (period 2*pi): index order [const, cos 1t, sin 1t, cos 2t, ...]
  with L2-orthonormal functions 1/sqrt(2 pi), cos(l t)/sqrt(pi),
  sin(l t)/sqrt(pi);
* square torus [-m, m]^2: tensor trigonometric functions
  cos/sin(pi (l1 x + l2 y) / m) scaled by sqrt(2)/(2 m), constant
  1/(2 m), one cos and one sin per half-lattice representative
  (l1 > 0, or l1 = 0 and l2 > 0), ordered by
  (max(|l1|, |l2|), l1, l2, cos-before-sin).
"""

from dataclasses import dataclass

import numpy as np

from .fem import NodalField

CONST, COS, SIN = "const", "cos", "sin"
_PARITY_RANK = {CONST: 0, COS: 1, SIN: 2}


def _cos_sin_table(u, max_k):
    """cos(k u), sin(k u) for k = 0..max_k via the angle recurrence."""
    n = u.shape[0]
    c = np.empty((max_k + 1, n))
    s = np.empty((max_k + 1, n))
    c[0], s[0] = 1.0, 0.0
    if max_k >= 1:
        c[1], s[1] = np.cos(u), np.sin(u)
        for k in range(2, max_k + 1):
            c[k] = 2.0 * c[1] * c[k - 1] - c[k - 2]
            s[k] = 2.0 * c[1] * s[k - 1] - s[k - 2]
    return c, s


@dataclass(frozen=True)
class KLSpec1D:
    """Weight law and truncation of a field on the circle.

    Retains frequencies |l| <= max_freq; mean_offset is the constant
    added to every realization (not a random coefficient).
    """

    max_freq: int
    amplitude: float
    inv_length: float
    decay: float
    mean_offset: float = 0.0

    def __post_init__(self):
        if self.amplitude <= 0.0:
            raise ValueError("amplitude q must be positive")
        if self.decay <= 0.5:
            raise ValueError("decay exponent must exceed 1/2 on the circle")
        if self.max_freq < 0:
            raise ValueError("max_freq must be >= 0")

    @property
    def n_coefficients(self):
        return 2 * self.max_freq + 1

    def entries(self):
        """(l, parity) per coefficient, in canonical order."""
        out = [(0, CONST)]
        for l in range(1, self.max_freq + 1):
            out.append((l, COS))
            out.append((l, SIN))
        return out

    def weights(self):
        ls = np.array([l for l, _ in self.entries()], dtype=float)
        return self.amplitude * (self.inv_length ** 2 + ls ** 2) ** (-self.decay / 2.0)

    def design_matrix(self, angles):
        """(n_points, n_coefficients) orthonormal basis values.

        Angles are taken modulo 2*pi (the field lives on the circle).
        """
        t = np.asarray(angles, dtype=float) % (2.0 * np.pi)
        c, s = _cos_sin_table(t, self.max_freq)
        cols = [np.full(t.shape, 1.0 / np.sqrt(2.0 * np.pi))]
        for l in range(1, self.max_freq + 1):
            cols.append(c[l] / np.sqrt(np.pi))
            cols.append(s[l] / np.sqrt(np.pi))
        return np.column_stack(cols)


@dataclass(frozen=True)
class KLSpec2D:
    """Weight law and truncation of a field on the torus [-m, m]^2."""

    max_freq: int
    amplitude: float
    inv_length: float
    decay: float
    half_width: float = 1.1

    def __post_init__(self):
        if self.amplitude <= 0.0:
            raise ValueError("amplitude q must be positive")
        if self.decay <= 1.0:
            raise ValueError("decay exponent must exceed 1 on the plane")
        if self.max_freq < 0 or self.half_width <= 0.0:
            raise ValueError("bad truncation or torus size")

    def entries(self):
        """(l1, l2, parity) per coefficient, in canonical order."""
        reps = []
        n = self.max_freq
        for l1 in range(-n, n + 1):
            for l2 in range(-n, n + 1):
                if l1 > 0 or (l1 == 0 and l2 > 0):
                    reps.append((l1, l2))
        out = [(0, 0, CONST)]
        for l1, l2 in reps:
            out.append((l1, l2, COS))
            out.append((l1, l2, SIN))
        out.sort(key=lambda e: (max(abs(e[0]), abs(e[1])), e[0], e[1], _PARITY_RANK[e[2]]))
        return out

    @property
    def n_coefficients(self):
        return (2 * self.max_freq + 1) ** 2

    def weights(self):
        sq = np.array([l1 * l1 + l2 * l2 for l1, l2, _ in self.entries()], dtype=float)
        return self.amplitude * (self.inv_length ** 2 + sq) ** (-self.decay / 2.0)

    def index_of(self, l1, l2, parity):
        return self.entries().index((l1, l2, parity))

    def _check_points(self, pts):
        m = self.half_width
        if np.any(np.abs(pts) > m * (1 + 1e-12)):
            raise ValueError(f"point outside the torus square [-{m}, {m}]^2")

    def design_matrix(self, points):
        """(n_points, n_coefficients) orthonormal basis values."""
        pts = np.asarray(points, dtype=float)
        self._check_points(pts)
        m = self.half_width
        cu, su = _cos_sin_table(np.pi * pts[:, 0] / m, self.max_freq)
        cv, sv = _cos_sin_table(np.pi * pts[:, 1] / m, self.max_freq)
        scale = np.sqrt(2.0) / (2.0 * m)
        cols = []
        for l1, l2, parity in self.entries():
            if parity == CONST:
                cols.append(np.full(pts.shape[0], 1.0 / (2.0 * m)))
                continue
            a1, a2 = abs(l1), abs(l2)
            s1, s2 = np.sign(l1), np.sign(l2)
            # cos/sin of (l1 u + l2 v) from the tabulated single-axis values
            cos_l1u = cu[a1]
            sin_l1u = s1 * su[a1]
            cos_l2v = cv[a2]
            sin_l2v = s2 * sv[a2]
            if parity == COS:
                cols.append(scale * (cos_l1u * cos_l2v - sin_l1u * sin_l2v))
            else:
                cols.append(scale * (sin_l1u * cos_l2v + cos_l1u * sin_l2v))
        return np.column_stack(cols)

    def gradient_matrices(self, points):
        """Design matrices of (d/dx theta, d/dy theta) at the points."""
        pts = np.asarray(points, dtype=float)
        self._check_points(pts)
        m = self.half_width
        cu, su = _cos_sin_table(np.pi * pts[:, 0] / m, self.max_freq)
        cv, sv = _cos_sin_table(np.pi * pts[:, 1] / m, self.max_freq)
        scale = np.sqrt(2.0) / (2.0 * m)
        gx, gy = [], []
        zero = np.zeros(pts.shape[0])
        for l1, l2, parity in self.entries():
            if parity == CONST:
                gx.append(zero)
                gy.append(zero)
                continue
            a1, a2 = abs(l1), abs(l2)
            s1, s2 = np.sign(l1), np.sign(l2)
            cos_arg = cu[a1] * cv[a2] - s1 * s2 * su[a1] * sv[a2]
            sin_arg = s1 * su[a1] * cv[a2] + s2 * cu[a1] * sv[a2]
            k1, k2 = np.pi * l1 / m, np.pi * l2 / m
            if parity == COS:
                gx.append(-scale * k1 * sin_arg)
                gy.append(-scale * k2 * sin_arg)
            else:
                gx.append(scale * k1 * cos_arg)
                gy.append(scale * k2 * cos_arg)
        return np.column_stack(gx), np.column_stack(gy)

    @property
    def mean_offset(self):
        return 0.0


@dataclass(frozen=True)
class KLField:
    """A realization: spec plus whitened coefficient vector."""

    spec: object
    xi: np.ndarray

    def __post_init__(self):
        xi = np.ascontiguousarray(self.xi, dtype=float)
        if xi.shape != (self.spec.n_coefficients,):
            raise ValueError(
                f"need {self.spec.n_coefficients} coefficients, got {xi.shape}"
            )
        xi.setflags(write=False)
        object.__setattr__(self, "xi", xi)

    def scaled_coefficients(self):
        return self.spec.weights() * self.xi

    def evaluate(self, points):
        B = self.spec.design_matrix(points)
        return self.spec.mean_offset + B @ self.scaled_coefficients()

    def gradient(self, points):
        """(n, 2) gradient values; 2D fields only."""
        gx, gy = self.spec.gradient_matrices(points)
        coeff = self.scaled_coefficients()
        return np.column_stack([gx @ coeff, gy @ coeff])


def make_rng(seed_or_rng):
    """PCG64 generator from a seed, passing generators through."""
    if isinstance(seed_or_rng, np.random.Generator):
        return seed_or_rng
    return np.random.Generator(np.random.PCG64(seed_or_rng))


def sample(spec, seed_or_rng):
    """Draw a field: i.i.d. standard-normal coefficients."""
    rng = make_rng(seed_or_rng)
    return KLField(spec, rng.standard_normal(spec.n_coefficients))


def restrict_to_disk(field, mesh):
    """Nodal values of a torus field at the mesh vertices."""
    if field.spec.half_width <= 1.0:
        raise ValueError("torus half-width must exceed 1 so the disk embeds")
    return NodalField(mesh, field.evaluate(mesh.vertices))
