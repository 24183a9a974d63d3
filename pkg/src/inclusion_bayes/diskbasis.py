"""Dirichlet-Laplacian eigenbasis of the unit disk and L2 projections.

Eigenfunctions are J_m(j_{m,k} r) {cos, sin}(m theta) with j_{m,k} the
k-th positive zero of the Bessel function J_m, normalized to unit L2(D)
norm: the radial integral is J_{m+1}(j)^2 / 2, so the constant is
1 / (sqrt(pi) |J_1(j)|) for m = 0 and sqrt(2/pi) / |J_{m+1}(j)| for
m >= 1.  Zeros are located by bracketing McMahon asymptotic guesses and
polishing with Brent's method.

Projection coefficients <f, e_k> are computed with the degree-4
triangle rule.  A Projector folds the quadrature into one matrix per
carrier so repeated projections (the sampler's hot loop) cost a single
mat-vec.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.optimize import brentq
from scipy.special import jv

from .quadrature import physical_points, rule

MAX_ORDER = 60
COS, SIN = 0, 1


def bessel_j(m, x):
    """Bessel function of the first kind, integer order 0..MAX_ORDER."""
    if not 0 <= int(m) <= MAX_ORDER or int(m) != m:
        raise ValueError(f"order must be an integer in [0, {MAX_ORDER}], got {m}")
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise ValueError("argument must be nonnegative")
    return jv(int(m), x)


def _mcmahon_guess(m, k):
    beta = (k + 0.5 * m - 0.25) * np.pi
    mu = 4.0 * m * m
    return beta - (mu - 1.0) / (8.0 * beta)


def bessel_zeros(m, count):
    """First `count` positive zeros of J_m, accurate to ~1e-13."""
    zeros = []
    # first zeros of high orders sit near m + 1.8557 m^{1/3}, where the
    # McMahon series is unreliable; never search below that point
    floor = m + 1.85575 * m ** (1.0 / 3.0) - 1.0 if m > 0 else 1.0
    last = max(floor, 1e-8)
    f = lambda x: jv(m, x)
    for k in range(1, count + 1):
        lo = max(_mcmahon_guess(m, k) - 1.2, last + 1e-6)
        hi = lo + 0.5
        flo = f(lo)
        while flo * f(hi) > 0.0:
            lo, flo = hi, f(hi)
            hi += 0.5
            if hi > last + 300.0:
                raise RuntimeError(f"failed to bracket zero {k} of J_{m}")
        z = brentq(f, lo, hi, xtol=1e-14, rtol=8.9e-16)
        zeros.append(z)
        last = z
    return np.array(zeros)


@dataclass(frozen=True)
class DiskEigenbasis:
    """First N_d eigenpairs in ascending eigenvalue order.

    Parallel arrays over entries: angular order m, Bessel zero j,
    parity (COS or SIN), eigenvalue j**2, normalization constant.
    """

    orders: np.ndarray
    zeros: np.ndarray
    parities: np.ndarray
    eigenvalues: np.ndarray
    norms: np.ndarray

    @property
    def count(self):
        return self.orders.size

    def evaluate(self, points, indices=None):
        """Basis functions at planar points: (n_entries, n_points).

        Bessel factors are shared between the cos/sin entries of a pair,
        which halves the dominant cost on large point sets.
        """
        idx = np.arange(self.count) if indices is None else np.asarray(indices)
        pts = np.asarray(points, dtype=float)
        r = np.hypot(pts[:, 0], pts[:, 1])
        th = np.arctan2(pts[:, 1], pts[:, 0])
        out = np.empty((idx.size, pts.shape[0]))
        radial_cache = {}
        for row, k in enumerate(idx):
            m = int(self.orders[k])
            key = (m, self.zeros[k])
            if key not in radial_cache:
                radial_cache[key] = jv(m, self.zeros[k] * r)
            angular = np.cos(m * th) if self.parities[k] == COS else np.sin(m * th)
            out[row] = self.norms[k] * radial_cache[key] * angular
        return out


def build_basis(n_entries):
    """Enumerate eigenpairs, sorted by (eigenvalue, m, parity)."""
    if n_entries < 1:
        raise ValueError("basis size must be >= 1")
    j_cap = 2.0 * np.sqrt(n_entries + 9.0) + 6.0  # Weyl count ~ j^2/4
    while True:
        records = []
        m = 0
        while m <= MAX_ORDER:
            if m + 1.85575 * m ** (1.0 / 3.0) > j_cap:
                break
            count = max(int((j_cap - m) / np.pi) + 2, 1)
            for j in bessel_zeros(m, count):
                if j > j_cap:
                    break
                records.append((j * j, m, j))
            m += 1
        expanded = []
        for lam, order_m, j in records:
            if order_m == 0:
                norm = 1.0 / (np.sqrt(np.pi) * abs(jv(1, j)))
                expanded.append((lam, order_m, COS, j, norm))
            else:
                norm = np.sqrt(2.0 / np.pi) / abs(jv(order_m + 1, j))
                expanded.append((lam, order_m, COS, j, norm))
                expanded.append((lam, order_m, SIN, j, norm))
        # only trust the prefix below j_cap: entries past it could be
        # outranked by zeros of orders we did not enumerate
        expanded.sort(key=lambda t: (t[0], t[1], t[2]))
        if len(expanded) >= n_entries:
            chosen = expanded[:n_entries]
            return DiskEigenbasis(
                orders=np.array([c[1] for c in chosen], dtype=np.int64),
                zeros=np.array([c[3] for c in chosen]),
                parities=np.array([c[2] for c in chosen], dtype=np.int64),
                eigenvalues=np.array([c[0] for c in chosen]),
                norms=np.array([c[4] for c in chosen]),
            )
        j_cap *= 1.3


class Projector:
    """Quadrature-folded projection of FEM fields onto the eigenbasis.

    Precomputes one (N_d, N_e) matrix for element fields and one
    (N_d, N_m) matrix for nodal fields, so each projection is a mat-vec.
    """

    def __init__(self, mesh, basis, order=4, chunk=32):
        self.mesh = mesh
        self.basis = basis
        pts, w = physical_points(mesh, order)
        bary, _ = rule(order)
        n_q = bary.shape[0]
        n_qtot = pts.shape[0]
        # element accumulator: quadrature node -> its element
        elem_of = np.repeat(np.arange(mesh.element_count), n_q)
        S_elem = sp.csr_matrix(
            (w, (np.arange(n_qtot), elem_of)), shape=(n_qtot, mesh.element_count)
        )
        # nodal accumulator: quadrature node -> the three corner vertices
        cols = mesh.triangles[elem_of]  # (n_qtot, 3)
        lam = np.tile(bary, (mesh.element_count, 1))  # (n_qtot, 3)
        S_node = sp.csr_matrix(
            (
                (w[:, None] * lam).ravel(),
                (np.repeat(np.arange(n_qtot), 3), cols.ravel()),
            ),
            shape=(n_qtot, mesh.vertex_count),
        )
        self.element_matrix = np.empty((basis.count, mesh.element_count))
        self.nodal_matrix = np.empty((basis.count, mesh.vertex_count))
        for start in range(0, basis.count, chunk):
            idx = np.arange(start, min(start + chunk, basis.count))
            block = basis.evaluate(pts, idx)
            self.element_matrix[idx] = block @ S_elem
            self.nodal_matrix[idx] = block @ S_node

    def project_values(self, values, carrier):
        if carrier == "element":
            return self.element_matrix @ values
        if carrier == "node":
            return self.nodal_matrix @ values
        raise ValueError(f"unknown carrier {carrier!r}")

    def project(self, field):
        return self.project_values(field.values, field.carrier)


def project(field, basis, order=4):
    """Projection coefficients <f, e_k> for k = 1..N_d."""
    return Projector(field.mesh, basis, order=order).project(field)


def gram_matrix(basis, mesh, count=None, order=4):
    """Pairwise L2(D) inner products of the first `count` eigenfunctions."""
    count = basis.count if count is None else count
    pts, w = physical_points(mesh, order)
    E = basis.evaluate(pts, np.arange(count))
    return (E * w) @ E.T
