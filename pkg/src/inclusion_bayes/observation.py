"""Projected observations, noise calibration, and the log-likelihood.

The data vector is Y_k = <H, e_k> + eps xi_k over the first N_d disk
eigenfunctions.  The noise scale is calibrated through the realized
ratio: eps = target * |clean| / |xi| for the drawn xi, which makes the
relative error equal the target exactly rather than only in
expectation.

ForwardOperator packages mesh + diffusion + illumination + projection
with a pattern-factored assembly so that evaluating the observation
coefficients for a new absorption field costs one sparse mat-vec, one
warm-started CG solve, and one dense mat-vec.  This is the unit of work
the sampler performs every iteration.
"""

import json
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from . import fem
from .diskbasis import Projector
from .fem import ElementField, NodalField, SolverError
from .priors import make_rng

_MIDPOINTS = np.array([[0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5]])


@dataclass(frozen=True)
class Observation:
    """Projected data vector with its noise bookkeeping."""

    y: np.ndarray
    epsilon: float
    seed: int
    relative_error_target: float

    def __post_init__(self):
        y = np.ascontiguousarray(self.y, dtype=float)
        if not np.all(np.isfinite(y)):
            raise ValueError("observation coefficients must be finite")
        if self.epsilon <= 0.0:
            raise ValueError("noise level must be positive")
        y.setflags(write=False)
        object.__setattr__(self, "y", y)

    @property
    def n_basis(self):
        return self.y.size


def save_observation(obs, csv_path, json_path):
    with open(csv_path, "w", encoding="utf-8") as fh:
        fh.write("k,Y_k\n")
        for k, yk in enumerate(obs.y, start=1):
            fh.write(f"{k},{yk:.17g}\n")
    sidecar = {
        "epsilon": obs.epsilon,
        "N_d": int(obs.n_basis),
        "seed": int(obs.seed),
        "relative_error_target": obs.relative_error_target,
    }
    with open(json_path, "w", encoding="utf-8") as fh:
        json.dump(sidecar, fh, indent=2)
        fh.write("\n")


def load_observation(csv_path, json_path):
    with open(json_path, "r", encoding="utf-8") as fh:
        meta = json.load(fh)
    rows = np.loadtxt(csv_path, delimiter=",", skiprows=1, ndmin=2)
    y = rows[np.argsort(rows[:, 0]), 1]
    if y.size != meta["N_d"]:
        raise ValueError(f"{csv_path}: expected {meta['N_d']} coefficients, got {y.size}")
    return Observation(
        y=y,
        epsilon=float(meta["epsilon"]),
        seed=int(meta["seed"]),
        relative_error_target=float(meta["relative_error_target"]),
    )


class ForwardOperator:
    """Absorption field -> projected energy-density coefficients.

    The system matrix is K(mu) + M(gamma) with fixed sparsity, so its
    data vector is `stiff_data + mass_map @ gamma`; interior and
    boundary sub-blocks reuse precomputed index maps.  Solves warm-start
    from the previous solution, which keeps the CG iteration short when
    successive fields differ little (the sampler's common case).
    """

    def __init__(self, mesh, mu, g, basis=None, carrier="element",
                 projector=None, rtol=fem.CG_RTOL):
        if carrier not in ("element", "node"):
            raise ValueError(f"unknown carrier {carrier!r}")
        self.mesh = mesh
        self.carrier = carrier
        self.rtol = rtol
        self.boundary_values = g.boundary_values(mesh)
        self.interior = mesh.interior()
        if projector is None and basis is not None:
            projector = Projector(mesh, basis)
        self.projector = projector

        tri = mesh.triangles
        n = mesh.vertex_count
        rows = np.repeat(tri, 3, axis=1).ravel()
        cols = np.tile(tri, (1, 3)).ravel()
        pattern = sp.coo_matrix(
            (np.ones(rows.size), (rows, cols)), shape=(n, n)
        ).tocsr()
        pattern.sum_duplicates()
        pattern.sort_indices()
        row_of = np.repeat(np.arange(n), np.diff(pattern.indptr))
        keys = row_of * n + pattern.indices
        pos = np.searchsorted(keys, rows.astype(np.int64) * n + cols)

        mu_int = fem._integral_of(mesh, mu)
        local_k = fem._local_stiffness(mesh, mu_int)
        self.stiff_data = np.zeros(pattern.nnz)
        np.add.at(self.stiff_data, pos, local_k.ravel())

        areas = mesh.areas()
        if carrier == "element":
            cvals = (areas[:, None, None] * fem._MASS_CONST[None, :, :]).ravel()
            ccols = np.repeat(np.arange(mesh.element_count), 9)
            cpos = pos
            width = mesh.element_count
        else:
            # integral of lambda_a lambda_b lambda_c over the midpoint rule
            tq = np.einsum("qa,qb,qc->abc", _MIDPOINTS, _MIDPOINTS, _MIDPOINTS) / 3.0
            cvals = (areas[:, None, None, None] * tq[None]).ravel()
            cpos = np.repeat(pos, 3)
            ccols = tri[:, None, None, :].repeat(3, axis=1).repeat(3, axis=2).ravel()
            width = n
        self.mass_map = sp.coo_matrix(
            (cvals, (cpos, ccols)), shape=(pattern.nnz, width)
        ).tocsr()

        locate = pattern.copy()
        locate.data = np.arange(pattern.nnz, dtype=float)
        ii = locate[self.interior][:, self.interior].tocsr()
        ib = locate[self.interior][:, mesh.boundary].tocsr()
        self._ii_positions = ii.data.astype(np.int64)
        self._ib_positions = ib.data.astype(np.int64)
        self._A_ii = sp.csr_matrix(
            (np.zeros(ii.nnz), ii.indices, ii.indptr), shape=ii.shape
        )
        self._A_ib = sp.csr_matrix(
            (np.zeros(ib.nnz), ib.indices, ib.indptr), shape=ib.shape
        )
        if carrier == "element":
            means = sp.csr_matrix(
                (
                    np.full(tri.size, 1.0 / 3.0),
                    (np.repeat(np.arange(mesh.element_count), 3), tri.ravel()),
                ),
                shape=(mesh.element_count, n),
            )
            self._element_means = means
        self._warm = None
        self.solve_count = 0

    def solve(self, gamma_values):
        """Nodal solution u for the given absorption values."""
        data = self.stiff_data + self.mass_map @ gamma_values
        self._A_ii.data = data[self._ii_positions]
        self._A_ib.data = data[self._ib_positions]
        rhs = -(self._A_ib @ self.boundary_values)
        x, _ = fem.cg_solve(
            self._A_ii, rhs, x0=self._warm, rtol=self.rtol,
            maxiter=10 * self.mesh.vertex_count,
        )
        self._warm = x
        self.solve_count += 1
        u = np.empty(self.mesh.vertex_count)
        u[self.interior] = x
        u[self.mesh.boundary] = self.boundary_values
        return u

    def field_values(self, gamma_values):
        """Energy density H = gamma u in this operator's carrier."""
        u = self.solve(gamma_values)
        if self.carrier == "element":
            return gamma_values * (self._element_means @ u)
        return gamma_values * u

    def field(self, gamma):
        cls = ElementField if self.carrier == "element" else NodalField
        return cls(self.mesh, self.field_values(self._values_of(gamma)))

    def coefficients(self, gamma):
        """Projected data coefficients <H(gamma), e_k>."""
        if self.projector is None:
            raise ValueError("operator was built without a basis/projector")
        return self.projector.project_values(
            self.field_values(self._values_of(gamma)), self.carrier
        )

    def _values_of(self, gamma):
        if isinstance(gamma, (ElementField, NodalField)):
            if gamma.carrier != self.carrier:
                raise ValueError(
                    f"operator expects {self.carrier} fields, got {gamma.carrier}"
                )
            return gamma.values
        return np.asarray(gamma, dtype=float)


def calibrate_noise(clean, relative_error, rng):
    """Draw xi ~ N(0, I) and solve for eps with exact realized ratio."""
    clean = np.asarray(clean, dtype=float)
    signal = np.linalg.norm(clean)
    if signal == 0.0:
        raise ValueError("cannot calibrate noise against a zero signal")
    if not 0.0 < relative_error < 1.0:
        raise ValueError("relative error target must lie in (0, 1)")
    xi = rng.standard_normal(clean.size)
    epsilon = relative_error * signal / np.linalg.norm(xi)
    return epsilon, xi


def simulate(operator, gamma, relative_error, seed):
    """Noisy projected observation of the forward image of gamma."""
    clean = operator.coefficients(gamma)
    rng = make_rng(seed)
    epsilon, xi = calibrate_noise(clean, relative_error, rng)
    return Observation(
        y=clean + epsilon * xi,
        epsilon=epsilon,
        seed=int(seed),
        relative_error_target=float(relative_error),
    )


def estimate_approx_error(draw_pair, op_fine, op_coarse, n_samples=200, seed=0):
    """Discretization-error scale between two forward discretizations.

    draw_pair(rng) must return one prior sample rendered on both meshes.
    Collects the projection differences V_j, forms their sample
    covariance C, and returns sqrt(trace(C) / N_d): the isotropic
    Gaussian closest (in relative entropy) to N(0, C).
    """
    if n_samples < 2:
        raise ValueError("need at least two samples for a covariance")
    rng = make_rng(seed)
    diffs = []
    for _ in range(n_samples):
        gamma_fine, gamma_coarse = draw_pair(rng)
        diffs.append(op_fine.coefficients(gamma_fine) - op_coarse.coefficients(gamma_coarse))
    V = np.array(diffs)
    var = V.var(axis=0, ddof=1)
    return float(np.sqrt(var.mean()))


def log_likelihood(predicted, obs, half=False):
    """Log of the data density: -(1/eps^2) sum (Y_k - <H, e_k>)^2.

    `half` switches to the -1/(2 eps^2) convention used when the
    posterior must match conjugate Gaussian formulas exactly.
    """
    predicted = np.asarray(predicted, dtype=float)
    if predicted.shape != obs.y.shape:
        raise ValueError("prediction and observation lengths differ")
    factor = 0.5 if half else 1.0
    misfit = obs.y - predicted
    return float(-factor / obs.epsilon ** 2 * np.dot(misfit, misfit))


__all__ = [
    "Observation", "ForwardOperator", "SolverError", "calibrate_noise",
    "simulate", "estimate_approx_error", "log_likelihood",
    "save_observation", "load_observation",
]
