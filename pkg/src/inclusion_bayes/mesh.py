"""Structured triangular meshes of the unit disk.

The generator places concentric rings of vertices (ring j holds 6j
vertices at radius j/rings) and triangulates each annulus with an
angle-ordered sweep, which is deterministic and needs no external mesh
library.  Element count is 6 * rings**2 and grows 4x when the ring
count doubles.  Ring-count presets approximate the standard working
resolutions: a coarse "desk" mesh for quick runs, the "inversion" mesh
used when sampling, and the finer "data" mesh reserved for simulating
observations.
"""

import io
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

#: vertices within this distance of the unit circle are snapped onto it
BOUNDARY_SNAP_TOL = 1e-10

#: named ring counts; element count is 6 * rings**2
PRESET_RINGS = {
    "desk": 29,       # 5046 elements
    "desk-fine": 58,  # 20184 elements, one refinement above desk
    "inversion": 65,  # 25350 elements
    "data": 112,      # 75264 elements
}


class MeshFormatError(ValueError):
    """Raised when a mesh file cannot be parsed."""


class MeshInvariantError(ValueError):
    """Raised when mesh data violates a structural invariant."""


@dataclass(frozen=True)
class TriMesh:
    """Conforming triangulation of the unit disk.

    vertices: (N_m, 2) float array, triangles: (N_e, 3) int array with
    counter-clockwise orientation, boundary: sorted indices of vertices
    on the unit circle.  Arrays are frozen after construction so a mesh
    can be shared freely.
    """

    vertices: np.ndarray
    triangles: np.ndarray
    boundary: np.ndarray
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "vertices", np.ascontiguousarray(self.vertices, dtype=float))
        object.__setattr__(self, "triangles", np.ascontiguousarray(self.triangles, dtype=np.int64))
        object.__setattr__(self, "boundary", np.ascontiguousarray(np.sort(self.boundary), dtype=np.int64))
        for arr in (self.vertices, self.triangles, self.boundary):
            arr.setflags(write=False)

    @property
    def vertex_count(self):
        return self.vertices.shape[0]

    @property
    def element_count(self):
        return self.triangles.shape[0]

    def interior(self):
        """Indices of vertices not on the boundary."""
        mask = np.ones(self.vertex_count, dtype=bool)
        mask[self.boundary] = False
        return np.nonzero(mask)[0]

    def signed_areas(self):
        p = self.vertices[self.triangles]
        d1 = p[:, 1] - p[:, 0]
        d2 = p[:, 2] - p[:, 0]
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])

    def areas(self):
        if "areas" not in self._cache:
            self._cache["areas"] = self.signed_areas()
        return self._cache["areas"]

    def centroids(self):
        if "centroids" not in self._cache:
            self._cache["centroids"] = self.vertices[self.triangles].mean(axis=1)
        return self._cache["centroids"]

    def edge_count(self):
        tri = self.triangles
        edges = np.vstack([tri[:, [0, 1]], tri[:, [1, 2]], tri[:, [2, 0]]])
        edges.sort(axis=1)
        return np.unique(edges, axis=0).shape[0]

    def euler_characteristic(self):
        """V - E + F counting the unbounded outer face."""
        return self.vertex_count - self.edge_count() + (self.element_count + 1)

    def validate(self):
        """Check all structural invariants; raises MeshInvariantError."""
        if self.vertex_count < 3 or self.element_count < 1:
            raise MeshInvariantError("mesh must contain at least one triangle")
        if self.triangles.min() < 0 or self.triangles.max() >= self.vertex_count:
            raise MeshInvariantError("triangle refers to a nonexistent vertex")
        areas = self.signed_areas()
        if not np.all(areas > 0.0):
            k = int(np.argmin(areas))
            raise MeshInvariantError(
                f"triangle {k} has nonpositive signed area {areas[k]:.3e} "
                "(clockwise or degenerate)"
            )
        used = np.zeros(self.vertex_count, dtype=bool)
        used[self.triangles] = True
        if not used.all():
            raise MeshInvariantError("vertex not referenced by any triangle")
        pairs = cKDTree(self.vertices).query_pairs(r=1e-12)
        if pairs:
            raise MeshInvariantError(f"duplicate vertices within 1e-12: {sorted(pairs)[0]}")
        radii = np.hypot(self.vertices[:, 0], self.vertices[:, 1])
        if self.boundary.size:
            off = np.abs(radii[self.boundary] - 1.0)
            if off.max() > BOUNDARY_SNAP_TOL:
                raise MeshInvariantError(
                    f"boundary vertex off the unit circle by {off.max():.3e}"
                )
        inner = np.ones(self.vertex_count, dtype=bool)
        inner[self.boundary] = False
        if inner.any() and radii[inner].max() >= 1.0:
            raise MeshInvariantError("interior vertex lies on or outside the unit circle")
        return self


def _annulus_triangles(inner_offset, n_inner, outer_offset, n_outer):
    """Triangulate the annulus between two angle-ordered vertex rings."""
    tris = []
    i = k = 0
    while i < n_inner or k < n_outer:
        advance_outer = k < n_outer and (
            i == n_inner or (k + 1) * n_inner <= (i + 1) * n_outer
        )
        if advance_outer:
            tris.append((outer_offset + k, outer_offset + (k + 1) % n_outer,
                         inner_offset + i % n_inner))
            k += 1
        else:
            tris.append((outer_offset + k % n_outer, inner_offset + (i + 1) % n_inner,
                         inner_offset + i))
            i += 1
    return tris


def disk_mesh(rings):
    """Mesh of the unit disk with the given number of concentric rings."""
    if rings < 1:
        raise ValueError("rings must be >= 1")
    verts = [np.zeros((1, 2))]
    for j in range(1, rings + 1):
        n = 6 * j
        ang = 2.0 * np.pi * np.arange(n) / n
        ring = (j / rings) * np.column_stack([np.cos(ang), np.sin(ang)])
        verts.append(ring)
    vertices = np.vstack(verts)

    tris = [(0, 1 + k, 1 + (k + 1) % 6) for k in range(6)]
    for j in range(2, rings + 1):
        inner_offset = 1 + 3 * (j - 2) * (j - 1)
        outer_offset = 1 + 3 * (j - 1) * j
        tris.extend(_annulus_triangles(inner_offset, 6 * (j - 1), outer_offset, 6 * j))
    triangles = np.asarray(tris, dtype=np.int64)

    boundary_start = 1 + 3 * (rings - 1) * rings
    boundary = np.arange(boundary_start, vertices.shape[0])
    # outermost ring is constructed on the circle; snap to kill rounding
    r = np.hypot(vertices[boundary, 0], vertices[boundary, 1])
    vertices[boundary] /= r[:, None]
    return TriMesh(vertices, triangles, boundary).validate()


def generate_disk_mesh(refinement):
    """Disk mesh whose element count grows ~4x per refinement level."""
    if refinement < 1:
        raise ValueError("refinement must be a positive integer")
    return disk_mesh(2 ** refinement)


def preset_mesh(name):
    """One of the named working resolutions (see PRESET_RINGS)."""
    try:
        return disk_mesh(PRESET_RINGS[name])
    except KeyError:
        raise ValueError(f"unknown mesh preset {name!r}; have {sorted(PRESET_RINGS)}") from None


def total_area(mesh):
    """Sum of element areas (area of the meshed polygon)."""
    return float(mesh.areas().sum())


def save_mesh(mesh, path):
    """Write the line-oriented text format.

    Header `trimesh N_m N_e N_b`, then N_m vertex lines `x y`, N_e
    triangle lines `i j k` (0-based), then N_b boundary-vertex indices.
    Floats carry 17 significant digits so reloads are bit-exact.
    """
    buf = io.StringIO()
    buf.write(f"trimesh {mesh.vertex_count} {mesh.element_count} {mesh.boundary.size}\n")
    for x, y in mesh.vertices:
        buf.write(f"{x:.17g} {y:.17g}\n")
    for i, j, k in mesh.triangles:
        buf.write(f"{i} {j} {k}\n")
    for b in mesh.boundary:
        buf.write(f"{b}\n")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(buf.getvalue())


def load_mesh(path):
    """Read a mesh file; validates every invariant before returning."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines:
        raise MeshFormatError(f"{path}: empty mesh file")
    header = lines[0].split()
    if len(header) != 4 or header[0] != "trimesh":
        raise MeshFormatError(f"{path}: bad header {lines[0]!r}")
    try:
        n_m, n_e, n_b = (int(tok) for tok in header[1:])
    except ValueError as exc:
        raise MeshFormatError(f"{path}: non-integer counts in header") from exc
    if len(lines) != 1 + n_m + n_e + n_b:
        raise MeshFormatError(
            f"{path}: expected {1 + n_m + n_e + n_b} lines, found {len(lines)}"
        )
    try:
        vertices = np.array(
            [[float(t) for t in ln.split()] for ln in lines[1:1 + n_m]], dtype=float
        ).reshape(n_m, 2)
        triangles = np.array(
            [[int(t) for t in ln.split()] for ln in lines[1 + n_m:1 + n_m + n_e]],
            dtype=np.int64,
        ).reshape(n_e, 3)
        boundary = np.array([int(ln) for ln in lines[1 + n_m + n_e:]], dtype=np.int64)
    except ValueError as exc:
        raise MeshFormatError(f"{path}: malformed record ({exc})") from exc
    return TriMesh(vertices, triangles, boundary).validate()
