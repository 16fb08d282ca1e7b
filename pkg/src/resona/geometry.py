"""Resonator geometry: triangulated surfaces, material constants, lattices.

Meshes are flat-triangle surface triangulations carrying per-panel area,
centroid and outward normal, plus a per-panel resonator label.  All
quantities are SI.  Meshes are immutable after construction and safe to
share between parallel workers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "SurfaceMesh",
    "PlaneMesh",
    "MaterialParams",
    "Lattice",
    "make_sphere_mesh",
    "make_dimer",
    "make_graded_array",
    "merge_meshes",
    "translate_mesh",
    "scale_mesh",
    "read_tri",
    "write_tri",
    "make_disk_polygon",
    "make_honeycomb_pair",
    "honeycomb_lattice",
    "cubic_lattice",
]

# Measured icosahedral-subdivision area deficit: (4*pi*r^2 - area)/(4*pi*r^2)
# stays below AREA_DEFICIT_C * 4**-refinement for every refinement level.
AREA_DEFICIT_C = 0.31


class MeshError(ValueError):
    """Invalid mesh topology or geometry."""


@dataclass(frozen=True, eq=False)
class SurfaceMesh:
    """Closed triangulated boundary of one or more resonators.

    Attributes
    ----------
    vertices : (nv, 3) float array
    triangles : (nt, 3) int array of vertex indices (outward CCW winding)
    resonator_id : (nt,) int array, values in 0..n_resonators-1
    """

    vertices: np.ndarray
    triangles: np.ndarray
    resonator_id: np.ndarray
    areas: np.ndarray = field(init=False)
    centroids: np.ndarray = field(init=False)
    normals: np.ndarray = field(init=False)
    volumes: np.ndarray = field(init=False)

    def __post_init__(self):
        verts = np.asarray(self.vertices, dtype=float)
        tris = np.asarray(self.triangles, dtype=np.int64)
        rid = np.asarray(self.resonator_id, dtype=np.int64)
        if tris.ndim != 2 or tris.shape[1] != 3:
            raise MeshError("triangles must be an (nt, 3) index array")
        if rid.shape != (tris.shape[0],):
            raise MeshError("resonator_id must have one entry per triangle")
        object.__setattr__(self, "vertices", verts)
        object.__setattr__(self, "triangles", tris)
        object.__setattr__(self, "resonator_id", rid)

        p0 = verts[tris[:, 0]]
        p1 = verts[tris[:, 1]]
        p2 = verts[tris[:, 2]]
        cross = np.cross(p1 - p0, p2 - p0)
        double_area = np.linalg.norm(cross, axis=1)
        if np.any(double_area <= 0.0):
            raise MeshError("degenerate panel with zero area")
        areas = 0.5 * double_area
        normals = cross / double_area[:, None]
        centroids = (p0 + p1 + p2) / 3.0

        n_res = int(rid.max()) + 1 if rid.size else 0
        if sorted(set(rid.tolist())) != list(range(n_res)):
            raise MeshError("resonator ids must cover 0..N-1")
        volumes = np.empty(n_res)
        for i in range(n_res):
            sel = rid == i
            # closed-surface test: net vector area must vanish
            net = (areas[sel, None] * normals[sel]).sum(axis=0)
            if np.linalg.norm(net) > 1e-6 * areas[sel].sum():
                raise MeshError(f"resonator {i} surface is not closed")
            # divergence-theorem volume, exact for flat panels
            volumes[i] = np.einsum(
                "p,p->", areas[sel], np.einsum("pi,pi->p", centroids[sel], normals[sel])
            ) / 3.0
            if volumes[i] <= 0.0:
                raise MeshError(f"resonator {i} has non-positive volume (check winding)")
        object.__setattr__(self, "areas", areas)
        object.__setattr__(self, "centroids", centroids)
        object.__setattr__(self, "normals", normals)
        object.__setattr__(self, "volumes", volumes)
        self.vertices.setflags(write=False)
        self.triangles.setflags(write=False)
        self.resonator_id.setflags(write=False)

    @property
    def n_panels(self) -> int:
        return self.triangles.shape[0]

    @property
    def n_resonators(self) -> int:
        return self.volumes.shape[0]

    def panel_vertices(self) -> np.ndarray:
        """Vertex triples per panel, shape (nt, 3, 3)."""
        return self.vertices[self.triangles]

    def total_area(self, resonator: int | None = None) -> float:
        if resonator is None:
            return float(self.areas.sum())
        return float(self.areas[self.resonator_id == resonator].sum())

    def bounding_sphere(self, resonator: int) -> tuple[np.ndarray, float]:
        """Center-of-volume and enclosing radius of one resonator."""
        sel = self.resonator_id == resonator
        pts = self.vertices[np.unique(self.triangles[sel])]
        center = pts.mean(axis=0)
        radius = float(np.linalg.norm(pts - center, axis=1).max())
        return center, radius


@dataclass(frozen=True, eq=False)
class PlaneMesh:
    """Closed polygonal curve(s) in the plane for two-dimensional problems.

    Panels are straight segments with midpoint collocation; normals point
    out of the enclosed region (CCW vertex winding).
    """

    vertices: np.ndarray        # (nv, 2)
    segments: np.ndarray        # (ns, 2) index pairs
    resonator_id: np.ndarray    # (ns,)
    lengths: np.ndarray = field(init=False)
    midpoints: np.ndarray = field(init=False)
    normals: np.ndarray = field(init=False)
    tangents: np.ndarray = field(init=False)
    areas: np.ndarray = field(init=False)   # enclosed area per resonator

    def __post_init__(self):
        verts = np.asarray(self.vertices, dtype=float)
        segs = np.asarray(self.segments, dtype=np.int64)
        rid = np.asarray(self.resonator_id, dtype=np.int64)
        a = verts[segs[:, 0]]
        b = verts[segs[:, 1]]
        d = b - a
        lengths = np.linalg.norm(d, axis=1)
        if np.any(lengths <= 0.0):
            raise MeshError("degenerate segment")
        tangents = d / lengths[:, None]
        # outward normal for CCW winding: rotate tangent by -90 degrees
        normals = np.stack([tangents[:, 1], -tangents[:, 0]], axis=1)
        midpoints = 0.5 * (a + b)
        n_res = int(rid.max()) + 1 if rid.size else 0
        areas = np.empty(n_res)
        for i in range(n_res):
            sel = rid == i
            # shoelace via the divergence theorem, exact for straight panels
            areas[i] = 0.5 * np.einsum(
                "p,p->", lengths[sel], np.einsum("pi,pi->p", midpoints[sel], normals[sel])
            )
            if areas[i] <= 0.0:
                raise MeshError(f"plane resonator {i} has non-positive area")
        object.__setattr__(self, "vertices", verts)
        object.__setattr__(self, "segments", segs)
        object.__setattr__(self, "resonator_id", rid)
        object.__setattr__(self, "lengths", lengths)
        object.__setattr__(self, "midpoints", midpoints)
        object.__setattr__(self, "normals", normals)
        object.__setattr__(self, "tangents", tangents)
        object.__setattr__(self, "areas", areas)

    @property
    def n_panels(self) -> int:
        return self.segments.shape[0]

    @property
    def n_resonators(self) -> int:
        return self.areas.shape[0]

    def panel_endpoints(self) -> tuple[np.ndarray, np.ndarray]:
        return self.vertices[self.segments[:, 0]], self.vertices[self.segments[:, 1]]


@dataclass(frozen=True)
class MaterialParams:
    """Background (rho, kappa) and resonator (rho_b, kappa_b) constants."""

    rho: float
    kappa: float
    rho_b: float
    kappa_b: float

    def __post_init__(self):
        for name in ("rho", "kappa", "rho_b", "kappa_b"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be positive")
        if not 0.0 < self.delta < 1.0:
            raise ValueError("density contrast rho_b/rho must lie in (0, 1)")

    @property
    def delta(self) -> float:
        return self.rho_b / self.rho

    @property
    def v(self) -> float:
        return math.sqrt(self.kappa / self.rho)

    @property
    def v_b(self) -> float:
        return math.sqrt(self.kappa_b / self.rho_b)

    def wavenumbers(self, omega: complex) -> tuple[complex, complex]:
        """(k, k_b) = (omega/v, omega/v_b)."""
        return omega / self.v, omega / self.v_b


AIR_IN_WATER = MaterialParams(rho=1000.0, kappa=2.2e9, rho_b=1.2, kappa_b=1.4e5)


@dataclass(frozen=True)
class Lattice:
    """Bravais lattice with dual vectors satisfying l_i . a_j = 2 pi delta_ij."""

    vectors: np.ndarray  # (d, dim) rows are lattice vectors

    def __post_init__(self):
        vecs = np.atleast_2d(np.asarray(self.vectors, dtype=float))
        object.__setattr__(self, "vectors", vecs)
        d, dim = vecs.shape
        if d > dim:
            raise ValueError("more lattice vectors than spatial dimensions")
        gram = vecs @ vecs.T
        if abs(np.linalg.det(gram)) < 1e-14:
            raise ValueError("lattice vectors are linearly dependent")

    @property
    def dimension(self) -> int:
        return self.vectors.shape[0]

    @property
    def duals(self) -> np.ndarray:
        """Dual vectors (rows), in the span of the lattice vectors."""
        v = self.vectors
        gram_inv = np.linalg.inv(v @ v.T)
        return 2.0 * np.pi * gram_inv @ v

    @property
    def cell_volume(self) -> float:
        v = self.vectors
        return float(np.sqrt(np.linalg.det(v @ v.T)))

    def images(self, max_order: int) -> np.ndarray:
        """All lattice points sum(n_i l_i) with |n_i| <= max_order."""
        rng = np.arange(-max_order, max_order + 1)
        grids = np.meshgrid(*([rng] * self.dimension), indexing="ij")
        coeffs = np.stack([g.ravel() for g in grids], axis=1)
        return coeffs @ self.vectors

    def dual_points(self, max_order: int) -> np.ndarray:
        rng = np.arange(-max_order, max_order + 1)
        grids = np.meshgrid(*([rng] * self.dimension), indexing="ij")
        coeffs = np.stack([g.ravel() for g in grids], axis=1)
        return coeffs @ self.duals

    def reduce(self, alpha: np.ndarray) -> np.ndarray:
        """Fold a quasi-momentum into the fundamental cell (-pi, pi]^d of coeffs."""
        alpha = np.asarray(alpha, dtype=float)
        coeffs = self.vectors @ alpha / (2.0 * np.pi)
        coeffs -= np.floor(coeffs + 0.5)
        # keep +0.5 edge rather than -0.5
        coeffs[np.isclose(coeffs, -0.5)] = 0.5
        return coeffs @ self.duals


def cubic_lattice(a: float = 1.0) -> Lattice:
    return Lattice(np.eye(3) * a)


def honeycomb_lattice(L: float = 1.0) -> Lattice:
    v = L * np.array([[math.sqrt(3) / 2, 0.5], [math.sqrt(3) / 2, -0.5]])
    return Lattice(v)


# ---------------------------------------------------------------------------
# sphere meshing by icosahedral subdivision


def _icosahedron() -> tuple[np.ndarray, np.ndarray]:
    phi = (1.0 + math.sqrt(5.0)) / 2.0
    verts = np.array(
        [
            [-1, phi, 0], [1, phi, 0], [-1, -phi, 0], [1, -phi, 0],
            [0, -1, phi], [0, 1, phi], [0, -1, -phi], [0, 1, -phi],
            [phi, 0, -1], [phi, 0, 1], [-phi, 0, -1], [-phi, 0, 1],
        ],
        dtype=float,
    )
    verts /= np.linalg.norm(verts, axis=1)[:, None]
    tris = np.array(
        [
            [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
            [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
            [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
            [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
        ],
        dtype=np.int64,
    )
    return verts, tris


def _subdivide(verts: np.ndarray, tris: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    verts = list(map(tuple, verts))
    cache: dict[tuple[int, int], int] = {}

    def midpoint(i: int, j: int) -> int:
        key = (min(i, j), max(i, j))
        if key not in cache:
            v = tuple((np.asarray(verts[i]) + np.asarray(verts[j])) / 2.0)
            verts.append(v)
            cache[key] = len(verts) - 1
        return cache[key]

    out = []
    for a, b, c in tris:
        ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
        out.extend([[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]])
    return np.asarray(verts), np.asarray(out, dtype=np.int64)


def make_sphere_mesh(center, radius: float, refinement: int) -> SurfaceMesh:
    """Icosahedral sphere triangulation; 20 * 4**refinement panels.

    Vertices are projected onto the sphere after each subdivision, so the
    total area deficit relative to 4 pi r^2 is below
    ``AREA_DEFICIT_C * 4**-refinement``.
    """
    if radius <= 0.0:
        raise ValueError("radius must be positive")
    if refinement < 0:
        raise ValueError("refinement must be >= 0")
    verts, tris = _icosahedron()
    for _ in range(refinement):
        verts, tris = _subdivide(verts, tris)
        verts = verts / np.linalg.norm(verts, axis=1)[:, None]
    verts = verts * radius + np.asarray(center, dtype=float)
    return SurfaceMesh(verts, tris, np.zeros(len(tris), dtype=np.int64))


def translate_mesh(mesh: SurfaceMesh, shift) -> SurfaceMesh:
    return SurfaceMesh(mesh.vertices + np.asarray(shift, float), mesh.triangles, mesh.resonator_id)


def scale_mesh(mesh: SurfaceMesh, factor: float, about=(0.0, 0.0, 0.0)) -> SurfaceMesh:
    about = np.asarray(about, float)
    return SurfaceMesh(
        about + factor * (mesh.vertices - about), mesh.triangles, mesh.resonator_id
    )


def merge_meshes(*meshes: SurfaceMesh) -> SurfaceMesh:
    """Concatenate meshes, renumbering resonator ids consecutively."""
    verts, tris, rid = [], [], []
    v_off = 0
    r_off = 0
    for m in meshes:
        verts.append(m.vertices)
        tris.append(m.triangles + v_off)
        rid.append(m.resonator_id + r_off)
        v_off += m.vertices.shape[0]
        r_off += m.n_resonators
    return SurfaceMesh(np.vstack(verts), np.vstack(tris), np.concatenate(rid))


def _check_no_overlap(mesh: SurfaceMesh) -> None:
    centers_radii = [mesh.bounding_sphere(i) for i in range(mesh.n_resonators)]
    for i in range(len(centers_radii)):
        for j in range(i + 1, len(centers_radii)):
            ci, ri = centers_radii[i]
            cj, rj = centers_radii[j]
            if np.linalg.norm(ci - cj) <= ri + rj:
                raise MeshError(f"resonators {i} and {j} overlap (bounding spheres)")


def make_dimer(radius: float, gap: float, refinement: int, orientation=(1.0, 0.0, 0.0)) -> SurfaceMesh:
    """Two identical spheres with the given surface gap, symmetric about the origin.

    Resonator 0 sits on the negative side of the axis, resonator 1 on the
    positive side; center separation is ``2 * radius + gap``.
    """
    axis = np.asarray(orientation, dtype=float)
    axis = axis / np.linalg.norm(axis)
    half = (2.0 * radius + gap) / 2.0
    if gap <= 0.0:
        raise MeshError("resonators overlap or touch: gap must be positive")
    s0 = make_sphere_mesh(-half * axis, radius, refinement)
    # point reflection of the first sphere keeps the panel pairing exact
    s1 = SurfaceMesh(-s0.vertices, s0.triangles[:, ::-1], s0.resonator_id)
    mesh = merge_meshes(s0, s1)
    _check_no_overlap(mesh)
    return mesh


def make_graded_array(
    radii,
    gap: float | None = None,
    total_extent: float | None = None,
    refinement: int = 1,
) -> SurfaceMesh:
    """Spheres with strictly increasing radii placed along the x-axis.

    The spacing rule is either a fixed surface gap between neighbours or a
    total extent that the array must fill (uniform gaps solved for).
    """
    radii = np.asarray(radii, dtype=float)
    n = radii.size
    if n == 0:
        raise ValueError("need at least one radius")
    if np.any(np.diff(radii) <= 0.0) and n > 1:
        raise MeshError("radii must be strictly increasing")
    if (gap is None) == (total_extent is None):
        raise ValueError("give exactly one of gap or total_extent")
    if total_extent is not None:
        if n == 1:
            gap = 0.0
            if total_extent < 2.0 * radii[0]:
                raise MeshError("extent smaller than the sphere diameter")
        else:
            gap = (total_extent - 2.0 * radii.sum()) / (n - 1)
            if gap <= 0.0:
                raise MeshError("requested extent is too small for these radii")
    assert gap is not None
    if n > 1 and gap <= 0.0:
        raise MeshError("gap must be positive")
    x = np.empty(n)
    pos = 0.0
    for i in range(n):
        x[i] = pos + radii[i]
        pos = x[i] + radii[i] + gap
    x -= 0.5 * (x[0] - radii[0] + x[-1] + radii[-1])  # center the array
    parts = [make_sphere_mesh((xi, 0.0, 0.0), r, refinement) for xi, r in zip(x, radii)]
    mesh = merge_meshes(*parts)
    _check_no_overlap(mesh)
    return mesh


# ---------------------------------------------------------------------------
# plain-text triangle format: "nv nt", vertex lines, triangle lines "i j k rid"


def write_tri(mesh: SurfaceMesh, path) -> None:
    with open(path, "w", encoding="ascii") as fh:
        fh.write(f"{mesh.vertices.shape[0]} {mesh.triangles.shape[0]}\n")
        for v in mesh.vertices:
            fh.write(f"{v[0]:.17g} {v[1]:.17g} {v[2]:.17g}\n")
        for t, r in zip(mesh.triangles, mesh.resonator_id):
            fh.write(f"{t[0]} {t[1]} {t[2]} {r}\n")


def read_tri(path) -> SurfaceMesh:
    with open(path, "r", encoding="ascii") as fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise MeshError("bad header: expected 'nv nt'")
        nv, nt = int(header[0]), int(header[1])
        verts = np.empty((nv, 3))
        for i in range(nv):
            parts = fh.readline().split()
            if len(parts) != 3:
                raise MeshError(f"bad vertex line {i}")
            verts[i] = [float(p) for p in parts]
        tris = np.empty((nt, 3), dtype=np.int64)
        rid = np.empty(nt, dtype=np.int64)
        for i in range(nt):
            parts = fh.readline().split()
            if len(parts) != 4:
                raise MeshError(f"bad triangle line {i}")
            tris[i] = [int(p) for p in parts[:3]]
            rid[i] = int(parts[3])
    return SurfaceMesh(verts, tris, rid)


# ---------------------------------------------------------------------------
# two-dimensional geometries (honeycomb cross-sections)


def make_disk_polygon(center, radius: float, n_sides: int = 48, theta0: float = 0.0) -> PlaneMesh:
    """Regular polygon inscribed in a circle, CCW winding."""
    if radius <= 0.0:
        raise ValueError("radius must be positive")
    if n_sides < 3:
        raise ValueError("need at least 3 sides")
    ang = theta0 + 2.0 * np.pi * np.arange(n_sides) / n_sides
    verts = np.stack([np.cos(ang), np.sin(ang)], axis=1) * radius + np.asarray(center, float)
    segs = np.stack([np.arange(n_sides), (np.arange(n_sides) + 1) % n_sides], axis=1)
    return PlaneMesh(verts, segs, np.zeros(n_sides, dtype=np.int64))


def make_honeycomb_pair(L: float, radius: float, n_sides: int = 48) -> PlaneMesh:
    """Two disks at the honeycomb sites of the rhombic unit cell.

    Site 1 is at (l1+l2)/3, site 2 at 2(l1+l2)/3; the second disk is the
    point reflection of the first through the cell center, so the pair is
    exactly symmetric panel-for-panel.  The polygon vertex count must be a
    multiple of 6 so the three-fold site symmetry is respected exactly.
    """
    if n_sides % 6 != 0:
        raise ValueError("n_sides must be a multiple of 6 for honeycomb symmetry")
    lat = honeycomb_lattice(L)
    x1 = (lat.vectors[0] + lat.vectors[1]) / 3.0
    x0 = 1.5 * x1
    d1 = make_disk_polygon(x1, radius, n_sides)
    # a 2D point reflection is a half-turn rotation, so the winding survives
    verts2 = 2.0 * x0 - d1.vertices
    d2 = PlaneMesh(verts2, d1.segments, np.zeros(n_sides, dtype=np.int64))
    verts = np.vstack([d1.vertices, d2.vertices])
    segs = np.vstack([d1.segments, d2.segments + d1.vertices.shape[0]])
    rid = np.concatenate([np.zeros(n_sides, np.int64), np.ones(n_sides, np.int64)])
    return PlaneMesh(verts, segs, rid)
