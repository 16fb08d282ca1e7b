"""Dense collocation discretizations of the layer potentials.

Panel scheme: piecewise-constant densities, centroid collocation, exact
flat-triangle integration of the Laplace kernel and its gradient, and a
shared degree-5 quadrature rule for every smooth kernel correction (the
Helmholtz difference kernels, the low-frequency expansion terms and the
lattice-sum corrections).  Using one rule everywhere makes the assembled
frequency dependence consistent with the expansion operators to O(k^4)
exactly, not just to quadrature accuracy.

The Neumann-Poincare matrix at k = 0 is closed with a small-rank correction
so that two discrete counterparts of the continuum surface-integral
identities hold exactly: the per-resonator area functionals annihilate
(-1/2 I + K*), and the equilibrium densities S^{-1}[chi_j] span its kernel.
The k^2 expansion term is closed likewise against a boundary average of the
single layer.  These closures keep the discrete resonance problem an exact
small-contrast perturbation family, which the refinement-order tests rely
on.
"""

from __future__ import annotations

import struct
import warnings
import weakref
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .geometry import Lattice, PlaneMesh, SurfaceMesh
from .kernels import (
    Ewald2D,
    Ewald3D,
    chain_correction,
    chain_correction_gradient,
    helmholtz_smooth,
    helmholtz_smooth_normal,
)
from .quadrature import (
    newton_gradient_triangles,
    newton_potential_triangles,
    segment_log_integral,
    segment_rule,
    triangle_rule,
)

__all__ = [
    "DenseOperator",
    "BemWorkspace",
    "workspace_for",
    "assemble_single_layer",
    "assemble_neumann_poincare",
    "assemble_expansion_terms",
    "assemble_quasi_single_layer",
    "assemble_quasi_neumann_poincare",
    "assemble_chain_single_layer",
    "assemble_chain_neumann_poincare",
    "assemble_plane_quasi_single_layer",
    "solve_with_cond_check",
    "dump_operator",
    "load_operator",
]

_KIND_TAGS = {
    "single_layer": 1,
    "neumann_poincare": 2,
    "expansion:S1": 11,
    "expansion:S2": 12,
    "expansion:S3": 13,
    "expansion:K2": 22,
    "expansion:K3": 23,
    "quasi_single_layer": 31,
    "quasi_neumann_poincare": 32,
    "chain_single_layer": 41,
    "chain_neumann_poincare": 42,
    "plane_quasi_single_layer": 51,
}

COND_WARN_THRESHOLD = 1e12
_ROW_CHUNK = 128


@dataclass(frozen=True, eq=False)
class DenseOperator:
    """Dense collocation matrix with a kind tag and its wavenumber.

    The wavenumber is None for operators loaded from dumps (the binary
    header does not carry it)."""

    entries: np.ndarray
    kind: str
    wavenumber: complex | None = 0.0

    def __post_init__(self):
        if self.kind not in _KIND_TAGS:
            raise ValueError(f"unknown operator kind {self.kind!r}")
        if not np.all(np.isfinite(self.entries)):
            raise ValueError("operator entries contain NaN/Inf")
        if self.kind == "single_layer" and self.wavenumber == 0.0:
            if np.iscomplexobj(self.entries) and np.any(self.entries.imag != 0.0):
                raise ValueError("static single layer must be real")

    @property
    def shape(self):
        return self.entries.shape


def dump_operator(op: DenseOperator, path) -> None:
    """Binary dump: little-endian header `n (u32) | kindtag (u32)`, then
    row-major complex128 entries."""
    n = op.entries.shape[0]
    with open(path, "wb") as fh:
        fh.write(struct.pack("<II", n, _KIND_TAGS[op.kind]))
        np.ascontiguousarray(op.entries, dtype=np.complex128).astype(
            "<c16", copy=False
        ).tofile(fh)


def load_operator(path) -> DenseOperator:
    with open(path, "rb") as fh:
        n, tag = struct.unpack("<II", fh.read(8))
        entries = np.fromfile(fh, dtype="<c16", count=n * n).reshape(n, n)
    kind = {v: k for k, v in _KIND_TAGS.items()}[tag]
    if kind == "single_layer" and np.all(entries.imag == 0.0):
        return DenseOperator(entries.real.copy(), kind, 0.0)
    return DenseOperator(entries.astype(np.complex128), kind, None)


def solve_with_cond_check(matrix: np.ndarray, rhs: np.ndarray, label: str = "system"):
    """Pivoted-LU solve with a reciprocal-condition check (warn above 1e12)."""
    a = np.asarray(matrix)
    anorm = np.linalg.norm(a, 1)
    lu, piv = linalg.lu_factor(a)
    if np.iscomplexobj(a):
        rcond = linalg.lapack.zgecon(lu, anorm)[0]
    else:
        rcond = linalg.lapack.dgecon(lu, anorm)[0]
    if rcond == 0.0:
        raise np.linalg.LinAlgError(f"{label}: matrix is numerically singular")
    if rcond < 1.0 / COND_WARN_THRESHOLD:
        warnings.warn(
            f"{label}: condition number about {1.0 / rcond:.2e} exceeds 1e12",
            RuntimeWarning,
            stacklevel=2,
        )
    return linalg.lu_solve((lu, piv), rhs)


# ---------------------------------------------------------------------------


class BemWorkspace:
    """Cached panel data and operator pieces for one mesh."""

    def __init__(self, mesh: SurfaceMesh):
        self.mesh = mesh
        self.panel_verts = mesh.panel_vertices()
        nodes, weights = triangle_rule(self.panel_verts, mesh.areas)
        self.nodes = nodes.reshape(-1, 3)
        self.weights = weights.reshape(-1)
        self.n_nodes_per_panel = nodes.shape[1]
        self._cache: dict = {}

    # -- generic folding of smooth kernels over source quadrature nodes ----
    def _fold(self, kernel_pairs) -> np.ndarray:
        """Assemble sum_m w_m kernel(x_i, y_m) into panel columns.

        kernel_pairs(d, obs_idx) -> per-pair values for displacement block d.
        """
        mesh = self.mesh
        n = mesh.n_panels
        q = self.n_nodes_per_panel
        out = None
        for start in range(0, n, _ROW_CHUNK):
            stop = min(start + _ROW_CHUNK, n)
            d = mesh.centroids[start:stop, None, :] - self.nodes[None, :, :]
            vals = kernel_pairs(d, np.arange(start, stop)) * self.weights[None, :]
            block = vals.reshape(stop - start, n, q).sum(axis=2)
            if out is None:
                out = np.empty((n, n), dtype=block.dtype)
            out[start:stop] = block
        return out

    # -- static pieces -------------------------------------------------------
    def laplace_single_layer(self) -> np.ndarray:
        if "S0" not in self._cache:
            n = self.mesh.n_panels
            out = np.empty((n, n))
            for start in range(0, n, _ROW_CHUNK):
                stop = min(start + _ROW_CHUNK, n)
                out[start:stop] = newton_potential_triangles(
                    self.mesh.centroids[start:stop], self.panel_verts
                )
            self._cache["S0"] = -out / (4.0 * np.pi)
        return self._cache["S0"]

    def laplace_np_raw(self) -> np.ndarray:
        if "K0_raw" not in self._cache:
            mesh = self.mesh
            n = mesh.n_panels
            out = np.empty((n, n))
            for start in range(0, n, _ROW_CHUNK):
                stop = min(start + _ROW_CHUNK, n)
                v = newton_gradient_triangles(mesh.centroids[start:stop], self.panel_verts)
                out[start:stop] = np.einsum("mtj,mj->mt", v, mesh.normals[start:stop]) / (
                    4.0 * np.pi
                )
            self._cache["K0_raw"] = out
        return self._cache["K0_raw"]

    def equilibrium_densities(self) -> np.ndarray:
        """psi[:, j] solves S psi = indicator of resonator j at collocation points."""
        if "psi" not in self._cache:
            mesh = self.mesh
            chi = np.zeros((mesh.n_panels, mesh.n_resonators))
            for j in range(mesh.n_resonators):
                chi[mesh.resonator_id == j, j] = 1.0
            self._cache["psi"] = solve_with_cond_check(
                self.laplace_single_layer(), chi, "static single layer"
            )
        return self._cache["psi"]

    def area_functionals(self) -> np.ndarray:
        """a[:, i] = panel areas of resonator i (zero elsewhere)."""
        mesh = self.mesh
        a = np.zeros((mesh.n_panels, mesh.n_resonators))
        for i in range(mesh.n_resonators):
            a[mesh.resonator_id == i, i] = mesh.areas[mesh.resonator_id == i]
        return a

    def laplace_np(self) -> np.ndarray:
        """Neumann-Poincare matrix at k = 0 with the discrete closures applied."""
        if "K0" not in self._cache:
            k0 = self.laplace_np_raw()
            a = self.area_functionals()  # (n, N)
            psi = self.equilibrium_densities()  # (n, N)
            # targets: a_i^T (-1/2 + K) = 0  and  (-1/2 + K) psi_j = 0
            g = a.T @ (0.5 * np.eye(k0.shape[0]) - k0)  # (N, n)
            d = (0.5 * np.eye(k0.shape[0]) - k0) @ psi  # (n, N)
            ata_inv = np.linalg.inv(a.T @ a)
            left = a @ ata_inv @ g
            resid = d - a @ ata_inv @ (g @ psi)
            delta = left + resid @ np.linalg.inv(psi.T @ psi) @ psi.T
            self._cache["K0"] = k0 + delta
        return self._cache["K0"]

    def expansion_k2_raw(self) -> np.ndarray:
        """Kernel (x-y).nu_x / (8 pi |x-y|) with the shared smooth rule."""
        if "K2_raw" not in self._cache:
            mesh = self.mesh

            def kern(d, rows):
                r = np.linalg.norm(d, axis=-1)
                proj = np.einsum("mpj,mj->mp", d, mesh.normals[rows])
                r = np.where(r == 0.0, 1.0, r)
                return proj / (8.0 * np.pi * r)

            self._cache["K2_raw"] = self._fold(kern)
        return self._cache["K2_raw"]

    def expansion_k2(self) -> np.ndarray:
        """K2 with its boundary closure: a_i^T K2 = -w_i^T S exactly, where w_i
        is the area-weighted boundary average carrying total weight |D_i|."""
        if "K2" not in self._cache:
            mesh = self.mesh
            k2 = self.expansion_k2_raw()
            a = self.area_functionals()
            w = a * (mesh.volumes / a.sum(axis=0))[None, :]
            target = -(w.T @ self.laplace_single_layer())  # (N, n)
            defect = target - a.T @ k2
            ind = (a > 0.0).astype(float)  # per-resonator row indicators
            shift = ind @ np.diag(1.0 / a.sum(axis=0)) @ defect
            self._cache["K2"] = k2 + shift
        return self._cache["K2"]

    def expansion_terms(self) -> dict[str, np.ndarray]:
        """S1, S2, S3 (kernel powers |x-y|^(n-1)) and K2, K3."""
        if "S1" not in self._cache:
            mesh = self.mesh

            def s_power(power, coef):
                def kern(d, rows):
                    r = np.linalg.norm(d, axis=-1)
                    return coef * r**power

                return self._fold(kern)

            self._cache["S1"] = np.broadcast_to(
                -1j / (4.0 * np.pi) * (self.weights.reshape(mesh.n_panels, -1).sum(axis=1)),
                (mesh.n_panels, mesh.n_panels),
            ).copy()
            self._cache["S2"] = s_power(1, 1.0 / (8.0 * np.pi)).astype(complex)
            self._cache["S3"] = s_power(2, 1j / (24.0 * np.pi))

            def k3(d, rows):
                proj = np.einsum("mpj,mj->mp", d, mesh.normals[rows])
                return 1j / (12.0 * np.pi) * proj

            self._cache["K3"] = self._fold(k3)
        return {
            "S1": self._cache["S1"],
            "S2": self._cache["S2"],
            "S3": self._cache["S3"],
            "K2": self.expansion_k2().astype(complex),
            "K3": self._cache["K3"],
        }

    # -- frequency-dependent operators --------------------------------------
    def single_layer(self, k: complex = 0.0) -> np.ndarray:
        if k == 0.0:
            return self.laplace_single_layer()

        def kern(d, rows):
            return helmholtz_smooth(np.linalg.norm(d, axis=-1), k)

        return self.laplace_single_layer() + self._fold(kern)

    def neumann_poincare(self, k: complex = 0.0) -> np.ndarray:
        k0 = self.laplace_np()
        if k == 0.0:
            return k0
        mesh = self.mesh

        def kern(d, rows):
            return helmholtz_smooth_normal(d, mesh.normals[rows][:, None, :], k)

        # carry the K2 closure defect through the k-dependence
        delta2 = self.expansion_k2() - self.expansion_k2_raw()
        return k0 + self._fold(kern) + (k * k) * delta2

    def capacitance_entries(self) -> np.ndarray:
        """C[i, j] = -sum over panels of resonator i of area * psi_j."""
        return -(self.area_functionals().T @ self.equilibrium_densities())


_WORKSPACES: "weakref.WeakKeyDictionary[SurfaceMesh, BemWorkspace]" = weakref.WeakKeyDictionary()


def workspace_for(mesh: SurfaceMesh) -> BemWorkspace:
    try:
        ws = _WORKSPACES.get(mesh)
    except TypeError:  # unhashable fallback, never cached
        return BemWorkspace(mesh)
    if ws is None:
        ws = BemWorkspace(mesh)
        _WORKSPACES[mesh] = ws
    return ws


# ---------------------------------------------------------------------------
# public assembly wrappers


def assemble_single_layer(mesh: SurfaceMesh, k: complex = 0.0) -> DenseOperator:
    """Collocation single-layer matrix; exact panel integrals at k = 0 plus a
    smooth-kernel correction for k != 0."""
    entries = workspace_for(mesh).single_layer(k)
    return DenseOperator(entries, "single_layer", k)


def assemble_neumann_poincare(mesh: SurfaceMesh, k: complex = 0.0) -> DenseOperator:
    """Collocation Neumann-Poincare matrix with the discrete closures."""
    entries = workspace_for(mesh).neumann_poincare(k).astype(complex)
    return DenseOperator(entries, "neumann_poincare", k)


def assemble_expansion_terms(mesh: SurfaceMesh, orders=("S1", "S2", "S3", "K2", "K3")):
    """Low-frequency expansion operators; unknown order names raise."""
    known = {"S1", "S2", "S3", "K2", "K3"}
    bad = set(orders) - known
    if bad:
        raise ValueError(f"unsupported expansion orders: {sorted(bad)}")
    terms = workspace_for(mesh).expansion_terms()
    return {
        name: DenseOperator(terms[name], f"expansion:{name}") for name in orders
    }


# -- quasi-periodic (3D lattice) --------------------------------------------


class QuasiStaticAssembler:
    """Static (k = 0) quasi-periodic single-layer assembly with cached
    geometry factors.

    The image-sum part of the lattice correction depends on the momentum
    only through one phase per image, and the plane-wave part only through
    per-node phases, so everything distance-dependent is folded into panel
    columns once; each momentum then costs one small GEMM plus a phased sum
    over cached image matrices.
    """

    def __init__(self, mesh: SurfaceMesh, lattice: Lattice, tol: float = 1e-10):
        self.mesh = mesh
        self.lattice = lattice
        self.ewald = Ewald3D(lattice, tol=tol)
        ws = workspace_for(mesh)
        self.ws = ws
        n = mesh.n_panels
        d_max = float(
            np.linalg.norm(
                mesh.centroids[:, None, :] - mesh.centroids[None, :, :], axis=2
            ).max()
        )
        images = self.ewald._image_points(d_max)
        images = images[np.linalg.norm(images, axis=1) > 0]
        self.images = images
        q = self.n_nodes = ws.n_nodes_per_panel
        # fold the screened radial profile for every image and for m = 0
        self._image_mats = np.empty((images.shape[0], n, n))
        m0 = np.empty((n, n))
        for start in range(0, n, _ROW_CHUNK):
            stop = min(start + _ROW_CHUNK, n)
            d = mesh.centroids[start:stop, None, :] - ws.nodes[None, :, :]
            r0 = np.linalg.norm(d, axis=2)
            vals = self.ewald._m0_smooth(r0, 0.0).real * ws.weights[None, :]
            m0[start:stop] = vals.reshape(stop - start, n, q).sum(axis=2)
            for b, img in enumerate(images):
                rr = np.linalg.norm(d - img[None, None, :], axis=2)
                vals = self.ewald._psi(rr, 0.0) * ws.weights[None, :]
                self._image_mats[b, start:stop] = vals.reshape(stop - start, n, q).sum(
                    axis=2
                )
        self._m0_mat = m0
        # fixed dual grid covering the zone plus the Gaussian window
        E = self.ewald.splitting
        q_cut = np.sqrt(4.0 * E * E * np.log(1.0 / tol))
        alpha_max = np.pi * np.sqrt(3.0) / lattice.cell_volume ** (1.0 / 3.0)
        lengths = np.linalg.norm(lattice.duals, axis=1)
        order = int(np.ceil((q_cut + alpha_max) / lengths.min())) + 1
        self._qgrid = lattice.dual_points(order)
        self._node_phases = np.exp(-1j * ws.nodes @ self._qgrid.T)  # (nq, Q)
        self._obs_phases = np.exp(1j * mesh.centroids @ self._qgrid.T)  # (n, Q)

    def single_layer(self, alpha) -> np.ndarray:
        alpha = np.asarray(alpha, dtype=float)
        if np.linalg.norm(alpha) < 1e-12:
            raise ValueError("Gamma point is rejected: the static quasi kernel is singular")
        mesh, ws = self.mesh, self.ws
        n = mesh.n_panels
        E = self.ewald.splitting
        phases = np.exp(1j * self.images @ alpha)
        entries = ws.laplace_single_layer().astype(complex)
        entries += self._m0_mat
        entries -= np.einsum("b,bij->ij", phases, self._image_mats)
        w = self._qgrid + alpha[None, :]
        w2 = np.einsum("qi,qi->q", w, w)
        coef = -np.exp(-w2 / (4.0 * E * E)) / (w2 * self.lattice.cell_volume)
        u = self._obs_phases * np.exp(1j * mesh.centroids @ alpha)[:, None]
        v = (self._node_phases * np.exp(-1j * ws.nodes @ alpha)[:, None]) * ws.weights[
            :, None
        ]
        spec = (u * coef[None, :]) @ v.T
        entries += spec.reshape(n, n, self.n_nodes).sum(axis=2)
        return entries


_QUASI_ASSEMBLERS: "weakref.WeakKeyDictionary[SurfaceMesh, dict]" = weakref.WeakKeyDictionary()


def quasi_assembler_for(mesh: SurfaceMesh, lattice: Lattice, tol: float = 1e-10) -> QuasiStaticAssembler:
    per_mesh = _QUASI_ASSEMBLERS.get(mesh)
    if per_mesh is None:
        per_mesh = {}
        _QUASI_ASSEMBLERS[mesh] = per_mesh
    key = (lattice.vectors.tobytes(), tol)
    if key not in per_mesh:
        per_mesh[key] = QuasiStaticAssembler(mesh, lattice, tol)
    return per_mesh[key]


def _spectral_matrix(ws: BemWorkspace, wvecs: np.ndarray, coef: np.ndarray) -> np.ndarray:
    """Separable plane-wave part folded into panel columns (rank-Q GEMM)."""
    mesh = ws.mesh
    u = np.exp(1j * mesh.centroids @ wvecs.T)  # (n, Q)
    v = np.exp(-1j * ws.nodes @ wvecs.T) * ws.weights[:, None]  # (nq, Q)
    mat = (u * coef[None, :]) @ v.T
    return mat.reshape(mesh.n_panels, mesh.n_panels, ws.n_nodes_per_panel).sum(axis=2)


def _spectral_matrix_gradient(ws: BemWorkspace, wvecs, coef) -> np.ndarray:
    mesh = ws.mesh
    u = np.exp(1j * mesh.centroids @ wvecs.T)
    proj = mesh.normals @ wvecs.T  # (n, Q)
    v = np.exp(-1j * ws.nodes @ wvecs.T) * ws.weights[:, None]
    mat = (1j * u * proj * coef[None, :]) @ v.T
    return mat.reshape(mesh.n_panels, mesh.n_panels, ws.n_nodes_per_panel).sum(axis=2)


def assemble_quasi_single_layer(
    mesh: SurfaceMesh, lattice: Lattice, alpha, k: complex = 0.0, ewald: Ewald3D | None = None
) -> DenseOperator:
    """Single layer for the lattice quasi-periodic kernel (alpha != 0 at k=0)."""
    alpha = np.asarray(alpha, dtype=float)
    if k == 0.0 and np.linalg.norm(alpha) == 0.0:
        raise ValueError("Gamma point is rejected: the static quasi kernel is singular")
    if k == 0.0:
        entries = quasi_assembler_for(mesh, lattice).single_layer(alpha)
        return DenseOperator(entries, "quasi_single_layer", 0.0)
    ew = ewald or Ewald3D(lattice)
    ws = workspace_for(mesh)

    def kern(d, rows):
        shape = d.shape[:2]
        flat = d.reshape(-1, 3)
        vals = ew.real_correction(flat, alpha, k)
        if k != 0.0:
            vals = vals + helmholtz_smooth(np.linalg.norm(flat, axis=-1), k)
        return vals.reshape(shape)

    entries = ws.laplace_single_layer().astype(complex)
    entries += ws._fold(kern)
    w, coef = ew.spectral_terms(alpha, k)
    entries += _spectral_matrix(ws, w, coef)
    return DenseOperator(entries, "quasi_single_layer", k)


def assemble_quasi_neumann_poincare(
    mesh: SurfaceMesh, lattice: Lattice, alpha, k: complex = 0.0, ewald: Ewald3D | None = None
) -> DenseOperator:
    """Matrix of the observation-side normal derivative of the quasi kernel."""
    alpha = np.asarray(alpha, dtype=float)
    ew = ewald or Ewald3D(lattice)
    ws = workspace_for(mesh)
    mesh_normals = mesh.normals

    # the free-space part (including its full k dependence) comes from the
    # workspace operator; the fold below adds only the lattice-image part
    def kern(d, rows):
        shape = d.shape[:2]
        flat = d.reshape(-1, 3)
        grads = ew.real_correction_gradient(flat, alpha, k)
        vals = np.einsum(
            "pj,pj->p", grads.reshape(-1, 3), np.repeat(mesh_normals[rows], shape[1], axis=0)
        )
        return vals.reshape(shape)

    entries = ws.neumann_poincare(k).astype(complex)
    entries = entries + ws._fold(kern)
    w, coef = ew.spectral_terms(alpha, k)
    entries += _spectral_matrix_gradient(ws, w, coef)
    return DenseOperator(entries, "quasi_neumann_poincare", k)


# -- one-dimensional chain ----------------------------------------------------


def assemble_chain_single_layer(
    mesh: SurfaceMesh, period: float, alpha: float, k: complex = 0.0, tol: float = 1e-10
) -> DenseOperator:
    ws = workspace_for(mesh)

    def kern(d, rows):
        shape = d.shape[:2]
        vals = chain_correction(d.reshape(-1, 3), alpha, period, k, tol)
        if k != 0.0:
            vals = vals + helmholtz_smooth(
                np.linalg.norm(d.reshape(-1, 3), axis=-1), k
            )
        return vals.reshape(shape)

    entries = ws.laplace_single_layer().astype(complex) + ws._fold(kern)
    return DenseOperator(entries, "chain_single_layer", k)


def assemble_chain_neumann_poincare(
    mesh: SurfaceMesh, period: float, alpha: float, k: complex = 0.0, tol: float = 1e-10
) -> DenseOperator:
    ws = workspace_for(mesh)
    normals = mesh.normals

    # free-space part (with its k dependence) from the workspace operator,
    # lattice-image part from the chain correction alone
    def kern(d, rows):
        shape = d.shape[:2]
        grads = chain_correction_gradient(d.reshape(-1, 3), alpha, period, k, tol)
        return np.einsum(
            "pj,pj->p", grads, np.repeat(normals[rows], shape[1], axis=0)
        ).reshape(shape)

    entries = ws.neumann_poincare(k).astype(complex)
    entries = entries + ws._fold(kern)
    return DenseOperator(entries, "chain_neumann_poincare", k)


# -- two-dimensional (honeycomb cross-section) --------------------------------


class PlaneWorkspace:
    """Panel data for 2D curve meshes (segment panels, midpoint collocation)."""

    def __init__(self, mesh: PlaneMesh, order: int = 4):
        self.mesh = mesh
        a, b = mesh.panel_endpoints()
        self.seg_a = a
        self.seg_b = b
        nodes, weights = segment_rule(a, b, mesh.lengths, order)
        self.nodes = nodes.reshape(-1, 2)
        self.weights = weights.reshape(-1)
        self.n_nodes_per_panel = nodes.shape[1]
        self._log_matrix: np.ndarray | None = None

    def log_single_layer(self) -> np.ndarray:
        if self._log_matrix is None:
            vals = segment_log_integral(self.mesh.midpoints, self.seg_a, self.seg_b)
            self._log_matrix = vals / (2.0 * np.pi)
        return self._log_matrix


_PLANE_WORKSPACES: "weakref.WeakKeyDictionary[PlaneMesh, PlaneWorkspace]" = (
    weakref.WeakKeyDictionary()
)


def plane_workspace_for(mesh: PlaneMesh) -> PlaneWorkspace:
    ws = _PLANE_WORKSPACES.get(mesh)
    if ws is None:
        ws = PlaneWorkspace(mesh)
        _PLANE_WORKSPACES[mesh] = ws
    return ws


def assemble_plane_quasi_single_layer(
    mesh: PlaneMesh, lattice: Lattice, alpha, ewald: Ewald2D | None = None
) -> DenseOperator:
    """2D quasi-periodic single layer (log kernel plus smooth lattice part)."""
    alpha = np.asarray(alpha, dtype=float)
    if np.linalg.norm(alpha) == 0.0:
        raise ValueError("Gamma point is rejected for the 2D quasi kernel")
    ew = ewald or Ewald2D(lattice)
    ws = plane_workspace_for(mesh)
    n = mesh.n_panels
    entries = ws.log_single_layer().astype(complex)
    d = mesh.midpoints[:, None, :] - ws.nodes[None, :, :]
    vals = ew.real_correction(d.reshape(-1, 2), alpha).reshape(n, -1) * ws.weights[None, :]
    entries += vals.reshape(n, n, ws.n_nodes_per_panel).sum(axis=2)
    w, coef = ew.spectral_terms(alpha)
    u = np.exp(1j * mesh.midpoints @ w.T)
    v = np.exp(-1j * ws.nodes @ w.T) * ws.weights[:, None]
    spec = (u * coef[None, :]) @ v.T
    entries += spec.reshape(n, n, ws.n_nodes_per_panel).sum(axis=2)
    return DenseOperator(entries, "plane_quasi_single_layer", 0.0)
