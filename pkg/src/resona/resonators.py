"""Finite resonator systems: capacitance matrix, subwavelength resonances,
modal decompositions, point-scatterer coefficients and nonlinear
characteristic-value refinement.

The leading-order machinery is linear algebra on the volume-weighted
capacitance matrix; the refinement step drives the full boundary-integral
block system to a singular point with Muller iteration.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from .geometry import MaterialParams, SurfaceMesh
from .operators import BemWorkspace, solve_with_cond_check, workspace_for

__all__ = [
    "CapacitanceMatrix",
    "ResonanceSet",
    "solve_equilibrium_densities",
    "capacitance_matrix",
    "resonances_leading_order",
    "scattering_coefficient",
    "modal_coefficients",
    "dimer_point_scatterer",
    "dipole_weight",
    "block_operator",
    "refine_characteristic_value",
    "muller",
    "contrast_params",
]


def contrast_params(delta: float, v: float = 1.0, v_b: float = 1.0) -> MaterialParams:
    """Material constants with prescribed contrast and wave speeds."""
    return MaterialParams(rho=1.0, kappa=v * v, rho_b=delta, kappa_b=v_b * v_b * delta)


@dataclass(frozen=True, eq=False)
class CapacitanceMatrix:
    """Capacitance matrix with resonator volumes and the weighted variant."""

    C: np.ndarray
    volumes: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.C, dtype=float)
        v = np.asarray(self.volumes, dtype=float)
        if c.shape != (v.size, v.size):
            raise ValueError("capacitance matrix shape must match volume count")
        object.__setattr__(self, "C", c)
        object.__setattr__(self, "volumes", v)

    @property
    def n(self) -> int:
        return self.volumes.size

    @property
    def weighted(self) -> np.ndarray:
        """Rows scaled by inverse resonator volumes."""
        return self.C / self.volumes[:, None]

    def validate(self, tol: float = 5e-3) -> None:
        """Sign pattern and symmetry checks; raises on violation."""
        c = self.C
        scale = np.abs(c).max()
        if np.any(np.diag(c) <= 0.0):
            raise ValueError("capacitance diagonal must be positive")
        off = c[~np.eye(self.n, dtype=bool)]
        if off.size and np.any(off > 1e-10 * scale):
            raise ValueError("off-diagonal capacitance entries must be non-positive")
        if np.abs(c - c.T).max() > tol * scale:
            raise ValueError("capacitance matrix is not symmetric within tolerance")
        if np.any(c.sum(axis=1) < -1e-8 * scale):
            raise ValueError("capacitance row sums must be non-negative")


@dataclass(frozen=True)
class ResonanceSet:
    """Subwavelength modes sorted by ascending real frequency.

    Frequencies have non-positive imaginary parts; `lambdas` are eigenvalues
    of the weighted capacitance matrix, `vectors` its eigenvectors (columns),
    `taus` the radiative damping rates and `nus` the row sums of the inverse
    eigenvector matrix (None if the eigenvector matrix is defective).
    """

    omegas: np.ndarray
    lambdas: np.ndarray
    vectors: np.ndarray
    taus: np.ndarray
    nus: np.ndarray | None
    multiplicity: np.ndarray
    volumes: np.ndarray = field(repr=False, default=None)

    def __post_init__(self):
        if np.any(self.omegas.real <= 0.0):
            raise ValueError("subwavelength modes must have positive real part")
        if np.any(self.omegas.imag > 1e-14 * np.abs(self.omegas.real)):
            raise ValueError("mode imaginary parts must be non-positive")

    @property
    def n(self) -> int:
        return self.omegas.size


def solve_equilibrium_densities(mesh: SurfaceMesh) -> np.ndarray:
    """Panel densities psi[:, j] with S psi_j = indicator of resonator j."""
    return workspace_for(mesh).equilibrium_densities()


def capacitance_matrix(mesh: SurfaceMesh) -> CapacitanceMatrix:
    """C[i, j] = -(integral over boundary i) of the j-th equilibrium density."""
    ws = workspace_for(mesh)
    return CapacitanceMatrix(ws.capacitance_entries(), mesh.volumes)


def _eig_weighted(cap: CapacitanceMatrix):
    """Real eigenpairs of the weighted capacitance matrix, ascending."""
    cvol = cap.weighted
    same_volume = np.allclose(cap.volumes, cap.volumes[0], rtol=1e-12)
    if same_volume:
        lam, vec = np.linalg.eigh(0.5 * (cvol + cvol.T))
    else:
        lam_c, vec_c = np.linalg.eig(cvol)
        if np.abs(lam_c.imag).max(initial=0.0) > 1e-8 * np.abs(lam_c.real).max():
            raise ValueError("weighted capacitance has non-real eigenvalues")
        order = np.argsort(lam_c.real)
        lam = lam_c.real[order]
        vec = np.real_if_close(vec_c[:, order], tol=1e6)
        if np.iscomplexobj(vec):
            vec = vec.real
    return lam, vec


def resonances_leading_order(
    cap: CapacitanceMatrix, params: MaterialParams
) -> ResonanceSet:
    """Leading-order resonances with radiative corrections.

    Real parts come from eigenvalues of the weighted capacitance matrix,
    imaginary parts from the quadratic-form damping rate.  Degenerate
    eigenvalue groups are orthogonalized before the damping rates are
    evaluated and carry a multiplicity tag.
    """
    lam, vec = _eig_weighted(cap)
    n = cap.n
    delta, v, v_b = params.delta, params.v, params.v_b
    if np.any(lam <= 0.0):
        raise ValueError("weighted capacitance eigenvalues must be positive")

    # group degenerate eigenvalues and orthogonalize inside each group
    mult = np.ones(n, dtype=int)
    scale = np.abs(lam).max()
    groups = []
    start = 0
    for i in range(1, n + 1):
        if i == n or abs(lam[i] - lam[start]) > 1e-8 * scale:
            groups.append((start, i))
            start = i
    for s, e in groups:
        if e - s > 1:
            q, _ = np.linalg.qr(vec[:, s:e])
            vec[:, s:e] = q
            mult[s:e] = e - s

    c = cap.C
    j_ones = np.ones((n, n))
    taus = np.empty(n)
    for i in range(n):
        vv = vec[:, i]
        num = vv @ (c @ (j_ones @ (c @ vv)))
        den = np.sum(cap.volumes * vv * vv)
        taus[i] = (v_b**2 / (8.0 * np.pi * v)) * num / den
    taus = np.maximum(taus, 0.0)

    nus: np.ndarray | None
    if np.linalg.cond(vec) > 1e12:
        warnings.warn(
            "eigenvector matrix is numerically defective: modal weights skipped",
            RuntimeWarning,
            stacklevel=2,
        )
        nus = None
    else:
        nus = np.linalg.solve(vec, np.ones(n))

    omegas = np.sqrt(v_b**2 * lam * delta) - 1j * taus * delta
    order = np.argsort(omegas.real)
    return ResonanceSet(
        omegas=omegas[order],
        lambdas=lam[order],
        vectors=vec[:, order],
        taus=taus[order],
        nus=None if nus is None else nus[order],
        multiplicity=mult[order],
        volumes=cap.volumes,
    )


def scattering_coefficient(omega: complex, mesh: SurfaceMesh, params: MaterialParams) -> complex:
    """Monopole scattering strength of a single resonator near its resonance."""
    if mesh.n_resonators != 1:
        raise ValueError("scattering coefficient is defined for a single resonator")
    if omega == 0.0:
        raise ValueError("omega must be nonzero")
    cap = capacitance_matrix(mesh).C[0, 0]
    vol = mesh.volumes[0]
    delta, v, v_b = params.delta, params.v, params.v_b
    omega_m = math.sqrt(delta * cap / vol) * v_b
    gamma = (v + v_b) * cap * omega / (8.0 * np.pi * v * v_b) - (
        (v - v_b) / v
    ) * v_b * cap**2 * delta / (8.0 * np.pi * vol * omega)
    return cap / (1.0 - (omega_m / omega) ** 2 + 1j * gamma)


def modal_coefficients(omega: complex, amplitude: complex, resonances: ResonanceSet) -> np.ndarray:
    """Scattered-field mode amplitudes a_n = -A nu_n Re(omega_n)^2 / (omega^2 - omega_n^2)."""
    if resonances.nus is None:
        raise ValueError("modal weights unavailable (defective eigenvector matrix)")
    om = resonances.omegas
    denom = omega**2 - om**2
    if np.any(np.abs(denom) == 0.0):
        raise ZeroDivisionError("omega coincides with a resonance pole")
    return -amplitude * resonances.nus * om.real**2 / denom


def _check_symmetric_dimer(mesh: SurfaceMesh, tol: float = 1e-9) -> None:
    if mesh.n_resonators != 2:
        raise ValueError("expected a two-resonator mesh")
    c0, _ = mesh.bounding_sphere(0)
    c1, _ = mesh.bounding_sphere(1)
    scale = np.linalg.norm(c0 - c1)
    if np.linalg.norm(c0 + c1) > tol * scale:
        raise ValueError("dimer is not symmetric about the origin")
    axis = (c1 - c0) / scale
    if abs(abs(axis[0]) - 1.0) > 1e-9:
        raise ValueError("dimer axis must lie on the first coordinate axis")
    # panel-for-panel point symmetry
    sort0 = np.lexsort(np.round(mesh.centroids, 9).T)
    sortr = np.lexsort(np.round(-mesh.centroids, 9).T)
    if not np.allclose(
        mesh.centroids[sort0], -mesh.centroids[sortr], atol=tol * scale
    ):
        raise ValueError("dimer mesh is not point symmetric")


def dipole_weight(mesh: SurfaceMesh) -> float:
    """First-moment weight of the density difference of a symmetric dimer.

    Positive when resonator 0 sits on the negative axis side; flips sign
    under a label swap.
    """
    _check_symmetric_dimer(mesh)
    psi = solve_equilibrium_densities(mesh)
    w = mesh.areas * mesh.centroids[:, 0]
    return float(w @ (psi[:, 0] - psi[:, 1]))


def dimer_point_scatterer(
    mesh: SurfaceMesh, omega: complex, params: MaterialParams
) -> tuple[complex, np.ndarray]:
    """Monopole coefficient and 3x3 dipole matrix of a symmetric dimer."""
    _check_symmetric_dimer(mesh)
    cap = capacitance_matrix(mesh)
    res = resonances_leading_order(cap, params)
    omega1, omega2 = res.omegas.real[0], res.omegas.real[1]
    c_total = cap.C.sum()
    g0 = c_total / (1.0 - omega1**2 / omega**2)

    ws = workspace_for(mesh)
    coords = mesh.centroids  # collocation values of the coordinate functions
    xi = solve_with_cond_check(ws.laplace_single_layer(), coords, "static single layer")
    static = np.einsum("pi,p,pj->ij", xi, mesh.areas, coords)

    p_weight = dipole_weight(mesh)
    delta, v_b = params.delta, params.v_b
    vol = mesh.volumes.sum()
    g1 = static.astype(complex)
    g1[0, 0] -= delta * v_b**2 * p_weight**2 / (
        omega**2 * vol * (1.0 - omega2**2 / omega**2)
    )
    return complex(g0), g1


# ---------------------------------------------------------------------------
# nonlinear refinement


def muller(f, z0: complex, z1: complex, z2: complex, tol: float = 1e-13, maxiter: int = 60):
    """Muller's method for a scalar analytic function; returns (root, |f|)."""
    x0, x1, x2 = z0, z1, z2
    f0, f1, f2 = f(x0), f(x1), f(x2)
    for _ in range(maxiter):
        h1 = x1 - x0
        h2 = x2 - x1
        if h1 == 0 or h2 == 0:
            break
        d1 = (f1 - f0) / h1
        d2 = (f2 - f1) / h2
        a = (d2 - d1) / (h2 + h1)
        b = a * h2 + d2
        disc = np.sqrt(b * b - 4.0 * f2 * a)
        den = b + disc if abs(b + disc) > abs(b - disc) else b - disc
        if den == 0:
            break
        step = -2.0 * f2 / den
        x0, x1, x2 = x1, x2, x2 + step
        f0, f1, f2 = f1, f2, f(x2)
        if abs(step) < tol * max(1.0, abs(x2)):
            break
    return x2, abs(f2)


def block_operator(
    mesh: SurfaceMesh, omega: complex, params: MaterialParams, workspace: BemWorkspace | None = None
) -> np.ndarray:
    """Full boundary-integral block system at frequency omega."""
    ws = workspace or workspace_for(mesh)
    k, k_b = params.wavenumbers(omega)
    n = mesh.n_panels
    eye = np.eye(n)
    s_b = ws.single_layer(k_b)
    s_o = ws.single_layer(k)
    k_bm = ws.neumann_poincare(k_b)
    k_om = ws.neumann_poincare(k)
    top = np.hstack([s_b, -s_o])
    bot = np.hstack([-0.5 * eye + k_bm, -params.delta * (0.5 * eye + k_om)])
    return np.vstack([top, bot]).astype(complex)


def refine_characteristic_value(
    assemble,
    omega_guess: complex,
    search_radius: float | None = None,
    residual_tol: float = 1e-8,
    maxiter: int = 60,
    seed: int = 7,
):
    """Drive a matrix pencil to a singular point near omega_guess.

    ``assemble(omega)`` returns the dense pencil matrix.  Muller iteration
    runs on the reciprocal of a random resolvent sample (analytic with zeros
    exactly at the characteristic values; no determinant is formed), and the
    converged point is certified by the smallest singular value of the
    assembled pencil: sigma_min < residual_tol * ||A||.
    """
    a0 = assemble(omega_guess)
    n = a0.shape[0]
    rng = np.random.default_rng(seed)
    w = rng.normal(size=n) + 1j * rng.normal(size=n)
    b = rng.normal(size=n) + 1j * rng.normal(size=n)
    w /= np.linalg.norm(w)
    b /= np.linalg.norm(b)

    def g(omega: complex) -> complex:
        a = assemble(omega) if omega != omega_guess else a0
        x = linalg.lu_solve(linalg.lu_factor(a), b)
        return 1.0 / (w @ x)

    radius = search_radius if search_radius is not None else 0.5 * abs(omega_guess)
    h = 0.01 * abs(omega_guess)
    root, _ = muller(g, omega_guess - h, omega_guess + h, omega_guess, maxiter=maxiter)
    if abs(root - omega_guess) > radius:
        raise RuntimeError("characteristic value escaped the search disc")
    a_root = assemble(root)
    sigma = linalg.svdvals(a_root)
    rel_resid = sigma[-1] / sigma[0]
    if rel_resid > residual_tol:
        raise RuntimeError(
            f"no convergence: relative sigma_min {rel_resid:.2e} above {residual_tol:.0e}"
        )
    return root, rel_resid


def refine_resonance(
    mesh: SurfaceMesh,
    params: MaterialParams,
    omega_guess: complex,
    **kwargs,
):
    """Muller refinement of a finite-system resonance from a leading-order guess."""
    ws = workspace_for(mesh)

    def assemble(omega: complex) -> np.ndarray:
        return block_operator(mesh, omega, params, ws)

    return refine_characteristic_value(assemble, omega_guess, **kwargs)
