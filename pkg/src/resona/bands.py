"""Square-lattice band machinery and honeycomb Dirac-cone analysis.

Everything here works at leading order in the contrast: band values are
monotone images of the quasi-periodic capacity, the band-edge curvature
comes from second differences of that capacity, and the honeycomb pair
reduces to a 2x2 Hermitian capacitance matrix whose eigenvalue splitting
is fitted linearly around the Dirac point.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .geometry import Lattice, PlaneMesh, SurfaceMesh
from .kernels import Ewald2D, Ewald3D
from .operators import (
    assemble_plane_quasi_single_layer,
    assemble_quasi_single_layer,
    plane_workspace_for,
    solve_with_cond_check,
)

__all__ = [
    "QuasiMomentum",
    "BandTable",
    "HomogenizedTensor",
    "DiracFit",
    "CUBIC_VERTICES",
    "brillouin_path",
    "quasi_capacitance",
    "band_omega1",
    "band_sweep",
    "homogenized_tensor",
    "dispersion_check_above_gap",
    "dirac_point",
    "honeycomb_capacitance",
    "dirac_fit",
    "bloch_mode_eval",
    "GAMMA_TOL",
]

GAMMA_TOL = 1e-12

# symmetry points of the cubic cell in dual coordinates (cell size 1);
# the corner where the first band peaks is labelled M here
CUBIC_VERTICES = {
    "G": np.array([0.0, 0.0, 0.0]),
    "X": np.array([np.pi, 0.0, 0.0]),
    "M": np.array([np.pi, np.pi, np.pi]),
}


@dataclass(frozen=True)
class QuasiMomentum:
    """Bloch momentum attached to its lattice; reducible to the first zone."""

    alpha: np.ndarray
    lattice: Lattice

    def __post_init__(self):
        object.__setattr__(self, "alpha", np.asarray(self.alpha, dtype=float))

    @property
    def is_gamma(self) -> bool:
        return bool(np.linalg.norm(self.alpha) < GAMMA_TOL)

    def reduced(self) -> "QuasiMomentum":
        return QuasiMomentum(self.lattice.reduce(self.alpha), self.lattice)


def brillouin_path(vertices, n_per_leg: int, offset: float = 1e-3, table=None):
    """Sample points along named Brillouin-zone legs.

    Returns (points, labels).  Each leg contributes ``n_per_leg`` points
    excluding its start; the path start is prepended, giving
    ``len(vertices)-1) * n + 1`` rows.  Points that would coincide with the
    zone center are nudged along the leg by ``offset`` (relative).
    """
    table = CUBIC_VERTICES if table is None else table
    names = list(vertices)
    pts = [np.asarray(table[v], dtype=float) for v in names]
    out = [pts[0]]
    labels = [names[0]]
    for a, b, name in zip(pts[:-1], pts[1:], names[1:]):
        for i in range(1, n_per_leg + 1):
            out.append(a + (b - a) * (i / n_per_leg))
            labels.append(name if i == n_per_leg else "")
    out = np.array(out)
    for i, p in enumerate(out):
        if np.linalg.norm(p) < GAMMA_TOL:
            if i + 1 < len(out):
                direction = out[i + 1] - p
            else:
                direction = p - out[i - 1]
            out[i] = p + offset * direction
    return out, labels


@dataclass(frozen=True)
class BandTable:
    alphas: np.ndarray
    caps: np.ndarray
    omegas: np.ndarray
    labels: list = field(default_factory=list)

    def __len__(self):
        return self.alphas.shape[0]


@dataclass(frozen=True)
class HomogenizedTensor:
    """Band-edge effective tensor with the quadratic-fit residual."""

    matrix: np.ndarray
    residual: float

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        scale = np.abs(m).max()
        if np.abs(m - m.T).max() > 1e-10 * scale:
            raise ValueError("effective tensor must be symmetric")
        if np.linalg.eigvalsh(m).min() < -1e-8 * scale:
            raise ValueError("effective tensor must be positive semi-definite")
        object.__setattr__(self, "matrix", m)


@dataclass(frozen=True)
class DiracFit:
    omega_star: float
    slope: float
    c: complex
    lambda0: float
    r_squared: float
    window: float
    branch_slopes: tuple[float, float]


# ---------------------------------------------------------------------------
# square lattice


def quasi_capacitance(
    mesh: SurfaceMesh, lattice: Lattice, alpha, ewald: Ewald3D | None = None
) -> float:
    """Quasi-periodic capacity -(integral) of the inverse single layer of 1.

    Real by Hermitian symmetry of the kernel; the collocation imaginary
    residue is checked and dropped.
    """
    alpha = np.asarray(alpha, dtype=float)
    if np.linalg.norm(alpha) < GAMMA_TOL:
        raise ValueError("Gamma point is rejected for the quasi-periodic capacity")
    op = assemble_quasi_single_layer(mesh, lattice, alpha, 0.0, ewald)
    chi = np.ones(mesh.n_panels, dtype=complex)
    psi = solve_with_cond_check(op.entries, chi, "quasi single layer")
    val = -(mesh.areas @ psi)
    if abs(val.imag) > 1e-6 * abs(val.real):
        warnings.warn(
            f"quasi capacity imaginary residue {val.imag:.2e} is unexpectedly large",
            RuntimeWarning,
        )
    return float(val.real)


def band_omega1(
    mesh: SurfaceMesh,
    lattice: Lattice,
    alpha,
    delta: float,
    v_b: float = 1.0,
    cap_alpha: float | None = None,
) -> float:
    """First band value omega_M sqrt(cap_alpha / cap) at leading order."""
    cap_a = quasi_capacitance(mesh, lattice, alpha) if cap_alpha is None else cap_alpha
    vol = mesh.volumes.sum()
    return math.sqrt(delta * cap_a / vol) * v_b


def band_sweep(
    mesh: SurfaceMesh,
    lattice: Lattice,
    path_points: np.ndarray,
    delta: float,
    v_b: float = 1.0,
    labels=None,
    n_workers: int = 1,
) -> BandTable:
    """First-band table along a Brillouin path; alpha points run in a
    worker pool but assemble in path order, so results do not depend on the
    worker count."""
    pts = np.atleast_2d(np.asarray(path_points, dtype=float))
    ew = Ewald3D(lattice)

    def one(alpha):
        return quasi_capacitance(mesh, lattice, alpha, ew)

    if n_workers > 1:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            caps = np.array(list(pool.map(one, pts)))
    else:
        caps = np.array([one(a) for a in pts])
    vol = mesh.volumes.sum()
    omegas = np.sqrt(delta * caps / vol) * v_b
    return BandTable(pts, caps, omegas, list(labels) if labels else [""] * len(pts))


def homogenized_tensor(
    mesh: SurfaceMesh,
    lattice: Lattice,
    alpha_star,
    h: float = 0.2,
    v_b: float = 1.0,
    max_halvings: int = 3,
    residual_threshold: float = 0.05,
) -> HomogenizedTensor:
    """Band-edge curvature tensor from second differences of the capacity.

    The step is halved until consecutive estimates agree, then the
    pure-quadratic fit residual over the two-step samples is reported.
    Raises if the residual stays above ``residual_threshold`` of the
    quadratic part (the expansion would not be quadratic there).
    """
    alpha_star = np.asarray(alpha_star, dtype=float)
    ew = Ewald3D(lattice)
    cap0 = quasi_capacitance(mesh, lattice, alpha_star, ew)
    vol = mesh.volumes.sum()
    dirs = [np.eye(3)[i] for i in range(3)] + [
        (np.eye(3)[i] + np.eye(3)[j]) for i in range(3) for j in range(i + 1, 3)
    ]

    def curvature(step):
        # quadratic coefficient of cap along each probe direction
        # (half the second central difference)
        out = {}
        for d in dirs:
            cp = quasi_capacitance(mesh, lattice, alpha_star + step * d, ew)
            cm = quasi_capacitance(mesh, lattice, alpha_star - step * d, ew)
            out[tuple(d)] = 0.5 * (cp - 2.0 * cap0 + cm) / (step * step)
        return out

    prev = curvature(h)
    step = h
    for _ in range(max_halvings):
        step /= 2.0
        cur = curvature(step)
        diffs = max(abs(prev[k] - cur[k]) for k in cur)
        scale = max(abs(v) for v in cur.values())
        prev = cur
        if diffs < 0.02 * scale:
            break
    lam_dir = prev

    def lam_of(d):
        return -(v_b**2 / vol) * lam_dir[tuple(d)]

    lam = np.zeros((3, 3))
    for i in range(3):
        lam[i, i] = lam_of(np.eye(3)[i])
    for i in range(3):
        for j in range(i + 1, 3):
            lam[i, j] = lam[j, i] = 0.5 * (
                lam_of(np.eye(3)[i] + np.eye(3)[j]) - lam[i, i] - lam[j, j]
            )

    # pure-quadratic fit residual along the axes over two step sizes
    resid = 0.0
    quad_scale = max(abs(v) for v in lam_dir.values()) * step * step
    for d in (np.eye(3)[0], np.eye(3)[1], np.eye(3)[2]):
        a_coef = lam_dir[tuple(d)]
        for s in (step, step / 2.0):
            cp = quasi_capacitance(mesh, lattice, alpha_star + s * d, ew)
            resid = max(resid, abs(cp - cap0 - a_coef * s * s))
    if resid > residual_threshold * quad_scale:
        raise RuntimeError(
            f"capacity is not quadratic at this step: residual {resid:.2e} "
            f"vs quadratic scale {quad_scale:.2e}"
        )
    return HomogenizedTensor(lam, resid)


def dispersion_check_above_gap(
    tensor: HomogenizedTensor, omega: float, omega_star: float, delta: float
):
    """Classify a frequency near the band edge as propagating or evanescent.

    Returns (classification, envelope_wavenumber) where the wavenumber is
    that of the isotropic-average envelope for propagating frequencies and
    None otherwise.
    """
    beta = (omega_star**2 - omega**2) / delta
    lam_mean = float(np.trace(tensor.matrix) / 3.0)
    if beta > 0.0:
        mag = math.sqrt(beta / lam_mean) if lam_mean > 0 else math.inf
        return "propagating", mag
    if beta == 0.0:
        return "propagating", 0.0
    return "evanescent", None


# ---------------------------------------------------------------------------
# honeycomb


def dirac_point(lattice: Lattice) -> np.ndarray:
    """Zone-corner momentum (2 a1 + a2)/3 of the honeycomb dual lattice."""
    duals = lattice.duals
    return (2.0 * duals[0] + duals[1]) / 3.0


def _check_honeycomb_symmetry(mesh: PlaneMesh, lattice: Lattice, tol: float = 1e-9) -> None:
    if mesh.n_resonators != 2:
        raise ValueError("honeycomb cell must hold exactly two resonators")
    x0 = (lattice.vectors[0] + lattice.vectors[1]) / 2.0
    mid = mesh.midpoints
    scale = np.abs(mid).max()
    sel0 = mesh.resonator_id == 0
    sel1 = mesh.resonator_id == 1
    reflected = 2.0 * x0 - mid[sel0]
    a = reflected[np.lexsort(np.round(reflected, 9).T)]
    b = mid[sel1][np.lexsort(np.round(mid[sel1], 9).T)]
    if not np.allclose(a, b, atol=tol * scale):
        raise ValueError("honeycomb pair is not point symmetric about the cell center")
    # three-fold rotation about the first site must preserve the first disk
    x1 = (lattice.vectors[0] + lattice.vectors[1]) / 3.0
    ang = -2.0 * np.pi / 3.0
    rot = np.array([[np.cos(ang), -np.sin(ang)], [np.sin(ang), np.cos(ang)]])
    rotated = (mid[sel0] - x1) @ rot.T + x1
    a = rotated[np.lexsort(np.round(rotated, 9).T)]
    b = mid[sel0][np.lexsort(np.round(mid[sel0], 9).T)]
    if not np.allclose(a, b, atol=tol * scale):
        raise ValueError("first honeycomb resonator lacks three-fold site symmetry")


def honeycomb_capacitance(
    mesh: PlaneMesh, lattice: Lattice, alpha, ewald: Ewald2D | None = None
) -> np.ndarray:
    """2x2 Hermitian quasi-periodic capacitance of the honeycomb pair."""
    alpha = np.asarray(alpha, dtype=float)
    _check_honeycomb_symmetry(mesh, lattice)
    op = assemble_plane_quasi_single_layer(mesh, lattice, alpha, ewald)
    chi = np.zeros((mesh.n_panels, 2), dtype=complex)
    for j in range(2):
        chi[mesh.resonator_id == j, j] = 1.0
    psi = solve_with_cond_check(op.entries, chi, "2D quasi single layer")
    weights = np.zeros((2, mesh.n_panels))
    for i in range(2):
        weights[i, mesh.resonator_id == i] = mesh.lengths[mesh.resonator_id == i]
    c = -(weights @ psi)
    herm = np.abs(c - c.conj().T).max()
    if herm > 1e-6 * np.abs(c).max():
        warnings.warn(f"honeycomb capacitance deviates from Hermitian by {herm:.2e}", RuntimeWarning)
    return c


def _honeycomb_bands(mesh, lattice, alpha, delta, v_b, ewald):
    c = honeycomb_capacitance(mesh, lattice, alpha, ewald)
    c1 = c[0, 0].real
    c2 = abs(c[0, 1])
    area = mesh.areas[0]
    lam = np.array([c1 - c2, c1 + c2])
    return np.sqrt(delta * lam / area) * v_b


def dirac_fit(
    mesh: PlaneMesh,
    lattice: Lattice,
    delta: float,
    v_b: float = 1.0,
    window: float | None = None,
    n_samples: int = 4,
    min_r_squared: float = 0.99,
) -> DiracFit:
    """Fit the conical splitting of the first two bands at the zone corner.

    The fit radius shrinks until the two-branch linear model reaches the
    requested R^2.  Raises if the branches fail to meet at the corner.
    """
    _check_honeycomb_symmetry(mesh, lattice)
    ew = Ewald2D(lattice)
    a_star = dirac_point(lattice)
    c_star = honeycomb_capacitance(mesh, lattice, a_star, ew)
    c1 = c_star[0, 0].real
    if abs(c_star[0, 1]) > 1e-6 * c1:
        raise RuntimeError("Dirac cone not resolved: bands stay split at the corner")
    area = mesh.areas[0]
    omega_star = math.sqrt(delta * c1 / area) * v_b
    lambda0 = 0.5 * math.sqrt(v_b**2 / (area * c1))

    # difference quotient of the off-diagonal entry along the first axis
    h_c = 1e-3 * np.linalg.norm(a_star)
    cp = honeycomb_capacitance(mesh, lattice, a_star + np.array([h_c, 0.0]), ew)
    cm = honeycomb_capacitance(mesh, lattice, a_star - np.array([h_c, 0.0]), ew)
    c_deriv = (cp[0, 1] - cm[0, 1]) / (2.0 * h_c)

    direction = np.array([1.0, 0.0])
    radius = window if window is not None else 0.08 * np.linalg.norm(a_star)
    for _ in range(6):
        ts = radius * np.arange(1, n_samples + 1) / n_samples
        lower, upper = [], []
        for t in ts:
            w = _honeycomb_bands(mesh, lattice, a_star + t * direction, delta, v_b, ew)
            lower.append(w[0])
            upper.append(w[1])
        lower = np.array(lower)
        upper = np.array(upper)
        half_split = 0.5 * (upper - lower)
        slope = float(ts @ half_split / (ts @ ts))
        pred = slope * ts
        ss_res = float(np.sum((half_split - pred) ** 2))
        ss_tot = float(np.sum((half_split - half_split.mean()) ** 2))
        r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
        if r2 >= min_r_squared:
            break
        radius /= 2.0
    # per-branch slopes with the shared curvature term fitted out
    design = np.stack([ts, ts * ts], axis=1)
    slope_lo = float(np.linalg.lstsq(design, omega_star - lower, rcond=None)[0][0])
    slope_hi = float(np.linalg.lstsq(design, upper - omega_star, rcond=None)[0][0])
    return DiracFit(
        omega_star=omega_star,
        slope=slope,
        c=complex(c_deriv),
        lambda0=lambda0,
        r_squared=r2,
        window=radius,
        branch_slopes=(slope_lo, slope_hi),
    )


def bloch_mode_eval(
    mesh: PlaneMesh, lattice: Lattice, alpha, points: np.ndarray, ewald: Ewald2D | None = None
) -> np.ndarray:
    """Microscopic mode samples S_j(x) of the honeycomb pair at given points.

    Points closer to the boundary than one panel length are rejected.
    """
    alpha = np.asarray(alpha, dtype=float)
    points = np.atleast_2d(np.asarray(points, dtype=float))
    ew = ewald or Ewald2D(lattice)
    ws = plane_workspace_for(mesh)
    op = assemble_plane_quasi_single_layer(mesh, lattice, alpha, ew)
    chi = np.zeros((mesh.n_panels, 2), dtype=complex)
    for j in range(2):
        chi[mesh.resonator_id == j, j] = 1.0
    psi = solve_with_cond_check(op.entries, chi, "2D quasi single layer")

    h_max = mesh.lengths.max()
    dmin = np.min(
        np.linalg.norm(points[:, None, :] - mesh.midpoints[None, :, :], axis=2), axis=1
    )
    if np.any(dmin < h_max):
        raise ValueError("evaluation point lies inside the singular band of the boundary")

    from .quadrature import segment_log_integral

    a, b = mesh.panel_endpoints()
    log_part = segment_log_integral(points, a, b) / (2.0 * np.pi)
    d = points[:, None, :] - ws.nodes[None, :, :]
    smooth = ew.correction(d.reshape(-1, 2), alpha).reshape(points.shape[0], -1)
    smooth = (smooth * ws.weights[None, :]).reshape(
        points.shape[0], mesh.n_panels, ws.n_nodes_per_panel
    ).sum(axis=2)
    kernel = log_part + smooth
    return kernel @ psi
