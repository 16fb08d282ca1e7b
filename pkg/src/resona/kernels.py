"""Green's-function kernels: free space, lattice quasi-periodic (Ewald) and
one-dimensionally periodic chains (accelerated image sums).

Sign conventions follow the outgoing free-space kernel
``G_k(x) = -exp(ik|x|)/(4 pi |x|)`` in 3D (so the Laplace kernel is
``-1/(4 pi r)``) and ``ln(r)/(2 pi)`` in 2D.  Quasi-periodic kernels solve
``(Laplacian + k^2) G = sum_m delta(x - y - R_m) exp(i alpha . R_m)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .geometry import Lattice

__all__ = [
    "green_free",
    "helmholtz_smooth",
    "helmholtz_smooth_normal",
    "Ewald3D",
    "Ewald2D",
    "chain_correction",
    "chain_correction_gradient",
    "chain_green",
    "log_sin_lattice_sum",
    "offset_image_sum",
    "accelerated_oscillatory_sum",
]

_EULER_GAMMA = 0.5772156649015329


def green_free(x, k: complex) -> complex | np.ndarray:
    """Outgoing Helmholtz kernel -exp(ik|x|)/(4 pi |x|)."""
    x = np.asarray(x, dtype=float)
    r = np.linalg.norm(x, axis=-1)
    if np.any(r == 0.0):
        raise ValueError("kernel is singular at x = 0")
    val = -np.exp(1j * k * r) / (4.0 * np.pi * r)
    if val.ndim == 0:
        return complex(val)
    return val


def helmholtz_smooth(r: np.ndarray, k: complex) -> np.ndarray:
    """(G_k - G_0)(r) = -(exp(ikr) - 1)/(4 pi r); entire in r."""
    r = np.asarray(r, dtype=float)
    x = 1j * k * r
    small = np.abs(x) < 0.2
    out = np.empty(r.shape, dtype=complex)
    rs = np.where(r == 0.0, 1.0, r)
    out[~small] = -(np.expm1(x[~small])) / (4.0 * np.pi * rs[~small])
    # -(1/4 pi) * sum_{n>=1} (ik)^n r^(n-1) / n!
    xs = x[small]
    acc = np.zeros(xs.shape, dtype=complex)
    term = np.ones(xs.shape, dtype=complex)
    for n in range(1, 10):
        term = term * xs / n
        acc += term
    out[small] = -acc / (4.0 * np.pi * rs[small])
    out[r == 0.0] = -1j * k / (4.0 * np.pi)
    return out


def helmholtz_smooth_normal(d: np.ndarray, nu: np.ndarray, k: complex) -> np.ndarray:
    """Normal derivative at the observation point of (G_k - G_0)(x - y).

    d = x - y (..., 3), nu = unit normal at x (broadcastable).  Returns
    h'(r) * (d . nu) / r with h the radial profile of helmholtz_smooth.
    """
    d = np.asarray(d, dtype=float)
    r = np.linalg.norm(d, axis=-1)
    proj = np.einsum("...i,...i->...", d, nu)
    x = 1j * k * r
    # h'(r)/r = -(exp(ikr)(ikr - 1) + 1) / (4 pi r^3)
    small = np.abs(x) < 0.2
    out = np.empty(r.shape, dtype=complex)
    rs = np.where(r == 0.0, 1.0, r)
    ex = np.exp(x[~small])
    out[~small] = -(ex * (x[~small] - 1.0) + 1.0) / (4.0 * np.pi * rs[~small] ** 3)
    # series: -(1/4 pi r^3) * sum_{n>=2} (n-1) x^n / n!
    xs = x[small]
    acc = np.zeros(xs.shape, dtype=complex)
    term = xs.copy()  # x^1/1!
    for n in range(2, 11):
        term = term * xs / n
        acc += (n - 1) * term
    out[small] = -acc / (4.0 * np.pi * rs[small] ** 3)
    out = out * proj
    out[r == 0.0] = 0.0  # flat-panel principal value
    return out


def _complex_erfc(z: np.ndarray) -> np.ndarray:
    """erfc for complex arguments with Re z >= 0 via the Faddeeva function."""
    z = np.asarray(z, dtype=complex)
    return np.exp(-z * z) * special.wofz(1j * z)


# ---------------------------------------------------------------------------
# 3D lattice Ewald


@dataclass
class Ewald3D:
    """Ewald evaluation of the 3D lattice quasi-periodic Green's function.

    The splitting parameter defaults to sqrt(pi) / cell_size; results are
    independent of it to summation tolerance.
    """

    lattice: Lattice
    splitting: float | None = None
    tol: float = 1e-12

    def __post_init__(self):
        if self.lattice.dimension != 3:
            raise ValueError("Ewald3D needs a three-dimensional lattice")
        cell = self.lattice.cell_volume ** (1.0 / 3.0)
        if self.splitting is None:
            self.splitting = math.sqrt(math.pi) / cell
        self._cell_volume = self.lattice.cell_volume

    # -- windows -----------------------------------------------------------
    def _image_points(self, d_max: float) -> np.ndarray:
        E = self.splitting
        x_cut = math.sqrt(max(math.log(1.0 / self.tol), 1.0))  # erfc(x) ~ exp(-x^2)
        r_cut = x_cut / E + d_max
        # generous integer window for a possibly skew lattice
        lengths = np.linalg.norm(self.lattice.vectors, axis=1)
        order = int(np.ceil(r_cut / lengths.min())) + 1
        pts = self.lattice.images(order)
        keep = np.linalg.norm(pts, axis=1) <= r_cut + 1e-9
        return pts[keep]

    def spectral_terms(self, alpha, k: complex = 0.0):
        """Plane-wave expansion of the spectral part.

        Returns (wvecs, coef) with G_spec(d) = sum_q coef_q exp(i w_q . d).
        """
        alpha = np.asarray(alpha, dtype=float)
        E = self.splitting
        q_cut = math.sqrt(4.0 * E * E * math.log(1.0 / self.tol) + abs(k) ** 2) + np.linalg.norm(alpha)
        lengths = np.linalg.norm(self.lattice.duals, axis=1)
        order = int(np.ceil(q_cut / lengths.min())) + 1
        q = self.lattice.dual_points(order)
        w = q + alpha
        w2 = np.einsum("qi,qi->q", w, w)
        keep = w2 <= q_cut**2
        w = w[keep]
        w2 = w2[keep]
        denom = k * k - w2
        if np.any(np.abs(denom) < 1e-12 * (1.0 + w2)):
            raise ValueError("resonant denominator: k matches |alpha + q|")
        coef = np.exp((k * k - w2) / (4.0 * E * E)) / (denom * self._cell_volume)
        return w, coef

    # -- radial profiles ----------------------------------------------------
    def _psi(self, r: np.ndarray, k: complex) -> np.ndarray:
        """Real-space screened radial profile; G_spat = -sum e^{i a.R} psi(r_R)."""
        E = self.splitting
        if k == 0.0:
            return special.erfc(E * r) / (4.0 * np.pi * r)
        c = 1j * k / (2.0 * E)
        a = np.exp(1j * k * r) * _complex_erfc(E * r + c)
        b = np.exp(-1j * k * r) * _complex_erfc(E * r - c)
        return (a + b) / (8.0 * np.pi * r)

    def _psi_dr(self, r: np.ndarray, k: complex) -> np.ndarray:
        E = self.splitting
        gauss = 2.0 * E / math.sqrt(math.pi)
        if k == 0.0:
            return (-special.erfc(E * r) / r**2 - gauss * np.exp(-(E * r) ** 2) / r) / (
                4.0 * np.pi
            )
        c = 1j * k / (2.0 * E)
        a = np.exp(1j * k * r) * _complex_erfc(E * r + c)
        b = np.exp(-1j * k * r) * _complex_erfc(E * r - c)
        da = 1j * k * a - np.exp(1j * k * r) * gauss * np.exp(-((E * r + c) ** 2))
        db = -1j * k * b - np.exp(-1j * k * r) * gauss * np.exp(-((E * r - c) ** 2))
        return (-(a + b) / r**2 + (da + db) / r) / (8.0 * np.pi)

    def _m0_smooth(self, r: np.ndarray, k: complex) -> np.ndarray:
        """G_free(r) - (-psi(r)): the smooth m=0 remainder; finite at r=0."""
        E = self.splitting
        out = np.empty(r.shape, dtype=complex)
        zero = r < 1e-300
        rs = np.where(zero, 1.0, r)
        if k == 0.0:
            out = special.erf(E * rs) / (4.0 * np.pi * rs) + 0j
            out[zero] = E / (2.0 * np.pi**1.5)
            return out
        c = 1j * k / (2.0 * E)
        n = np.exp(1j * k * rs) * _complex_erfc(-E * rs - c) - np.exp(-1j * k * rs) * _complex_erfc(
            E * rs - c
        )
        out = n / (8.0 * np.pi * rs)
        lim = 1j * k * _complex_erfc(np.array(-c)) / (4.0 * np.pi) + E * np.exp(-c * c) / (
            2.0 * np.pi**1.5
        )
        out[zero] = lim
        return out

    def _m0_smooth_grad_radial(self, r: np.ndarray, k: complex) -> np.ndarray:
        """d/dr of the m=0 smooth remainder divided by r (radial-even profile)."""
        # remainder is analytic and radial, so f'(r)/r is finite at r = 0
        h = 1e-6 / self.splitting
        rs = np.maximum(r, h)
        f_p = self._m0_smooth(rs + h, k)
        f_m = self._m0_smooth(rs - h, k)
        return (f_p - f_m) / (2.0 * h) / rs

    # -- public evaluation ---------------------------------------------------
    def real_correction(self, d: np.ndarray, alpha, k: complex = 0.0) -> np.ndarray:
        """Image-sum part of G_quasi(d) - G_free(d) (spectral part excluded)."""
        d = np.atleast_2d(np.asarray(d, dtype=float))
        alpha = np.asarray(alpha, dtype=float)
        r0 = np.linalg.norm(d, axis=1)
        out = self._m0_smooth(r0, k).astype(complex)
        images = self._image_points(float(r0.max(initial=0.0)))
        nz = np.linalg.norm(images, axis=1) > 0
        images = images[nz]
        phases = np.exp(1j * images @ alpha)
        # chunk over images to bound temporaries
        for start in range(0, images.shape[0], 32):
            blk = images[start : start + 32]
            ph = phases[start : start + 32]
            rr = np.linalg.norm(d[:, None, :] - blk[None, :, :], axis=2)
            out -= self._psi(rr, k) @ ph
        return out

    def real_correction_gradient(self, d: np.ndarray, alpha, k: complex = 0.0) -> np.ndarray:
        d = np.atleast_2d(np.asarray(d, dtype=float))
        alpha = np.asarray(alpha, dtype=float)
        r0 = np.linalg.norm(d, axis=1)
        out = (self._m0_smooth_grad_radial(r0, k)[:, None] * d).astype(complex)
        images = self._image_points(float(r0.max(initial=0.0)))
        nz = np.linalg.norm(images, axis=1) > 0
        images = images[nz]
        phases = np.exp(1j * images @ alpha)
        for start in range(0, images.shape[0], 32):
            blk = images[start : start + 32]
            ph = phases[start : start + 32]
            dd = d[:, None, :] - blk[None, :, :]
            rr = np.linalg.norm(dd, axis=2)
            out -= np.einsum("pq,pqi,q->pi", self._psi_dr(rr, k) / rr, dd, ph)
        return out

    def correction(self, d: np.ndarray, alpha, k: complex = 0.0) -> np.ndarray:
        """R(d) = G_quasi(d) - G_free(d); smooth for d inside the unit cell."""
        d = np.atleast_2d(np.asarray(d, dtype=float))
        alpha = np.asarray(alpha, dtype=float)
        if k == 0.0 and np.linalg.norm(alpha) == 0.0:
            raise ValueError("Gamma point with k = 0 is rejected")
        out = self.real_correction(d, alpha, k)
        w, coef = self.spectral_terms(alpha, k)
        out += np.exp(1j * d @ w.T) @ coef
        return out

    def correction_gradient(self, d: np.ndarray, alpha, k: complex = 0.0) -> np.ndarray:
        """Gradient of correction() with respect to d; shape (..., 3)."""
        d = np.atleast_2d(np.asarray(d, dtype=float))
        alpha = np.asarray(alpha, dtype=float)
        out = self.real_correction_gradient(d, alpha, k)
        w, coef = self.spectral_terms(alpha, k)
        phase = np.exp(1j * d @ w.T)
        out += 1j * np.einsum("pq,q,qi->pi", phase, coef, w)
        return out

    def green(self, x, y, alpha, k: complex = 0.0) -> np.ndarray:
        """Quasi-periodic Green's function G(x, y) = G_free(x - y) + correction."""
        d = np.atleast_2d(np.asarray(x, float) - np.asarray(y, float))
        return green_free(d, k) + self.correction(d, alpha, k)


# ---------------------------------------------------------------------------
# 2D lattice Ewald (Laplace only)


@dataclass
class Ewald2D:
    """Quasi-periodic 2D Laplace lattice Green's function via Ewald splitting."""

    lattice: Lattice
    splitting: float | None = None
    tol: float = 1e-12

    def __post_init__(self):
        if self.lattice.dimension != 2:
            raise ValueError("Ewald2D needs a two-dimensional lattice")
        if self.splitting is None:
            self.splitting = math.sqrt(math.pi) / math.sqrt(self.lattice.cell_volume)
        self._cell_area = self.lattice.cell_volume

    def _image_points(self, d_max: float) -> np.ndarray:
        E = self.splitting
        # E1(z) ~ exp(-z)/z: z_cut from tol
        z_cut = max(math.log(1.0 / self.tol), 1.0)
        r_cut = math.sqrt(z_cut) / E + d_max
        lengths = np.linalg.norm(self.lattice.vectors, axis=1)
        order = int(np.ceil(r_cut / lengths.min())) + 1
        pts = self.lattice.images(order)
        keep = np.linalg.norm(pts, axis=1) <= r_cut + 1e-9
        return pts[keep]

    def spectral_terms(self, alpha):
        alpha = np.asarray(alpha, dtype=float)
        E = self.splitting
        q_cut = math.sqrt(4.0 * E * E * math.log(1.0 / self.tol)) + np.linalg.norm(alpha)
        lengths = np.linalg.norm(self.lattice.duals, axis=1)
        order = int(np.ceil(q_cut / lengths.min())) + 1
        q = self.lattice.dual_points(order)
        w = q + alpha
        w2 = np.einsum("qi,qi->q", w, w)
        keep = (w2 <= q_cut**2) & (w2 > 1e-24)
        if not np.all(w2 > 1e-24):
            raise ValueError("Gamma point is rejected for the 2D lattice kernel")
        w = w[keep]
        w2 = w2[keep]
        coef = -np.exp(-w2 / (4.0 * E * E)) / (w2 * self._cell_area)
        return w, coef

    @staticmethod
    def _e1_plus_log(z: np.ndarray) -> np.ndarray:
        """E1(z) + ln(z), smooth at z = 0 (limit -gamma)."""
        out = np.empty(z.shape)
        small = z < 1e-8
        out[small] = -_EULER_GAMMA + z[small]
        zs = z[~small]
        out[~small] = special.exp1(zs) + np.log(zs)
        return out

    def _m0_smooth(self, r: np.ndarray) -> np.ndarray:
        """-(1/4pi) E1(E^2 r^2) - ln(r)/(2 pi): smooth m=0 remainder."""
        E = self.splitting
        z = (E * r) ** 2
        return -(self._e1_plus_log(z) - 2.0 * math.log(E)) / (4.0 * np.pi)

    def real_correction(self, d: np.ndarray, alpha) -> np.ndarray:
        """Image-sum part of G_quasi(d) - ln|d|/(2 pi) (spectral part excluded)."""
        d = np.atleast_2d(np.asarray(d, dtype=float))
        alpha = np.asarray(alpha, dtype=float)
        E = self.splitting
        r0 = np.linalg.norm(d, axis=1)
        out = self._m0_smooth(r0).astype(complex)
        images = self._image_points(float(r0.max(initial=0.0)))
        nz = np.linalg.norm(images, axis=1) > 0
        images = images[nz]
        phases = np.exp(1j * images @ alpha)
        for start in range(0, images.shape[0], 32):
            blk = images[start : start + 32]
            ph = phases[start : start + 32]
            rr2 = np.einsum(
                "pqi,pqi->pq", d[:, None, :] - blk[None, :, :], d[:, None, :] - blk[None, :, :]
            )
            out -= (special.exp1(E * E * rr2) / (4.0 * np.pi)) @ ph
        return out

    def correction(self, d: np.ndarray, alpha) -> np.ndarray:
        """R(d) = G_quasi(d) - ln|d|/(2 pi); smooth inside the cell."""
        d = np.atleast_2d(np.asarray(d, dtype=float))
        alpha = np.asarray(alpha, dtype=float)
        if np.linalg.norm(alpha) == 0.0:
            raise ValueError("Gamma point is rejected for the 2D lattice kernel")
        out = self.real_correction(d, alpha)
        w, coef = self.spectral_terms(alpha)
        out += np.exp(1j * d @ w.T) @ coef
        return out

    def green(self, x, y, alpha) -> np.ndarray:
        d = np.atleast_2d(np.asarray(x, float) - np.asarray(y, float))
        r = np.linalg.norm(d, axis=1)
        return np.log(r) / (2.0 * np.pi) + self.correction(d, alpha)


# ---------------------------------------------------------------------------
# 1D-periodic chain of 3D kernels


def accelerated_oscillatory_sum(term_block, z: complex, m_max: int, n_avg: int = 4):
    """Sum_{m>=1} t_m for terms t_m ~ z^m * (smooth algebraic envelope).

    term_block(m_indices) must return an array (..., len(m_indices)).  Partial
    sums are accelerated by repeated weighted differencing with the known
    oscillation factor z, which raises the algebraic decay order by one per
    pass.
    """
    if abs(1.0 - z) < 1e-12:
        raise ValueError("oscillation factor z = 1: series is not summable here")
    running = None
    chunk = 256
    for start in range(1, m_max + 1, chunk):
        ms = np.arange(start, min(start + chunk, m_max + 1))
        blk = term_block(ms)
        s = np.cumsum(blk, axis=-1)[..., -1]
        running = s if running is None else running + s
    # snapshots S_{m_max} .. S_{m_max + n_avg}
    snaps = [running]
    for j in range(1, n_avg + 1):
        blk = term_block(np.array([m_max + j]))
        snaps.append(snaps[-1] + blk[..., 0])
    snaps = np.stack(snaps, axis=-1)
    for _ in range(n_avg):
        snaps = (snaps[..., 1:] - z * snaps[..., :-1]) / (1.0 - z)
    return snaps[..., 0]


def _chain_branch(d: np.ndarray, sign: int, alpha: float, L: float, k: complex, m_max: int):
    """Accelerated sum over images m = sign*1, sign*2, ... of e^{ikr}/r e^{i alpha L m}.

    The leading 1/m oscillatory part is removed in closed form before the
    averaging acceleration.
    """
    d = np.atleast_2d(d)
    d1 = d[:, 0]
    z = np.exp(1j * (sign * alpha + k) * L)
    lead = np.exp(-1j * sign * k * d1) / L  # coefficient of z^m / m

    def block(ms):
        shifts = sign * ms * L
        dd1 = d1[:, None] - shifts[None, :]
        rr = np.sqrt(dd1**2 + (d[:, 1] ** 2 + d[:, 2] ** 2)[:, None])
        exact = np.exp(1j * k * rr) / rr * np.exp(1j * alpha * L * sign * ms)[None, :]
        tmpl = lead[:, None] * z ** ms[None, :] / ms[None, :]
        return exact - tmpl

    tail = accelerated_oscillatory_sum(block, z, m_max, n_avg=6)
    closed = lead * (-np.log1p(-z)) if abs(z - 1.0) > 1e-12 else np.inf
    return tail + closed


def _chain_m_max(alpha: float, L: float, k: complex, tol: float, n_avg: int = 6) -> int:
    """Truncation length for the averaged chain tails.

    After the 1/m template subtraction the envelope decays like 1/m^2 and
    each averaging pass trades one power of m for a factor 1/|1-z|; the
    bound below inverts that estimate.
    """
    z_gap = min(
        abs(1.0 - np.exp(1j * (alpha + k) * L)), abs(1.0 - np.exp(1j * (k - alpha) * L))
    )
    z_gap = max(z_gap, 1e-3)
    amp = math.factorial(n_avg + 1) / (tol * z_gap**n_avg)
    return int(np.clip(amp ** (1.0 / (2 + n_avg)), 64, 4096))


def chain_correction(
    d: np.ndarray, alpha: float, L: float, k: complex = 0.0, tol: float = 1e-10
) -> np.ndarray:
    """G_chain(d) - G_free(d) = -(1/4 pi) sum_{m != 0} e^{ik r_m} e^{i alpha L m} / r_m.

    d may have rows with |d| of order L (the m = 0 singular image is excluded,
    so the result is smooth there).
    """
    d = np.atleast_2d(np.asarray(d, dtype=float))
    if not -np.pi / L - 1e-12 <= alpha <= np.pi / L + 1e-12:
        raise ValueError("alpha must lie in the chain Brillouin zone [-pi/L, pi/L]")
    if alpha == 0.0 and k == 0.0:
        raise ValueError("Gamma point with k = 0 is rejected for the chain kernel")
    m_max = _chain_m_max(alpha, L, k, tol)
    plus = _chain_branch(d, +1, alpha, L, k, m_max)
    minus = _chain_branch(d, -1, alpha, L, k, m_max)
    return -(plus + minus) / (4.0 * np.pi)


def chain_correction_gradient(
    d: np.ndarray, alpha: float, L: float, k: complex = 0.0, tol: float = 1e-10
) -> np.ndarray:
    """Gradient of chain_correction with respect to d."""
    d = np.atleast_2d(np.asarray(d, dtype=float))
    m_max = _chain_m_max(alpha, L, k, tol)
    out = np.zeros((d.shape[0], 3), dtype=complex)
    d1 = d[:, 0]
    rho2 = d[:, 1] ** 2 + d[:, 2] ** 2
    for sign in (+1, -1):
        z = np.exp(1j * (sign * alpha + k) * L)
        # gradient terms: e^{i a L m} e^{ikr}(ik/r - 1/r^2) (d - mLe1)/r
        # leading 1/m part: -sign * ik * e1 * e^{-i sign k d1} z^m / (mL)
        lead = -sign * 1j * k * np.exp(-1j * sign * k * d1) / L

        def block(ms, sign=sign, lead=lead, z=z):
            shifts = sign * ms * L
            dd1 = d1[:, None] - shifts[None, :]
            rr = np.sqrt(dd1**2 + rho2[:, None])
            common = (
                np.exp(1j * k * rr)
                * (1j * k / rr - 1.0 / rr**2)
                / rr
                * np.exp(1j * alpha * L * sign * ms)[None, :]
            )
            gx = common * dd1
            gy = common * d[:, 1][:, None]
            gz = common * d[:, 2][:, None]
            gx = gx - lead[:, None] * z ** ms[None, :] / ms[None, :]
            return np.stack([gx, gy, gz], axis=0)

        tail = accelerated_oscillatory_sum(block, z, m_max, n_avg=6)
        closed_x = lead * (-np.log1p(-z))
        out[:, 0] += tail[0] + closed_x
        out[:, 1] += tail[1]
        out[:, 2] += tail[2]
    return -out / (4.0 * np.pi)


def chain_green(x, y, alpha: float, L: float, k: complex = 0.0, tol: float = 1e-10) -> np.ndarray:
    """1D-quasi-periodic chain Green's function (period L along the x axis)."""
    d = np.atleast_2d(np.asarray(x, float) - np.asarray(y, float))
    # singular on every image of the source, not just the m = 0 one
    near = np.round(d[:, 0:1] / L) + np.array([[-1.0, 0.0, 1.0]])
    img_dist = np.sqrt(
        (d[:, 0:1] - near * L) ** 2 + (d[:, 1] ** 2 + d[:, 2] ** 2)[:, None]
    ).min(axis=1)
    if np.any(img_dist < 1e-12 * L):
        raise ValueError("evaluation point coincides with a source image")
    return green_free(d, k) + chain_correction(d, alpha, L, k, tol)


# ---------------------------------------------------------------------------
# scalar lattice sums for the dilute chain


def log_sin_lattice_sum(theta: float, L: float) -> float:
    """Closed form of sum_{m != 0} exp(i m theta)/(|m| L) = -(2/L) ln(2 sin(theta/2)).

    Valid for theta in (0, 2 pi).
    """
    if not 0.0 < theta < 2.0 * np.pi:
        raise ValueError("theta must lie strictly inside (0, 2 pi)")
    return -(2.0 / L) * math.log(2.0 * math.sin(theta / 2.0))


def offset_image_sum(theta: float, d: float, L: float, m_max: int = 2000) -> complex:
    """sum_{m in Z} exp(i m theta) / |m L + d| for 0 < d < L, theta in (0, 2 pi).

    The 1/m parts are summed in closed form; the algebraic remainders are
    accelerated by weighted averaging.
    """
    if not 0.0 < d < L:
        raise ValueError("offset d must satisfy 0 < d < L")
    if not 0.0 < theta < 2.0 * np.pi:
        raise ValueError("theta L must avoid 0 and 2 pi")
    z = np.exp(1j * theta)
    total = 1.0 / d  # m = 0

    def block_plus(ms):
        return (1.0 / (ms * L + d) - 1.0 / (ms * L)) * z**ms

    def block_minus(ms):
        return (1.0 / (ms * L - d) - 1.0 / (ms * L)) * np.conj(z) ** ms

    total += accelerated_oscillatory_sum(block_plus, z, m_max)
    total += accelerated_oscillatory_sum(block_minus, np.conj(z), m_max)
    total += (-np.log1p(-z)) / L + (-np.log1p(-np.conj(z))) / L
    return complex(total)
