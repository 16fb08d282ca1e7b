"""Green's-function kernels against independent summation oracles."""

import numpy as np
import pytest

from resona.geometry import cubic_lattice, honeycomb_lattice
from resona.kernels import (
    Ewald2D,
    Ewald3D,
    chain_correction,
    chain_correction_gradient,
    chain_green,
    green_free,
    helmholtz_smooth,
    helmholtz_smooth_normal,
    log_sin_lattice_sum,
    offset_image_sum,
)


class TestFreeSpace:
    def test_unit_distance_static(self):
        assert green_free(np.array([1.0, 0, 0]), 0.0) == pytest.approx(-1 / (4 * np.pi))

    def test_distance_two(self):
        val = green_free(np.array([0.0, 0, 2.0]), 0.0)
        assert val == pytest.approx(-0.0397887, rel=1e-5)

    def test_sign_flip_at_k_pi(self):
        # e^{i pi} = -1 flips the static value
        val = green_free(np.array([1.0, 0, 0]), np.pi)
        assert val == pytest.approx(+1 / (4 * np.pi), rel=1e-12)

    def test_origin_rejected(self):
        with pytest.raises(ValueError):
            green_free(np.zeros(3), 1.0)

    def test_smooth_difference_and_limit(self):
        k = 0.7 + 0.1j
        r = np.array([1e-14, 0.03, 0.5, 2.0])
        vals = helmholtz_smooth(r, k)
        direct = -(np.exp(1j * k * r[1:]) - 1.0) / (4 * np.pi * r[1:])
        assert np.abs(vals[1:] - direct).max() < 1e-14
        assert vals[0] == pytest.approx(-1j * k / (4 * np.pi), rel=1e-10)

    def test_smooth_normal_series_matches_direct(self):
        k = 0.4
        nu = np.array([0.0, 0.0, 1.0])
        d_small = np.array([[0.3, 0.0, 0.2]]) * 1e-1
        d_large = np.array([[0.3, 0.0, 0.2]]) * 3.0
        for d in (d_small, d_large):
            r = np.linalg.norm(d[0])
            hprime = (
                -(np.exp(1j * k * r) * (1j * k * r - 1.0) + 1.0) / (4 * np.pi * r**3)
            )
            ref = hprime * (d[0] @ nu)
            val = helmholtz_smooth_normal(d, nu[None, :], k)[0]
            assert val == pytest.approx(ref, rel=1e-10)


def spectral_oracle_3d(x, y, alpha, k=0.0, smoothing=16.0, order=40):
    """Gaussian-filtered plane-wave sum; the filter residue is certified
    negligible for the separations used in these tests."""
    rng = np.arange(-order, order + 1)
    q = np.stack(np.meshgrid(rng, rng, rng, indexing="ij"), axis=-1).reshape(-1, 3)
    w = 2 * np.pi * q + alpha
    w2 = np.einsum("qi,qi->q", w, w)
    return np.sum(
        np.exp(1j * w @ (x - y)) * np.exp((k * k - w2) / (4 * smoothing**2)) / (k * k - w2)
    )


class TestEwald3D:
    def setup_method(self):
        self.lat = cubic_lattice(1.0)
        self.ew = Ewald3D(self.lat)
        self.alpha = np.array([1.1, -0.7, 2.0])
        self.x = np.array([0.31, -0.05, 0.12])
        self.y = np.array([-0.17, 0.21, -0.30])

    def test_quasi_periodic_shift(self):
        g0 = self.ew.green(self.x, self.y, self.alpha)[0]
        g1 = self.ew.green(self.x + np.array([1.0, 0, 0]), self.y, self.alpha)[0]
        assert abs(g1 - np.exp(1j * self.alpha[0]) * g0) < 1e-10

    def test_matches_filtered_spectral_sum(self):
        g = self.ew.green(self.x, self.y, self.alpha)[0]
        ref = spectral_oracle_3d(self.x, self.y, self.alpha)
        assert abs(g - ref) < 1e-4

    def test_helmholtz_matches_filtered_spectral_sum(self):
        k = 0.3
        g = self.ew.green(self.x, self.y, self.alpha, k)[0]
        ref = spectral_oracle_3d(self.x, self.y, self.alpha, k)
        assert abs(g - ref) < 1e-4

    def test_conjugation_symmetry(self):
        g = self.ew.green(self.x, self.y, self.alpha)[0]
        gm = self.ew.green(self.x, self.y, -self.alpha)[0]
        assert gm == pytest.approx(np.conj(g), abs=1e-14)

    def test_splitting_parameter_independence(self):
        vals = [
            Ewald3D(self.lat, splitting=e).green(self.x, self.y, self.alpha, 0.2)[0]
            for e in (np.sqrt(np.pi) / 2, np.sqrt(np.pi), 2 * np.sqrt(np.pi))
        ]
        spread = max(abs(v - vals[0]) for v in vals)
        assert spread < 1e-6 * abs(vals[0])

    def test_gamma_with_k_zero_rejected(self):
        with pytest.raises(ValueError):
            self.ew.correction(np.array([[0.3, 0, 0]]), np.zeros(3), 0.0)

    def test_resonant_denominator_rejected(self):
        alpha = np.array([0.6, 0.0, 0.0])
        with pytest.raises(ValueError):
            self.ew.spectral_terms(alpha, k=0.6)

    def test_correction_gradient(self):
        d0 = (self.x - self.y)[None]
        k = 0.15
        grad = self.ew.correction_gradient(d0, self.alpha, k)[0]
        h = 1e-6
        for j in range(3):
            e = np.zeros(3)
            e[j] = h
            fd = (
                self.ew.correction(d0 + e, self.alpha, k)[0]
                - self.ew.correction(d0 - e, self.alpha, k)[0]
            ) / (2 * h)
            assert grad[j] == pytest.approx(fd, abs=2e-8)


class TestEwald2D:
    def setup_method(self):
        self.lat = honeycomb_lattice(1.0)
        self.ew = Ewald2D(self.lat)
        self.alpha = np.array([1.3, 0.4])
        self.x = np.array([0.62, 0.05])
        self.y = np.array([0.47, -0.11])

    def test_quasi_periodic_shift(self):
        g0 = self.ew.green(self.x, self.y, self.alpha)[0]
        g1 = self.ew.green(self.x + self.lat.vectors[0], self.y, self.alpha)[0]
        assert abs(g1 - np.exp(1j * self.alpha @ self.lat.vectors[0]) * g0) < 1e-12

    def test_matches_filtered_spectral_sum(self):
        r = np.arange(-120, 121)
        co = np.stack(np.meshgrid(r, r, indexing="ij"), axis=-1).reshape(-1, 2)
        q = co @ self.lat.duals
        w = q + self.alpha
        w2 = np.einsum("qi,qi->q", w, w)
        smoothing = 20.0
        ref = np.sum(
            np.exp(1j * w @ (self.x - self.y)) * np.exp(-w2 / (4 * smoothing**2)) / (-w2)
        ) / self.lat.cell_volume
        g = self.ew.green(self.x, self.y, self.alpha)[0]
        assert abs(g - ref) < 1e-4

    def test_splitting_parameter_independence(self):
        vals = [
            Ewald2D(self.lat, splitting=e).green(self.x, self.y, self.alpha)[0]
            for e in (1.0, 2.0, 4.0)
        ]
        spread = max(abs(v - vals[0]) for v in vals)
        assert spread < 1e-6 * abs(vals[0])

    def test_gamma_rejected(self):
        with pytest.raises(ValueError):
            self.ew.correction(np.array([[0.2, 0.1]]), np.zeros(2))


def chain_brute(x, y, alpha, L, k=0.0, m_sum=20000, n_avg=6):
    """One-sided partial sums accelerated with the known phase factors."""
    d = x - y
    r0 = np.linalg.norm(d)
    total = -np.exp(1j * k * r0) / (4 * np.pi * r0)
    for sign in (+1, -1):
        z = np.exp(1j * sign * alpha * L)
        z_full = np.exp(1j * (sign * alpha + k) * L)  # phase of the tail terms
        ms = np.arange(1, m_sum + n_avg + 1)
        r = np.sqrt((d[0] - sign * ms * L) ** 2 + d[1] ** 2 + d[2] ** 2)
        terms = -np.exp(1j * k * r) / (4 * np.pi * r) * z**ms
        csum = np.cumsum(terms)
        s = csum[m_sum - 1 : m_sum + n_avg]
        for _ in range(n_avg):
            s = (s[1:] - z_full * s[:-1]) / (1 - z_full)
        total += s[0]
    return total


class TestChainKernel:
    def setup_method(self):
        self.x = np.array([0.1, 0.2, -0.05])
        self.y = np.array([-0.12, 0.03, 0.08])

    def test_quasi_periodic_shift(self):
        alpha, L = 0.9 * np.pi, 1.0
        g0 = chain_green(self.x, self.y, alpha, L)[0]
        g1 = chain_green(self.x + np.array([L, 0, 0]), self.y, alpha, L)[0]
        assert abs(g1 - np.exp(1j * alpha * L) * g0) < 1e-9

    def test_real_at_zone_edge(self):
        g = chain_green(self.x, self.y, np.pi, 1.0)[0]
        assert abs(g.imag) < 1e-12

    @pytest.mark.parametrize("alphaL", [np.pi / 32, 0.5, 0.9 * np.pi])
    def test_matches_accelerated_brute_sum(self, alphaL):
        g = chain_green(self.x, self.y, alphaL, 1.0)[0]
        ref = chain_brute(self.x, self.y, alphaL, 1.0)
        assert abs(g - ref) < 1e-7

    def test_complex_wavenumber(self):
        k = 0.05 - 1e-4j
        g = chain_green(self.x, self.y, 0.6, 1.0, k)[0]
        ref = chain_brute(self.x, self.y, 0.6, 1.0, k)
        assert abs(g - ref) < 1e-7

    def test_gradient_by_finite_differences(self):
        d0 = (self.x - self.y)[None]
        k = 0.05
        grad = chain_correction_gradient(d0, 0.7, 1.0, k)[0]
        h = 1e-6
        for j in range(3):
            e = np.zeros(3)
            e[j] = h
            fd = (
                chain_correction(d0 + e, 0.7, 1.0, k)[0]
                - chain_correction(d0 - e, 0.7, 1.0, k)[0]
            ) / (2 * h)
            assert grad[j] == pytest.approx(fd, abs=3e-9)

    def test_on_axis_coincidence_rejected(self):
        with pytest.raises(ValueError):
            chain_green(np.array([1.0, 0, 0]), np.zeros(3), 0.5, 1.0)

    def test_gamma_rejected(self):
        with pytest.raises(ValueError):
            chain_green(self.x, self.y, 0.0, 1.0)


class TestScalarLatticeSums:
    def test_log_sin_closed_form_vs_weighted_partial_sums(self):
        theta, L = 0.7, 1.0
        closed = log_sin_lattice_sum(theta, L)
        z = np.exp(1j * theta)
        ms = np.arange(1, 4007)
        terms = z**ms / (ms * L)
        csum = np.cumsum(terms)
        s = csum[3999:4006]
        for _ in range(6):
            s = (s[1:] - z * s[:-1]) / (1 - z)
        brute = 2 * s[0].real
        assert abs(closed - brute) < 1e-8

    def test_log_sin_at_pi(self):
        assert log_sin_lattice_sum(np.pi, 2.0) == pytest.approx(-np.log(2.0), rel=1e-14)

    def test_offset_sum_vs_weighted_partial_sums(self):
        theta, d, L = 0.7, 0.3, 1.0
        val = offset_image_sum(theta, d, L)
        z = np.exp(1j * theta)
        total = 1.0 / d
        for sign in (+1, -1):
            zz = z if sign > 0 else np.conj(z)
            ms = np.arange(1, 50008)
            terms = zz**ms / (ms * L + sign * d)
            csum = np.cumsum(terms)
            s = csum[49999:50007]
            for _ in range(7):
                s = (s[1:] - zz * s[:-1]) / (1 - zz)
            total += s[0]
        assert abs(val - total) < 1e-8

    def test_offset_bounds_rejected(self):
        with pytest.raises(ValueError):
            offset_image_sum(0.5, 1.5, 1.0)
        with pytest.raises(ValueError):
            offset_image_sum(0.0, 0.5, 1.0)
