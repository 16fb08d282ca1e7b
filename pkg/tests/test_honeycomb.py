"""Honeycomb pair: Hermitian structure, Dirac-point identities, cone fit."""

import numpy as np
import pytest

from resona.bands import (
    bloch_mode_eval,
    dirac_fit,
    dirac_point,
    honeycomb_capacitance,
)
from resona.geometry import PlaneMesh, honeycomb_lattice, make_honeycomb_pair
from resona.kernels import Ewald2D


@pytest.fixture(scope="module")
def lat2():
    return honeycomb_lattice(1.0)


@pytest.fixture(scope="module")
def pair():
    return make_honeycomb_pair(1.0, 0.12, 48)


@pytest.fixture(scope="module")
def ew2(lat2):
    return Ewald2D(lat2)


@pytest.fixture(scope="module")
def corner(lat2):
    return dirac_point(lat2)


class TestCapacitance:
    def test_hermitian_with_constant_real_diagonal(self, pair, lat2, ew2):
        c = honeycomb_capacitance(pair, lat2, np.array([1.0, 0.5]), ew2)
        assert abs(c[0, 0].imag) < 1e-8 * abs(c[0, 0])
        assert abs(c[0, 0] - c[1, 1]) < 1e-8 * abs(c[0, 0])
        assert abs(c[0, 1] - np.conj(c[1, 0])) < 1e-8 * abs(c[0, 0])

    def test_coupling_vanishes_at_the_corner(self, pair, lat2, ew2, corner):
        c = honeycomb_capacitance(pair, lat2, corner, ew2)
        assert abs(c[0, 1]) < 1e-10 * c[0, 0].real

    def test_diagonal_gradient_vanishes_at_the_corner(self, pair, lat2, ew2, corner):
        h = 2e-3 * np.linalg.norm(corner)
        grads = []
        for e in (np.array([1.0, 0.0]), np.array([0.0, 1.0])):
            cp = honeycomb_capacitance(pair, lat2, corner + h * e, ew2)
            cm = honeycomb_capacitance(pair, lat2, corner - h * e, ew2)
            grads.append((cp[0, 0].real - cm[0, 0].real) / (2 * h))
        cd = (
            honeycomb_capacitance(pair, lat2, corner + h * np.array([1, 0]), ew2)[0, 1]
            - honeycomb_capacitance(pair, lat2, corner - h * np.array([1, 0]), ew2)[0, 1]
        ) / (2 * h)
        assert np.hypot(*grads) < 1e-3 * abs(cd)

    def test_coupling_gradient_direction(self, pair, lat2, ew2, corner):
        h = 2e-3 * np.linalg.norm(corner)
        g = []
        for e in (np.array([1.0, 0.0]), np.array([0.0, 1.0])):
            cp = honeycomb_capacitance(pair, lat2, corner + h * e, ew2)
            cm = honeycomb_capacitance(pair, lat2, corner - h * e, ew2)
            g.append((cp[0, 1] - cm[0, 1]) / (2 * h))
        # gradient proportional to (1, -i): second component over first
        assert abs(g[1] / g[0] + 1j) < 0.01

    def test_eigenvalue_closed_form(self, pair, lat2, ew2):
        c = honeycomb_capacitance(pair, lat2, np.array([2.0, -0.7]), ew2)
        lam = np.linalg.eigvalsh(c)
        closed = np.array([c[0, 0].real - abs(c[0, 1]), c[0, 0].real + abs(c[0, 1])])
        assert np.abs(np.sort(lam) - closed).max() < 1e-12 * abs(c[0, 0])

    def test_asymmetric_pair_rejected(self, lat2, ew2):
        broken = make_honeycomb_pair(1.0, 0.12, 24)
        shifted = PlaneMesh(
            broken.vertices + np.array([0.03, 0.0]) * (broken.resonator_id.repeat(1)[:, None] == 1),
            broken.segments,
            broken.resonator_id,
        )
        with pytest.raises(ValueError):
            honeycomb_capacitance(shifted, lat2, np.array([1.0, 0.5]), ew2)


@pytest.fixture(scope="module")
def fit(pair, lat2):
    return dirac_fit(pair, lat2, delta=1e-4)


class TestDiracFit:
    def test_branch_slopes_match(self, fit):
        lo, hi = fit.branch_slopes
        assert abs(lo - hi) <= 0.02 * abs(hi)

    def test_slope_law(self, fit):
        predicted = abs(fit.c) * np.sqrt(1e-4) * fit.lambda0
        assert fit.slope == pytest.approx(predicted, rel=0.05)

    def test_corner_frequency(self, fit, pair, lat2, ew2, corner):
        c1 = honeycomb_capacitance(pair, lat2, corner, ew2)[0, 0].real
        assert fit.omega_star == pytest.approx(
            np.sqrt(1e-4 * c1 / pair.areas[0]), rel=0.02
        )

    def test_fit_quality(self, fit):
        assert fit.r_squared > 0.99


class TestBlochModes:
    def test_boundary_values_at_disk_centers(self, pair, lat2, ew2, corner):
        x1 = (lat2.vectors[0] + lat2.vectors[1]) / 3.0
        vals = bloch_mode_eval(pair, lat2, corner, np.array([x1, 2 * x1]), ew2)
        assert abs(vals[0, 0]) == pytest.approx(1.0, abs=0.01)
        assert abs(vals[1, 1]) == pytest.approx(1.0, abs=0.01)
        assert abs(vals[0, 1]) < 0.01
        assert abs(vals[1, 0]) < 0.01

    def test_quasi_periodic_shift(self, pair, lat2, ew2, corner):
        x1 = (lat2.vectors[0] + lat2.vectors[1]) / 3.0
        base = bloch_mode_eval(pair, lat2, corner, np.array([x1]), ew2)
        shifted = bloch_mode_eval(
            pair, lat2, corner, np.array([x1 + lat2.vectors[0]]), ew2
        )
        phase = np.exp(1j * corner @ lat2.vectors[0])
        assert np.abs(shifted - phase * base).max() < 1e-10

    def test_singular_band_guard(self, pair, lat2, ew2, corner):
        edge_point = pair.midpoints[0] + 1e-4 * pair.normals[0]
        with pytest.raises(ValueError):
            bloch_mode_eval(pair, lat2, corner, edge_point[None], ew2)
