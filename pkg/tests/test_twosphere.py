"""Bispherical closed forms and their regimes."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from resona.twosphere import (
    EULER_GAMMA,
    bispherical_frame,
    blowup_prediction,
    capacitance_asymptotics,
    capacitance_series,
    close_resonances,
    gap_for_contrast,
)


class TestFrame:
    def test_focal_parameter(self):
        f = bispherical_frame(1.0, 0.1)
        assert f.alpha_coord == pytest.approx(math.sqrt(0.41) / 2.0, rel=1e-12)
        assert f.alpha_coord == pytest.approx(0.320156, rel=1e-5)

    def test_center_offset(self):
        f = bispherical_frame(1.0, 0.1)
        assert f.center == pytest.approx(math.sqrt(1.0 + f.alpha_coord**2), rel=1e-14)
        assert f.center == pytest.approx(1.05, rel=1e-4)

    def test_small_gap_flags_degeneracy(self):
        with pytest.warns(RuntimeWarning):
            bispherical_frame(1.0, 1e-18)

    def test_touching_rejected(self):
        with pytest.raises(ValueError):
            bispherical_frame(1.0, 0.0)

    @given(
        r=st.floats(0.1, 10.0),
        eps=st.floats(1e-6, 5.0),
    )
    @settings(max_examples=60, deadline=None)
    def test_focal_identity_everywhere(self, r, eps):
        # the two closed forms of the focal parameter agree identically
        f = bispherical_frame(r, eps)
        assert abs(f.alpha_coord - f.alpha_tilde) <= 1e-12 * f.alpha_coord


class TestSeries:
    def test_coupling_always_negative(self):
        for r, eps in ((1.0, 0.01), (0.5, 0.3), (2.0, 4.0)):
            s = capacitance_series(bispherical_frame(r, eps))
            assert s.c12 < 0.0

    def test_isolated_sphere_limit(self):
        s = capacitance_series(bispherical_frame(1.0, 50.0))
        assert s.c11 == pytest.approx(4 * np.pi, rel=1e-3)
        assert abs(s.c12) < 0.1 * s.c11

    def test_partial_sums_monotone(self):
        frame = bispherical_frame(1.0, 0.05)
        c11 = [capacitance_series(frame, n, extend=False).c11 for n in (4, 8, 16, 512)]
        c12 = [capacitance_series(frame, n, extend=False).c12 for n in (4, 8, 16, 512)]
        assert c11[0] < c11[1] < c11[2] <= c11[3]
        assert c12[0] > c12[1] > c12[2] >= c12[3]

    def test_truncation_certificate(self):
        s = capacitance_series(bispherical_frame(1.0, 0.1))
        assert s.tail_bound < 1e-12 * s.c11
        assert s.n_terms >= 64

    def test_sum_tends_to_touching_limit(self):
        # C11 + C12 -> 4 pi r ln 2 as the gap closes
        for eps, tol in ((1e-4, 2e-5), (1e-6, 2e-7)):
            s = capacitance_series(bispherical_frame(1.0, eps))
            assert s.c11 + s.c12 == pytest.approx(4 * np.pi * np.log(2), rel=tol * 50)


class TestAsymptotics:
    def test_euler_mascheroni_value(self):
        assert EULER_GAMMA == pytest.approx(0.5772156649, abs=1e-10)

    def test_error_scales_linearly_in_gap(self):
        gaps = []
        for eps in (0.08, 0.04, 0.02):
            s = capacitance_series(bispherical_frame(1.0, eps))
            a11, _ = capacitance_asymptotics(1.0, eps)
            gaps.append(abs(s.c11 - a11))
        for g1, g2 in zip(gaps, gaps[1:]):
            assert g1 / g2 == pytest.approx(2.0, abs=0.4)

    def test_warns_outside_regime(self):
        with pytest.warns(RuntimeWarning):
            capacitance_asymptotics(1.0, 0.5)


class TestCloseResonances:
    def test_in_phase_mode_gap_independent(self):
        w1a, _ = close_resonances(1.0, 1e-3, 1e-3)
        w1b, _ = close_resonances(1.0, 1e-6, 1e-3)
        assert w1a == w1b
        assert w1a == pytest.approx(math.sqrt(1e-3 * 3 * math.log(2)), rel=1e-14)

    def test_antiphase_scaling_in_joint_regime(self):
        # with the matched gap shrink rate the antiphase mode grows like
        # delta^(beta/2); the normalized value stays bounded on a grid
        beta = 0.5
        vals = []
        for delta in (1e-2, 1e-3, 1e-4):
            eps = gap_for_contrast(delta, beta)
            _, w2 = close_resonances(1.0, eps, delta)
            vals.append(w2 / delta ** (beta / 2.0))
        assert max(vals) / min(vals) < 1.6

    def test_mode_ordering(self):
        for eps in (1e-4, 1e-2, 0.5):
            w1, w2 = close_resonances(1.0, eps, 1e-3)
            assert w2 > w1

    def test_contrast_domain(self):
        with pytest.raises(ValueError):
            close_resonances(1.0, 0.1, 0.5)


class TestBlowup:
    def test_unit_gap(self):
        assert blowup_prediction(1.0) == (1.0, 1.0)

    def test_inverse_gap(self):
        assert blowup_prediction(1e-3) == (1.0, 1000.0)

    @pytest.mark.slow
    def test_gap_gradient_probe_scales_inversely(self):
        # the antiphase-mode field gradient at the gap midpoint follows the
        # predicted inverse-gap growth within a factor two
        from resona.geometry import make_dimer
        from resona.quadrature import newton_gradient_triangles
        from resona.resonators import solve_equilibrium_densities

        scaled = []
        for eps in (0.05, 0.1, 0.2, 0.5):
            mesh = make_dimer(1.0, eps, 3)
            psi = solve_equilibrium_densities(mesh)
            dipole = psi[:, 0] - psi[:, 1]
            v = newton_gradient_triangles(np.zeros((1, 3)), mesh.panel_vertices())[0]
            grad = (v * dipole[:, None]).sum(axis=0) / (4 * np.pi)
            scaled.append(np.linalg.norm(grad) * eps)
        assert max(scaled) / min(scaled) < 2.0
