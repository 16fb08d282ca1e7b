"""Dilute effective media: regimes, constants, and the negative window."""

import numpy as np
import pytest

from resona.effective import (
    DiluteMediumSpec,
    DimerMediumSpec,
    EffectiveMediumError,
    beta0_from_frequency,
    dimer_constants,
    double_negative_window,
    effective_coefficient,
    m2_zero_threshold,
    uniform_density,
)


def make_spec(omega, omega_m=1.0, lam=50.0, cap=4 * np.pi, r=0.01, eps0=0.5, k=1.0):
    return DiluteMediumSpec(
        lam=lam,
        cap=cap,
        beta0=beta0_from_frequency(omega, omega_m, r, eps0),
        density=1.0,
        k=k,
        omega=omega,
        omega_m=omega_m,
    )


class TestEffectiveCoefficient:
    def test_below_resonance_is_high_index(self):
        value, regime = effective_coefficient(make_spec(0.8))
        assert regime == "high-index"
        assert value.real > 10.0 * 1.0

    def test_above_resonance_is_dissipative(self):
        _, regime = effective_coefficient(make_spec(1.3))
        assert regime == "dissipative"

    def test_vanishing_density_recovers_background(self):
        spec = make_spec(0.8, lam=1e-12)
        value, regime = effective_coefficient(spec)
        assert value == pytest.approx(spec.k**2, rel=1e-9)
        assert regime == "neutral"

    def test_resonance_refused(self):
        spec = DiluteMediumSpec(
            lam=1.0, cap=1.0, beta0=1.0, density=1.0, k=1.0, omega=1.0, omega_m=1.0
        )
        with pytest.raises(EffectiveMediumError):
            effective_coefficient(spec)

    def test_sign_consistency_enforced(self):
        with pytest.raises(ValueError):
            DiluteMediumSpec(
                lam=1.0, cap=1.0, beta0=-1.0, density=1.0, k=1.0, omega=1.3, omega_m=1.0
            )

    def test_divergence_approaching_resonance(self):
        vals = [abs(effective_coefficient(make_spec(om))[0] - 1.0) for om in (0.9, 0.99, 0.999)]
        assert vals[0] < vals[1] < vals[2]


class TestUniformDensity:
    def test_values(self):
        assert uniform_density(2.0) == 0.5
        assert uniform_density(1.0) == 1.0

    def test_inverse_scaling(self):
        assert uniform_density(8.0) == uniform_density(2.0) / 4.0

    def test_zero_volume_rejected(self):
        with pytest.raises(ValueError):
            uniform_density(0.0)


@pytest.fixture
def dimer_spec():
    return DimerMediumSpec(
        mu=1.0,
        lam=1.0,
        c11=9.0,
        c12=-3.5,
        dipole_weight=5.0,
        volume=2.0,
        density=1.0,
        gap_parameter=0.8,
    )


class TestDimerConstants:
    def test_mode_ordering_from_coupling_sign(self, dimer_spec):
        assert dimer_spec.omega_m2 > dimer_spec.omega_m1

    def test_monopole_constant_exceeds_coupling_sum(self, dimer_spec):
        g0, _ = dimer_constants(dimer_spec)
        assert g0 > 2 * (dimer_spec.c11 + dimer_spec.c12)

    def test_dipole_constant_nonnegative_and_quadratic_in_weight(self, dimer_spec):
        _, g1 = dimer_constants(dimer_spec)
        assert g1 > 0
        doubled = DimerMediumSpec(
            mu=1.0, lam=1.0, c11=9.0, c12=-3.5, dipole_weight=10.0,
            volume=2.0, density=1.0, gap_parameter=0.8,
        )
        assert dimer_constants(doubled)[1] == pytest.approx(4 * g1, rel=1e-14)

    def test_antiresonance_blowup(self):
        g1s = []
        for gap in (0.5, 0.05, 0.005):
            spec = DimerMediumSpec(
                mu=1.0, lam=1.0, c11=9.0, c12=-3.5, dipole_weight=5.0,
                volume=2.0, density=1.0, gap_parameter=gap,
            )
            g1s.append(dimer_constants(spec)[1])
        assert g1s[0] < g1s[1] < g1s[2]
        assert g1s[2] > 100 * g1s[0]

    def test_closed_gap_rejected(self):
        with pytest.raises(ValueError):
            DimerMediumSpec(
                mu=1.0, lam=1.0, c11=9.0, c12=-3.5, dipole_weight=5.0,
                volume=2.0, density=1.0, gap_parameter=0.0,
            )


class TestDoubleNegativeWindow:
    def test_zero_density_recovers_background(self, dimer_spec):
        m1, m2, flag = double_negative_window(dimer_spec, k=1.0, lam=0.0)
        assert np.allclose(m1, np.eye(3))
        assert m2 == 1.0
        assert not flag

    def test_large_density_turns_both_negative(self, dimer_spec):
        _, _, flag = double_negative_window(dimer_spec, k=1.0, lam=100.0)
        assert flag

    def test_flag_monotone_in_density(self, dimer_spec):
        lams = np.linspace(0.0, 50.0, 200)
        flags = [double_negative_window(dimer_spec, 1.0, lam)[2] for lam in lams]
        first = flags.index(True)
        assert all(flags[first:])

    def test_scalar_threshold_exact(self, dimer_spec):
        k = 1.3
        thresh = m2_zero_threshold(dimer_spec, k)
        g0, _ = dimer_constants(dimer_spec)
        assert thresh == pytest.approx(k**2 / (g0 * dimer_spec.density), rel=1e-15)
        _, m2_below, _ = double_negative_window(dimer_spec, k, thresh * (1 - 1e-12))
        _, m2_above, _ = double_negative_window(dimer_spec, k, thresh * (1 + 1e-12))
        assert m2_below > 0.0 > m2_above
