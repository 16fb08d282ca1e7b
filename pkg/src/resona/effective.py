"""Dilute effective media: single-resonator high-index/dissipative
coefficients and the double-negative window for dimer suspensions.

All operations are closed-form in the capacitance data; the only numerics
imported from the solver stack is the dipole weight of the unit dimer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "DiluteMediumSpec",
    "DimerMediumSpec",
    "effective_coefficient",
    "uniform_density",
    "beta0_from_frequency",
    "dimer_constants",
    "double_negative_window",
    "m2_zero_threshold",
    "EffectiveMediumError",
]


class EffectiveMediumError(ValueError):
    """Raised where no effective description exists."""


def uniform_density(volume: float) -> float:
    """Center density 1/|Omega| of uniformly distributed resonators."""
    if volume <= 0.0:
        raise ValueError("region volume must be positive")
    return 1.0 / volume


def beta0_from_frequency(omega: float, omega_m: float, r: float, eps0: float) -> float:
    """Detuning coefficient solving 1 - (omega_m/omega)^2 = beta0 r^eps0."""
    return (1.0 - (omega_m / omega) ** 2) / r**eps0


@dataclass(frozen=True)
class DiluteMediumSpec:
    """Parameters of a dilute single-resonator suspension."""

    lam: float           # resonator number scaled by r^(1-eps0)
    cap: float           # capacity of the unscaled resonator
    beta0: float         # signed detuning coefficient
    density: float       # center density (1/volume for uniform clouds)
    k: float             # background wavenumber
    omega: float
    omega_m: float

    def __post_init__(self):
        if self.lam <= 0.0:
            raise ValueError("scaled resonator number must be positive")
        if self.omega != self.omega_m and np.sign(self.beta0) != np.sign(
            1.0 - (self.omega_m / self.omega) ** 2
        ):
            raise ValueError("beta0 sign inconsistent with the detuning side")


def effective_coefficient(spec: DiluteMediumSpec) -> tuple[complex, str]:
    """Effective Helmholtz coefficient inside the resonator cloud.

    Returns (k^2 - lam * cap * density / beta0, regime) with regime one of
    "high-index" (strongly negative detuning), "dissipative" (positive
    detuning) or "neutral".  Exactly at the single-resonator resonance no
    effective description exists and the call is refused.
    """
    if spec.omega == spec.omega_m:
        raise EffectiveMediumError(
            "no effective medium at the single-resonator resonance: "
            "each scatterer responds at unit strength there"
        )
    value = spec.k**2 - spec.lam * spec.cap * spec.density / spec.beta0
    if spec.beta0 > 0.0:
        return complex(value), "dissipative"
    strength = spec.lam * spec.cap * spec.density / abs(spec.beta0)
    if strength >= 10.0 * spec.k**2:
        return complex(value), "high-index"
    return complex(value), "neutral"


@dataclass(frozen=True)
class DimerMediumSpec:
    """Parameters of a dilute suspension of identical dimers.

    The anti-resonance gap parameter mu^3 eta1 - a is supplied directly:
    the higher-order coefficients eta1, eta2 have no closed form here.
    """

    mu: float            # contrast scale, delta = mu^2 r^2
    lam: float           # number density scale, r N = lam
    c11: float
    c12: float
    dipole_weight: float
    volume: float        # dimer volume |D|
    density: float       # center density
    gap_parameter: float  # mu^3 eta1 - a, must be positive
    v_b: float = 1.0
    b_matrix: np.ndarray | None = None

    def __post_init__(self):
        if self.c12 >= 0.0:
            raise ValueError("dimer coupling entry must be negative")
        if self.gap_parameter <= 0.0:
            raise ValueError("anti-resonance gap parameter must be positive")

    @property
    def omega_m1(self) -> float:
        return math.sqrt(self.c11 + self.c12) * self.v_b

    @property
    def omega_m2(self) -> float:
        return math.sqrt(self.c11 - self.c12) * self.v_b

    def b_matrix_or_default(self) -> np.ndarray:
        # isotropic orientation average of d (x) d is I/3
        if self.b_matrix is not None:
            return np.asarray(self.b_matrix, dtype=float)
        return np.eye(3) * (self.density / 3.0)


def dimer_constants(spec: DimerMediumSpec) -> tuple[float, float]:
    """Monopole and dipole coupling constants of the dimer suspension.

    Both are positive: the first because the hybridized pair is ordered,
    the second because it carries the square of the dipole weight over the
    positive anti-resonance gap.
    """
    om1, om2 = spec.omega_m1, spec.omega_m2
    g0 = 2.0 * (spec.c11 + spec.c12) / (1.0 - om1**2 / om2**2)
    g1 = (
        spec.mu**2
        * spec.v_b**2
        * spec.dipole_weight**2
        / (2.0 * spec.volume * om2 * spec.gap_parameter)
    )
    return g0, g1


def m2_zero_threshold(spec: DimerMediumSpec, k: float) -> float:
    """Number-density scale where the scalar coefficient changes sign."""
    g0, _ = dimer_constants(spec)
    return k**2 / (g0 * spec.density)


def double_negative_window(
    spec: DimerMediumSpec, k: float, lam: float | None = None
) -> tuple[np.ndarray, float, bool]:
    """Effective coefficient pair inside the dimer cloud.

    Returns (M1, M2, both_negative): M1 = I - lam g1 B, M2 = k^2 - lam g0 V.
    The flag is true exactly when M2 < 0 and M1 is negative definite.
    """
    lam = spec.lam if lam is None else lam
    g0, g1 = dimer_constants(spec)
    m1 = np.eye(3) - lam * g1 * spec.b_matrix_or_default()
    m2 = k**2 - lam * g0 * spec.density
    both = bool(m2 < 0.0 and np.linalg.eigvalsh(m1).max() < 0.0)
    return m1, float(m2), both
