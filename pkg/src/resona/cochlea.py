"""Graded resonator arrays as cochlea-like filter banks.

A size-graded array of high-contrast resonators carries one subwavelength
mode per resonator, with frequencies spread over a design band.  Each mode
yields a causal damped-sine kernel; convolving a signal against the kernel
bank decomposes it into frequency channels, and recombining the channels
with the spatial mode shapes reproduces the travelling-wave response.
"""

from __future__ import annotations

import math
import wave
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.signal import fftconvolve

from .geometry import AIR_IN_WATER, MaterialParams, SurfaceMesh, make_graded_array
from .resonators import ResonanceSet, capacitance_matrix, resonances_leading_order

__all__ = [
    "FilterBank",
    "Decomposition",
    "array_spectrum",
    "design_graded_array",
    "make_kernels",
    "decompose",
    "pressure_field",
    "load_wav",
]


def array_spectrum(mesh: SurfaceMesh, params: MaterialParams = AIR_IN_WATER) -> ResonanceSet:
    """Subwavelength modes of a graded array, ascending in frequency."""
    return resonances_leading_order(capacitance_matrix(mesh), params)


def _linear_radii(n: int, r1: float, ratio: float) -> np.ndarray:
    return r1 * (1.0 + (ratio - 1.0) * np.arange(n) / (n - 1))


def design_graded_array(
    n_channels: int = 22,
    f_low: float = 500.0,
    f_high: float = 10_000.0,
    params: MaterialParams = AIR_IN_WATER,
    refinement: int = 0,
    gap_fraction: float = 0.5,
    rel_tol: float = 0.10,
    max_iters: int = 12,
):
    """Search a linear radius profile whose mode band spans the target range.

    The radius ratio is tuned by a secant iteration until the band ratio
    matches f_high/f_low; the absolute placement then follows from one
    exact homogeneity rescale (all mode frequencies scale inversely with
    the geometry).  Neighbour gaps are ``gap_fraction`` times the local
    mean diameter.  Returns (radii, mesh, resonances); the found radii and
    the resulting array extent belong in the run report, they are not
    constants of the method.
    """

    def build(ratio: float, r1: float):
        radii = _linear_radii(n_channels, r1, ratio)
        gaps = gap_fraction * (radii[:-1] + radii[1:])
        extent = 2.0 * radii.sum() + gaps.sum()
        mesh = make_graded_array(
            radii, total_extent=extent, refinement=refinement
        )
        res = array_spectrum(mesh, params)
        f = res.omegas.real / (2.0 * np.pi)
        return radii, mesh, res, f[0], f[-1]

    target_ratio = f_high / f_low
    r1 = 1e-3
    lo, hi = 4.0, 16.0
    *_, flo, fhi = build(lo, r1)
    g_lo = math.log((fhi / flo) / target_ratio)
    *_, flo, fhi = build(hi, r1)
    g_hi = math.log((fhi / flo) / target_ratio)
    ratio = hi
    for _ in range(max_iters):
        if abs(g_hi) < 1e-3 or g_hi == g_lo:
            break
        nxt = math.exp(
            math.log(hi) - g_hi * (math.log(hi) - math.log(lo)) / (g_hi - g_lo)
        )
        nxt = float(np.clip(nxt, 1.5, 200.0))
        lo, g_lo = hi, g_hi
        hi = nxt
        *_, flo, fhi = build(hi, r1)
        g_hi = math.log((fhi / flo) / target_ratio)
        ratio = hi

    # homogeneity: scaling the geometry by s divides every frequency by s
    _, _, _, flo, fhi = build(ratio, r1)
    scale = math.sqrt(flo * fhi) / math.sqrt(f_low * f_high)
    radii, mesh, res, flo, fhi = build(ratio, r1 * scale)
    if abs(flo / f_low - 1.0) > rel_tol or abs(fhi / f_high - 1.0) > rel_tol:
        warnings.warn(
            f"design search stopped at band {flo:.0f}..{fhi:.0f} Hz "
            f"(targets {f_low:.0f}..{f_high:.0f})",
            RuntimeWarning,
        )
    return radii, mesh, res


@dataclass(frozen=True)
class FilterBank:
    """Sampled causal band-pass kernels, one per array mode."""

    kernels: np.ndarray      # (n_channels, n_samples)
    sample_rate: float
    omegas: np.ndarray       # complex mode frequencies
    gains: np.ndarray        # amplitude factors c_n

    @property
    def n_channels(self) -> int:
        return self.kernels.shape[0]

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.kernels.shape[1]) / self.sample_rate

    def center_frequencies(self) -> np.ndarray:
        return self.omegas.real / (2.0 * np.pi)


def make_kernels(
    resonances: ResonanceSet,
    sample_rate: float,
    duration: float | None = None,
    decay_floor: float = 1e-4,
) -> FilterBank:
    """Causal damped-sine kernels c_n exp(Im w_n t) sin(Re w_n t), t >= 0.

    The sample rate must resolve the fastest mode; the duration defaults to
    the time for the slowest envelope to decay to ``decay_floor``.
    """
    om = resonances.omegas
    f_max = om.real.max() / (2.0 * np.pi)
    if sample_rate <= 2.0 * f_max:
        raise ValueError(f"sample rate {sample_rate} under the band limit {2 * f_max:.0f}")
    if np.any(om.imag >= 0.0):
        raise ValueError("kernels need strictly decaying modes")
    if resonances.nus is not None:
        gains = resonances.nus * om.real
    else:
        warnings.warn("modal weights unavailable; using unit-weight gains", RuntimeWarning)
        gains = om.real.astype(float)
    if duration is None:
        duration = math.log(1.0 / decay_floor) / np.abs(om.imag).min()
    n = int(math.ceil(duration * sample_rate))
    t = np.arange(n) / sample_rate
    kernels = gains[:, None] * np.exp(om.imag[:, None] * t[None, :]) * np.sin(
        om.real[:, None] * t[None, :]
    )
    return FilterBank(kernels=kernels, sample_rate=sample_rate, omegas=om, gains=gains)


@dataclass(frozen=True)
class Decomposition:
    """Channel coefficients a_n(t) of a decomposed signal."""

    coefficients: np.ndarray  # (n_channels, n_signal + n_kernel - 1)
    sample_rate: float
    n_signal: int

    @property
    def n_channels(self) -> int:
        return self.coefficients.shape[0]


def decompose(signal: np.ndarray, bank: FilterBank, sample_rate: float) -> Decomposition:
    """FFT convolution of the signal against every kernel channel."""
    if sample_rate != bank.sample_rate:
        raise ValueError("signal and kernel sample rates differ")
    signal = np.asarray(signal, dtype=float)
    coeffs = fftconvolve(signal[None, :], bank.kernels, mode="full", axes=1)
    return Decomposition(coeffs, sample_rate, signal.size)


def pressure_field(
    decomposition: Decomposition, mode_samples: np.ndarray
) -> np.ndarray:
    """Superpose channel coefficients with spatial mode samples.

    mode_samples[n, p] holds mode n at position p; returns the pressure
    trace (n_positions, n_times).
    """
    modes = np.asarray(mode_samples)
    if modes.shape[0] != decomposition.n_channels:
        raise ValueError("one mode sample row per channel is required")
    return modes.T @ decomposition.coefficients


def load_wav(path) -> tuple[np.ndarray, float]:
    """Read a PCM 16-bit mono WAV file into samples scaled to [-1, 1]."""
    try:
        with wave.open(str(path), "rb") as fh:
            if fh.getnchannels() != 1:
                raise ValueError("mono required")
            if fh.getsampwidth() != 2:
                raise ValueError("PCM 16-bit samples required")
            rate = fh.getframerate()
            raw = fh.readframes(fh.getnframes())
    except (wave.Error, EOFError) as exc:
        raise ValueError(f"malformed WAV file: {exc}") from exc
    samples = np.frombuffer(raw, dtype="<i2").astype(float) / 32768.0
    return samples, float(rate)
