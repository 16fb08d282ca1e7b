"""Graded-array filter bank: spectrum shape, kernels, decomposition."""

import wave

import numpy as np
import pytest

from resona.cochlea import (
    decompose,
    design_graded_array,
    load_wav,
    make_kernels,
    pressure_field,
)


@pytest.fixture(scope="module")
def designed():
    return design_graded_array(refinement=0)


@pytest.fixture(scope="module")
def bank(designed):
    _, _, res = designed
    return make_kernels(res, 44100.0)


class TestDesign:
    def test_channel_count_and_signs(self, designed):
        _, _, res = designed
        assert res.n == 22
        assert np.all(res.omegas.imag < 0.0)
        assert np.all(np.diff(res.omegas.real) > 0.0)

    def test_band_edges_within_ten_percent(self, designed):
        _, _, res = designed
        f = res.omegas.real / (2 * np.pi)
        assert abs(f[0] / 500.0 - 1.0) < 0.10
        assert abs(f[-1] / 10_000.0 - 1.0) < 0.10

    def test_radii_increase(self, designed):
        radii, _, _ = designed
        assert np.all(np.diff(radii) > 0.0)


class TestKernels:
    def test_causality_exact(self, bank):
        assert np.all(bank.kernels[:, 0] == 0.0)
        t = bank.times
        envelope = np.abs(bank.gains[:, None]) * np.exp(
            bank.omegas.imag[:, None] * t[None, :]
        )
        assert np.all(np.abs(bank.kernels) <= envelope + 1e-300)

    def test_spectral_peaks_match_mode_frequencies(self, bank):
        spec = np.abs(np.fft.rfft(bank.kernels, axis=1))
        freqs = np.fft.rfftfreq(bank.kernels.shape[1], 1.0 / bank.sample_rate)
        peaks = freqs[np.argmax(spec, axis=1)]
        rel = np.abs(peaks - bank.center_frequencies()) / bank.center_frequencies()
        assert rel.max() < 0.02

    def test_envelope_decay_rate(self, bank):
        # sample the envelope at per-cycle amplitude peaks (a transform-based
        # envelope would carry leakage from the causal onset step)
        n = bank.n_channels // 2
        kernel = bank.kernels[n]
        t = bank.times
        period = int(round(bank.sample_rate * 2 * np.pi / bank.omegas.real[n]))
        usable = len(kernel) // period * period
        peaks = np.abs(kernel[:usable].reshape(-1, period)).max(axis=1)
        tt = t[:usable].reshape(-1, period).mean(axis=1)
        slope = np.polyfit(tt[2:300], np.log(peaks[2:300]), 1)[0]
        assert slope == pytest.approx(bank.omegas.imag[n], rel=0.02)

    def test_nyquist_guard(self, designed):
        _, _, res = designed
        with pytest.raises(ValueError):
            make_kernels(res, 2_000.0)


class TestDecomposition:
    def test_zero_signal_zero_coefficients(self, bank):
        dec = decompose(np.zeros(512), bank, 44100.0)
        assert np.all(dec.coefficients == 0.0)

    def test_linearity(self, bank, rng):
        s1 = rng.normal(size=700)
        s2 = rng.normal(size=700)
        d1 = decompose(s1, bank, 44100.0).coefficients
        d2 = decompose(s2, bank, 44100.0).coefficients
        d12 = decompose(s1 + s2, bank, 44100.0).coefficients
        assert np.abs(d12 - d1 - d2).max() < 1e-10 * np.abs(d1).max()

    def test_fft_matches_direct_convolution(self, bank, rng):
        signal = rng.normal(size=1024)
        dec = decompose(signal, bank, 44100.0)
        for n in (0, bank.n_channels - 1):
            direct = np.convolve(signal, bank.kernels[n])
            assert np.abs(dec.coefficients[n] - direct).max() < 1e-10 * np.abs(direct).max()

    def test_rate_mismatch_rejected(self, bank):
        with pytest.raises(ValueError):
            decompose(np.zeros(16), bank, 48000.0)

    def test_tone_selectivity_all_channels(self, bank):
        fs = bank.sample_rate
        t = np.arange(int(0.3 * fs)) / fs
        sel = slice(int(0.15 * fs), int(0.3 * fs))
        for m in range(bank.n_channels):
            tone = np.sin(2 * np.pi * bank.center_frequencies()[m] * t)
            dec = decompose(tone, bank, fs)
            rms = np.sqrt((dec.coefficients[:, sel] ** 2).mean(axis=1))
            assert int(np.argmax(rms)) == m


class TestPressureField:
    def test_single_channel_forcing(self, bank, designed):
        _, _, res = designed
        dec = decompose(np.sin(np.arange(600) / 5.0), bank, 44100.0)
        modes = np.zeros((bank.n_channels, 4))
        modes[3, 2] = 2.0
        p = pressure_field(dec, modes)
        assert np.allclose(p[2], 2.0 * dec.coefficients[3])
        assert np.all(p[[0, 1, 3]] == 0.0)

    def test_causality_propagates(self, bank):
        signal = np.zeros(2048)
        signal[1024:] = 1.0
        dec = decompose(signal, bank, 44100.0)
        modes = np.ones((bank.n_channels, 1))
        p = pressure_field(dec, modes)
        # zero before onset up to transform round-off
        assert np.abs(p[0, :1024]).max() < 1e-9 * np.abs(p).max()

    def test_tonotopy_monotone(self, bank, designed):
        # the excitation peak moves monotonically across channels with the
        # tone frequency (the channel eigenvectors localize on resonators)
        _, _, res = designed
        fs = bank.sample_rate
        t = np.arange(int(0.25 * fs)) / fs
        modes = np.abs(res.vectors.T)  # channel n sampled on the resonators
        peaks = []
        for f in bank.center_frequencies()[[2, 10, 19]]:
            dec = decompose(np.sin(2 * np.pi * f * t), bank, fs)
            p = pressure_field(dec, modes)
            window = p[:, int(0.12 * fs) : int(0.25 * fs)]
            peaks.append(int(np.argmax(np.sqrt((window**2).mean(axis=1)))))
        assert peaks == sorted(peaks) or peaks == sorted(peaks, reverse=True)
        assert len(set(peaks)) == 3


class TestWavInput:
    def _write(self, path, rate, data, channels=1):
        with wave.open(str(path), "wb") as fh:
            fh.setnchannels(channels)
            fh.setsampwidth(2)
            fh.setframerate(rate)
            fh.writeframes(data.astype("<i2").tobytes())

    def test_synthetic_tone_round_trip(self, tmp_path):
        fs = 44100
        t = np.arange(fs) / fs
        tone = (32767 * np.sin(2 * np.pi * 440.0 * t)).astype(np.int16)
        path = tmp_path / "tone.wav"
        self._write(path, fs, tone)
        samples, rate = load_wav(path)
        assert rate == fs
        assert samples.size == fs
        assert np.abs(samples).max() == pytest.approx(1.0, abs=1e-3)

    def test_stereo_rejected(self, tmp_path):
        path = tmp_path / "stereo.wav"
        data = np.zeros(64, dtype=np.int16)
        self._write(path, 8000, data, channels=2)
        with pytest.raises(ValueError, match="mono"):
            load_wav(path)

    def test_truncated_header_rejected(self, tmp_path):
        path = tmp_path / "bad.wav"
        path.write_bytes(b"RIFF\x00\x00")
        with pytest.raises(ValueError):
            load_wav(path)
