"""Deterministic synthetic signals for demos, experiments, and tests."""

from __future__ import annotations

import numpy as np

from .signal_io import AudioBuffer


def tone(freq_hz: float, duration_s: float, sample_rate_hz: int = 16000,
         amplitude: float = 0.5) -> AudioBuffer:
    """A plain sine tone."""
    t = np.arange(round(duration_s * sample_rate_hz)) / sample_rate_hz
    return AudioBuffer(amplitude * np.sin(2.0 * np.pi * freq_hz * t), sample_rate_hz)


def speech_like(duration_s: float = 1.5, sample_rate_hz: int = 16000,
                seed: int = 0, peak: float = 0.5) -> AudioBuffer:
    """A harmonic pseudo-utterance: a wandering pitch drives a harmonic stack
    shaped by fixed resonances, gated by a syllable-rate envelope with sharp
    onsets, plus a little hiss. Deterministic per seed."""
    rng = np.random.default_rng(seed)
    n = round(duration_s * sample_rate_hz)
    t = np.arange(n) / sample_rate_hz

    pitch_rate = rng.uniform(0.4, 1.2)
    pitch_phase = rng.uniform(0.0, 2.0 * np.pi)
    # Keep f0 at or below ~150 Hz: harmonics then stay dense enough that the
    # narrow low-frequency mel bands never straddle an empty stretch of bins.
    f0 = 115.0 * (1.0 + 0.18 * np.sin(2.0 * np.pi * pitch_rate * t + pitch_phase)) \
        + rng.uniform(-12.0, 12.0)
    theta = 2.0 * np.pi * np.cumsum(f0) / sample_rate_hz

    resonances = np.array([500.0, 1500.0, 2500.0]) * rng.uniform(0.85, 1.15, size=3)
    bandwidths = np.array([220.0, 280.0, 350.0])
    f0_mean = float(f0.mean())
    voiced = np.zeros(n)
    max_harmonic = int(3800.0 / f0_mean)
    for h in range(1, max_harmonic + 1):
        freq = h * f0_mean
        gain = 0.08 + np.sum(np.exp(-0.5 * ((freq - resonances) / bandwidths) ** 2))
        phase = rng.uniform(0.0, 2.0 * np.pi)
        voiced += (gain / h ** 0.5) * np.cos(h * theta + phase)

    syllable_rate = rng.uniform(2.0, 3.5)
    gate = np.sin(np.pi * syllable_rate * t + rng.uniform(0.0, np.pi)) ** 2
    envelope = 0.05 + 0.95 * gate ** 3  # cubing sharpens the onsets
    hiss = rng.standard_normal(n)
    hiss = np.convolve(hiss, np.ones(4) / 4.0, mode="same")

    x = envelope * voiced + 0.01 * hiss
    return AudioBuffer(peak * x / np.max(np.abs(x)), sample_rate_hz)
