"""Spectral analysis of rendered audio: windowed FFT peak listings.

Used by the test suite as an independent check on frequency mappings and
FM sideband structure.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class SpectralPeak:
    frequency: float
    magnitude_db: float  # dBFS relative to a full-scale sine


@dataclass(frozen=True)
class WindowReport:
    start_frame: int
    peaks: tuple[SpectralPeak, ...]


def spectrum(mono: np.ndarray, sample_rate: int) -> tuple[np.ndarray, np.ndarray]:
    """Hann-windowed magnitude spectrum, normalized so a full-scale sine
    reads 1.0 at its bin. Returns (frequencies, magnitudes)."""
    n = len(mono)
    window = np.hanning(n)
    spec = np.abs(np.fft.rfft(mono * window))
    # full-scale sine under a Hann window integrates to n/4 at its bin
    spec = spec / (n / 4.0)
    freqs = np.fft.rfftfreq(n, d=1.0 / sample_rate)
    return freqs, spec


def find_peaks(
    freqs: np.ndarray, mags: np.ndarray, floor_db: float = -90.0, max_peaks: int = 16
) -> tuple[SpectralPeak, ...]:
    """Local spectral maxima above the floor, strongest first."""
    floor = 10.0 ** (floor_db / 20.0)
    candidates = []
    for i in range(1, len(mags) - 1):
        if mags[i] > floor and mags[i] >= mags[i - 1] and mags[i] > mags[i + 1]:
            candidates.append(i)
    candidates.sort(key=lambda i: -mags[i])
    peaks = tuple(
        SpectralPeak(frequency=float(freqs[i]), magnitude_db=float(20.0 * np.log10(mags[i])))
        for i in candidates[:max_peaks]
    )
    return peaks


def analyze(audio: np.ndarray, sample_rate: int, window: int = 8192) -> list[WindowReport]:
    """Non-overlapping windowed peak analysis of a stereo (or mono) buffer."""
    if audio.ndim == 2:
        mono = audio.mean(axis=1)
    else:
        mono = audio
    reports = []
    for start in range(0, len(mono) - window + 1, window):
        freqs, mags = spectrum(mono[start : start + window], sample_rate)
        reports.append(WindowReport(start_frame=start, peaks=find_peaks(freqs, mags)))
    if not reports and len(mono):
        freqs, mags = spectrum(mono, sample_rate)
        reports.append(WindowReport(start_frame=0, peaks=find_peaks(freqs, mags)))
    return reports


def magnitude_at(mono: np.ndarray, sample_rate: int, frequency: float) -> float:
    """Windowed magnitude at the bin nearest `frequency` (linear scale)."""
    freqs, mags = spectrum(mono, sample_rate)
    return float(mags[int(np.argmin(np.abs(freqs - frequency)))])


def band_magnitude(mono: np.ndarray, sample_rate: int, frequency: float, half_bins: int = 4) -> float:
    """Leakage-robust tone magnitude: energy summed over +/-half_bins around
    the nearest bin. Immune to Hann scalloping, so ratios between tones are
    accurate even off bin centers."""
    freqs, mags = spectrum(mono, sample_rate)
    center = int(np.argmin(np.abs(freqs - frequency)))
    lo, hi = max(0, center - half_bins), min(len(mags), center + half_bins + 1)
    return float(np.sqrt(np.sum(mags[lo:hi] ** 2)))
