"""Derived quantities of the driven chain: magnetization series, Fourier
spectra, spin-glass order, and lifetime extraction.

Everything here is pure post-processing over immutable time series; the
ensemble machinery that produces disorder-averaged tensors lives in
:mod:`floqlab.ensemble`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class TimeSeriesRecord:
    """Per-half-period observables of one run.

    ``m[k]`` is the spatially averaged magnetization at half-period index k
    (k = 0 is the initial state); ``correlators`` is optional to keep
    long-time runs lean.
    """

    times: np.ndarray              # ns, length n+1
    site_z: np.ndarray             # (n+1, L)
    m: np.ndarray                  # (n+1,)
    chi_sg: np.ndarray             # (n+1,)
    correlators: np.ndarray | None = None   # (n+1, L, L)
    config_hash: str = ""
    seed: int | None = None

    def __post_init__(self):
        n = len(self.times)
        if not (len(self.m) == n == len(self.chi_sg) == self.site_z.shape[0]):
            raise ValueError("series lengths disagree")
        if np.max(np.abs(self.m - self.site_z.mean(axis=1))) > 1e-12:
            raise ValueError("m must equal the mean of the per-site values")
        if self.correlators is not None:
            chi = np.array([spin_glass_order(c) for c in self.correlators])
            if np.max(np.abs(chi - self.chi_sg)) > 1e-12:
                raise ValueError("chi_sg inconsistent with stored correlators")

    @property
    def n_half_periods(self) -> int:
        return len(self.m) - 1

    @property
    def n_sites(self) -> int:
        return self.site_z.shape[1]

    def staggered_m(self) -> np.ndarray:
        """(-1)^k * m(k): removes the deliberate flip, exposing the envelope."""
        return staggered(self.m)


@dataclass
class Spectrum:
    """Magnitude FFT of a magnetization series sampled at half periods.

    Frequencies are in cycles per sample, so a perfect alternating response
    sits at 0.5.
    """

    frequencies: np.ndarray
    magnitude: np.ndarray
    n_samples: int
    n_padded: int

    @property
    def peak_frequency(self) -> float:
        return float(self.frequencies[int(np.argmax(self.magnitude))])


def staggered(series: np.ndarray) -> np.ndarray:
    """Multiply a half-period series by (-1)^index."""
    series = np.asarray(series)
    signs = 1.0 - 2.0 * (np.arange(len(series)) % 2)
    return series * signs


def spin_glass_order(correlators: np.ndarray) -> float:
    """Spin-glass order chi = 1 + (2/L) sum_{i<j} <sigma^z_i sigma^z_j>^2.

    Extensive (equals L) when every pair is perfectly correlated, 1 when
    all off-diagonal correlations vanish.
    """
    c = np.asarray(correlators, dtype=float)
    if c.ndim != 2 or c.shape[0] != c.shape[1]:
        raise ValueError(f"correlator matrix must be square, got shape {c.shape}")
    if np.max(np.abs(c - c.T)) > 1e-9:
        raise ValueError("correlator matrix must be symmetric")
    if np.max(np.abs(c)) > 1.0 + 1e-9:
        raise ValueError("correlator entries must lie in [-1, 1]")
    L = c.shape[0]
    upper = np.triu_indices(L, k=1)
    return float(1.0 + (2.0 / L) * np.sum(c[upper] ** 2))


def magnetization_spectrum(series: np.ndarray, use_half_periods: bool = True) -> Spectrum:
    """Magnitude FFT of the magnetization sequence.

    Rectangular window, zero-padded to the next power of two >= 4x the
    series length. With ``use_half_periods`` false only even indices
    (complete periods) are transformed.
    """
    m = np.asarray(series, dtype=float)
    if not use_half_periods:
        m = m[::2]
    n = len(m)
    if n < 8:
        raise ValueError(f"series too short for a spectrum: {n} < 8 samples")
    n_pad = 1 << int(np.ceil(np.log2(4 * n)))
    mag = np.abs(np.fft.rfft(m, n=n_pad))
    freqs = np.fft.rfftfreq(n_pad, d=1.0)
    return Spectrum(frequencies=freqs, magnitude=mag, n_samples=n, n_padded=n_pad)


def spectral_peaks(spectrum: Spectrum, rel_height: float = 0.25,
                   band: tuple[float, float] = (0.35, 0.65)) -> list[float]:
    """Frequencies of local maxima within ``band`` exceeding ``rel_height`` x global peak."""
    mag = spectrum.magnitude
    mask = (spectrum.frequencies >= band[0]) & (spectrum.frequencies <= band[1])
    threshold = rel_height * float(mag.max())
    idx = np.where(mask)[0]
    peaks = []
    for k in idx:
        if mag[k] < threshold:
            continue
        left = mag[k - 1] if k > 0 else -np.inf
        right = mag[k + 1] if k + 1 < len(mag) else -np.inf
        if mag[k] > left and mag[k] >= right:
            peaks.append(float(spectrum.frequencies[k]))
    return peaks


def extract_lifetime(series: np.ndarray, window: int = 64, threshold: float = 0.1,
                     alternating: bool = True) -> int:
    """Sample index at which the running RMS envelope has decayed.

    The input is staggered by (-1)^k first (disable with ``alternating=False``
    for signals like chi_sg - 1 that carry no deliberate flip). Returns the
    smallest index k >= window-1 where the RMS over the trailing window drops
    below ``threshold`` times the RMS of the first full window, or the series
    length if it never does. The index counts samples (half periods for
    half-period-sampled input; divide by two for complete periods).
    """
    s = np.asarray(series, dtype=float)
    if len(s) < window:
        raise ValueError(f"series of length {len(s)} is shorter than one window ({window})")
    if alternating:
        s = staggered(s)
    sq = s**2
    csum = np.concatenate(([0.0], np.cumsum(sq)))
    rms = np.sqrt((csum[window:] - csum[:-window]) / window)  # rms[j] ends at index j+window-1
    ref = threshold * rms[0]
    below = np.where(rms < ref)[0]
    if len(below) == 0:
        return len(s)
    return int(below[0]) + window - 1


def log_decimate_indices(n: int, points_per_decade: int = 60) -> np.ndarray:
    """Log-spaced subset of range(n) that always retains {0, 1, n-1}."""
    if n <= 2:
        return np.arange(n)
    n_points = max(int(np.log10(n - 1) * points_per_decade), 2)
    grid = np.unique(np.round(np.logspace(0.0, np.log10(n - 1), n_points)).astype(int))
    return np.unique(np.concatenate(([0, 1, n - 1], grid)))
