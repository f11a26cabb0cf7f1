"""Spectra of impulse responses, peak picking and comparison with mode lists."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.signal

from .acoustics import ModeSeries, SphereSpec, sphere_mode_series
from .fdn import FdnConfig, render

PAIRING_WINDOW_PERCENT = 6.0
DEFAULT_PROMINENCE_DB = 3.0
MIN_FFT = 4096


@dataclass(frozen=True)
class Spectrum:
    freqs: np.ndarray
    magnitude: np.ndarray  # linear |X(k)|, one-sided
    fft_size: int
    sample_rate: float

    @property
    def db(self) -> np.ndarray:
        return 20.0 * np.log10(np.maximum(self.magnitude, 1e-300))

    @property
    def resolution(self) -> float:
        return self.sample_rate / self.fft_size


@dataclass(frozen=True)
class Peak:
    frequency: float
    level_db: float


@dataclass(frozen=True)
class Match:
    f_measured: float
    f_theory: float
    label: tuple

    @property
    def sharpness_percent(self) -> float:
        return 100.0 * (self.f_measured - self.f_theory) / self.f_theory


@dataclass(frozen=True)
class SpectrumReport:
    peaks: tuple[Peak, ...]
    references: tuple[tuple[float, tuple], ...]
    matches: tuple[Match, ...]
    unmatched: tuple[tuple[float, tuple], ...] = field(default_factory=tuple)

    def passes(self, tolerance_percent: float) -> bool:
        return not self.unmatched and all(abs(m.sharpness_percent) <= tolerance_percent for m in self.matches)

    def failures(self, tolerance_percent: float) -> list[tuple[float, tuple]]:
        bad = [(m.f_theory, m.label) for m in self.matches if abs(m.sharpness_percent) > tolerance_percent]
        return sorted(bad + list(self.unmatched))


def magnitude_spectrum(signal, sample_rate: float, fft_size: int | None = None) -> Spectrum:
    """Single-frame magnitude spectrum of the first ``fft_size`` samples.

    Without ``fft_size`` the largest power of two not exceeding the signal
    length is used.
    """
    x = np.asarray(signal, dtype=float)
    if fft_size is None:
        if x.size < MIN_FFT:
            raise ValueError(f"signal has {x.size} samples, need at least {MIN_FFT}")
        fft_size = 1 << int(math.floor(math.log2(x.size)))
    if fft_size < MIN_FFT or fft_size & (fft_size - 1):
        raise ValueError(f"fft_size must be a power of two >= {MIN_FFT}, got {fft_size}")
    if x.size < fft_size:
        raise ValueError(f"signal has {x.size} samples, fewer than fft_size {fft_size}")
    mag = np.abs(np.fft.rfft(x[:fft_size]))
    freqs = np.fft.rfftfreq(fft_size, 1.0 / sample_rate)
    return Spectrum(freqs, mag, fft_size, float(sample_rate))


def find_peaks(
    spectrum: Spectrum,
    min_prominence_db: float = DEFAULT_PROMINENCE_DB,
    min_freq: float = 0.0,
    max_freq: float | None = None,
) -> list[Peak]:
    """Prominent local maxima of the dB spectrum, refined by a parabola through three bins."""
    if min_prominence_db <= 0:
        raise ValueError("prominence must be positive")
    db = spectrum.db
    idx, _ = scipy.signal.find_peaks(db, prominence=min_prominence_db)
    hi = math.inf if max_freq is None else max_freq
    out = []
    for i in idx:
        if i == 0 or i == db.size - 1:
            continue
        a, b, c = db[i - 1], db[i], db[i + 1]
        denom = a - 2.0 * b + c
        delta = 0.0 if denom == 0 else 0.5 * (a - c) / denom
        f = (i + delta) * spectrum.resolution
        if min_freq <= f <= hi:
            out.append(Peak(float(f), float(b - 0.25 * (a - c) * delta)))
    return out


def reference_modes(series: Sequence[ModeSeries], max_index: int | None = None, f_max: float | None = None):
    """(frequency, (label, s)) pairs, s 1-based within each series, dc excluded."""
    refs = []
    for ser in series:
        for s, f in enumerate(ser.frequencies, start=1):
            if f <= 0.0 or (max_index is not None and s > max_index) or (f_max is not None and f >= f_max):
                continue
            refs.append((float(f), (ser.label, s)))
    return sorted(refs, key=lambda r: r[0])


def match_and_score(peaks: Sequence[Peak], references, window_percent: float = PAIRING_WINDOW_PERCENT) -> SpectrumReport:
    """Pair each reference with its nearest detected peak inside the window.

    ``references`` is a list of ModeSeries or of (frequency, label) pairs.
    Closely spaced references may share one peak: degenerate modes of
    different orders render as a single spectral line.
    """
    refs = list(references)
    if refs and isinstance(refs[0], ModeSeries):
        refs = reference_modes(refs)
    refs = [(float(f), label) for f, label in refs if f > 0.0]
    pf = np.array([p.frequency for p in peaks])
    matches, unmatched = [], []
    for f, label in refs:
        if pf.size:
            j = int(np.argmin(np.abs(pf - f)))
            if abs(pf[j] - f) <= window_percent / 100.0 * f:
                matches.append(Match(float(pf[j]), f, label))
                continue
        unmatched.append((f, label))
    return SpectrumReport(tuple(peaks), tuple(refs), tuple(matches), tuple(unmatched))


def verify_fdn_against_theory(
    config: FdnConfig,
    spec: SphereSpec,
    tolerance_percent: float,
    seconds: float = 2.0,
    f_max: float = 4000.0,
    max_index: int = 4,
    references=None,
) -> tuple[bool, SpectrumReport]:
    """Render the impulse response and check every theoretical f_ns below ``f_max``.

    ``references`` overrides the theoretical list (e.g. measured values).
    """
    if seconds < 2.0:
        raise ValueError("renders shorter than 2 s are not used for verification")
    y = render(config, seconds=seconds)
    if not np.all(np.isfinite(y)) or np.max(np.abs(y)) > 1e6:
        raise FloatingPointError("impulse response diverged; the network is unstable")
    spectrum = magnitude_spectrum(y, config.sample_rate)
    peaks = find_peaks(spectrum, max_freq=f_max * 1.1)
    if references is None:
        references = reference_modes(sphere_mode_series(spec), max_index=max_index, f_max=f_max)
    window = max(PAIRING_WINDOW_PERCENT, tolerance_percent)
    report = match_and_score(peaks, references, window_percent=window)
    return report.passes(tolerance_percent), report
