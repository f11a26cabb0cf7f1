import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spherefdn.acoustics import ModeSeries, SphereSpec
from spherefdn.allpass import LoopDesign
from spherefdn.analysis import (
    Peak,
    Spectrum,
    find_peaks,
    magnitude_spectrum,
    match_and_score,
    reference_modes,
    verify_fdn_against_theory,
)
from spherefdn.fdn import build_sphere_fdn, render

from published import BALL

FS = 44100.0
N = 8192


def test_impulse_is_flat():
    x = np.zeros(N)
    x[0] = 1.0
    s = magnitude_spectrum(x, FS)
    assert np.max(np.abs(s.db)) < 1e-9
    assert s.resolution == FS / N


def test_bin_centred_sinusoid():
    k = 300
    x = np.sin(2 * math.pi * k * np.arange(N) / N)
    s = magnitude_spectrum(x, FS, N)
    assert int(np.argmax(s.magnitude)) == k
    assert np.sort(s.magnitude)[-2] < 1e-9 * s.magnitude[k]


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31 - 1), st.sampled_from([4096, 8192, 16384]))
def test_parseval(seed, n):
    x = np.random.default_rng(seed).standard_normal(n)
    s = magnitude_spectrum(x, FS, n)
    full = np.concatenate([s.magnitude, s.magnitude[1:-1][::-1]])
    assert np.sum(x**2) == pytest.approx(np.mean(full**2), rel=1e-6)


def test_spectrum_preconditions():
    with pytest.raises(ValueError):
        magnitude_spectrum(np.zeros(1000), FS)
    with pytest.raises(ValueError):
        magnitude_spectrum(np.zeros(10000), FS, 6000)
    with pytest.raises(ValueError):
        magnitude_spectrum(np.zeros(5000), FS, 8192)
    assert magnitude_spectrum(np.zeros(10000), FS).fft_size == 8192


def test_flat_spectrum_has_no_peaks():
    s = Spectrum(np.arange(100.0), np.ones(100), 198, 198.0)
    assert find_peaks(s) == []
    with pytest.raises(ValueError):
        find_peaks(s, 0.0)


def test_lorentzian_peaks_recovered():
    bins = np.arange(2049, dtype=float)
    centres = [400.3, 1210.7]
    mag = 1e-3 + sum(1.0 / (1.0 + ((bins - c) / 3.0) ** 2) for c in centres)
    s = Spectrum(bins * FS / 4096, mag, 4096, FS)
    got = [p.frequency / s.resolution for p in find_peaks(s)]
    assert len(got) == 2
    assert got == pytest.approx(centres, abs=0.2)


@settings(max_examples=20, deadline=None)
@given(st.floats(200.0, 15000.0))
def test_sinusoid_refinement(f):
    n = np.arange(N)
    x = np.sin(2 * math.pi * f * n / FS) * np.hanning(N)
    s = magnitude_spectrum(x, FS, N)
    p = max(find_peaks(s), key=lambda p: p.level_db)
    assert abs(p.frequency - f) < 0.2 * s.resolution


@pytest.mark.parametrize("delay", [50, 73, 128])
def test_comb_peak_count_and_positions(delay):
    cfg = build_sphere_fdn([LoopDesign(delay, n_pole_pairs=0)], loop_gain=0.99)
    s = magnitude_spectrum(render(cfg, seconds=1.0), FS)
    lo, hi = 100.0, 8000.0
    peaks = find_peaks(s, min_freq=lo, max_freq=hi)
    expected = math.floor(hi * delay / FS) - math.floor(lo * delay / FS)
    assert abs(len(peaks) - expected) <= 1
    for p in peaks:
        k = round(p.frequency * delay / FS)
        assert abs(p.frequency - k * FS / delay) <= s.resolution


def test_sharpness_values():
    r = match_and_score([Peak(400.0, 0.0), Peak(1810.0, 0.0)], [(340.0, (1, 1)), (1810.0, (9, 2))], window_percent=20)
    sharp = {m.label: m.sharpness_percent for m in r.matches}
    assert sharp[(1, 1)] == pytest.approx(100 * 60 / 340)
    assert round(sharp[(1, 1)], 1) == 17.6
    assert sharp[(9, 2)] == 0.0


def test_published_ball_sharpness_recomputed():
    # the printed column rounds differently; recompute from the raw frequencies
    for n, (fm, fth) in BALL.items():
        r = match_and_score([Peak(float(fm), 0.0)], [(float(fth), (n, 2))], window_percent=20)
        assert r.matches[0].sharpness_percent == pytest.approx(100 * (fm - fth) / fth)


def test_identical_lists_zero_sharpness():
    refs = [ModeSeries(0, (0.0, 500.0, 900.0)), ModeSeries(1, (300.0, 1200.0))]
    peaks = [Peak(f, 0.0) for f, _ in reference_modes(refs)]
    r = match_and_score(peaks, refs)
    assert all(m.sharpness_percent == 0.0 for m in r.matches) and not r.unmatched
    assert r.passes(0.0)
    assert all(f > 0 for f, _ in r.references)  # dc excluded


def test_window_excludes_far_peaks():
    r = match_and_score([Peak(1000.0, 0.0)], [(1100.0, (0, 2))])
    assert r.unmatched == ((1100.0, (0, 2)),) and not r.passes(100.0)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(100, 4000), min_size=1, max_size=12), st.lists(st.floats(100, 4000), min_size=1, max_size=8))
def test_relabelling_symmetry(peak_f, ref_f):
    peaks = [Peak(f, 0.0) for f in sorted(peak_f)]
    refs = [(f, ("a", i)) for i, f in enumerate(ref_f)]
    relabelled = [(f, ("b", i)) for i, f in enumerate(ref_f)]
    one = match_and_score(peaks, refs)
    two = match_and_score(peaks, relabelled)
    assert [m.f_measured for m in one.matches] == [m.f_measured for m in two.matches]
    assert match_and_score(peaks, refs) == one


@pytest.fixture(scope="module")
def ideal(sphere188_designs):
    return build_sphere_fdn(sphere188_designs, loop_gain=0.997)


def test_verify_ideal_sphere(ideal, sphere188):
    ok, report = verify_fdn_against_theory(ideal, sphere188, 3.0)
    assert ok and not report.unmatched


def test_verify_detuned_sphere_fails(sphere188_designs, sphere188):
    detuned = [replace(d, first_pole_angle=1.1 * d.first_pole_angle) for d in sphere188_designs]
    ok, report = verify_fdn_against_theory(build_sphere_fdn(detuned, loop_gain=0.997), sphere188, 3.0)
    assert not ok and report.failures(3.0)


def test_verify_monotone_in_tolerance(sphere188_designs, sphere188):
    detuned = [replace(d, first_pole_angle=1.05 * d.first_pole_angle) for d in sphere188_designs]
    cfg = build_sphere_fdn(detuned, loop_gain=0.997)
    outcomes = [verify_fdn_against_theory(cfg, sphere188, tol)[0] for tol in (0.5, 1, 2, 3, 5, 10, 100)]
    assert outcomes == sorted(outcomes)  # False ... False True ... True
    assert outcomes[-1]


def test_verify_rejects_short_render(ideal, sphere188):
    with pytest.raises(ValueError):
        verify_fdn_against_theory(ideal, sphere188, 3.0, seconds=1.0)
