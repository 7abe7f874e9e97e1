"""Sequence timing and filter-function behavior."""

import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

import mwnoise as mw
from mwnoise.pulse_sequences import band_integral_weighted

T_PI = 48e-9
T_DEAD = 15e-6


def _xy8_table_row():
    return mw.make_xy8(8, 458e3, T_PI, T_DEAD)


# --- timing -----------------------------------------------------------------

def test_xy8_458khz_timing():
    seq = _xy8_table_row()
    assert seq.n_pi == 64
    assert seq.n_repeats == 8
    assert seq.tau == pytest.approx(522e-9, rel=1e-3)
    assert seq.tau_tot == pytest.approx(69.9e-6, rel=1e-3)
    # Pulse spacing reproduces the requested center frequency exactly.
    assert 2.0 * seq.tau + seq.t_pi == pytest.approx(1.0 / (2.0 * 458e3), rel=1e-12)
    assert seq.f_center == pytest.approx(458e3, rel=1e-12)


def test_xy8_394khz_timing():
    seq = mw.make_xy8(7, 394e3, 46e-9, T_DEAD)
    assert seq.n_pi == 56
    assert seq.tau == pytest.approx(612e-9, rel=1e-3)
    assert seq.tau_tot == pytest.approx(71.1e-6, rel=1e-3)


def test_delta_pulse_timing_identity():
    seq = mw.make_xy8(1, 500e3, 0.0, 0.0)
    assert seq.tau == pytest.approx(500e-9, rel=1e-12)
    assert seq.tau_tot == pytest.approx(8e-6, rel=1e-12)
    # t_pi = 0 collapses the duration rule to 2*N*tau.
    assert seq.tau_tot == pytest.approx(2 * seq.n_pi * seq.tau, rel=1e-12)


def test_tau_tot_composition():
    rng = np.random.default_rng(3)
    for _ in range(20):
        n_pi = int(rng.integers(1, 65))
        tau = float(rng.uniform(1e-7, 2e-6))
        t_pi = float(rng.uniform(0.0, 1e-7))
        seq = mw.PulseSequence(mw.SequenceKind.CPMG, n_pi, tau, t_pi)
        assert seq.tau_tot == pytest.approx(n_pi * (2 * tau + t_pi), rel=1e-12)
        assert seq.f_center == pytest.approx(1.0 / (2 * (2 * tau + t_pi)), rel=1e-12)
        assert seq.f_center == pytest.approx(n_pi / (2 * seq.tau_tot), rel=1e-12)


def test_sample_rate_and_duty():
    seq = _xy8_table_row()
    assert seq.f_samp == pytest.approx(1.0 / (seq.tau_tot + T_DEAD), rel=1e-12)
    assert seq.f_samp == pytest.approx(11.78e3, rel=1e-3)
    assert seq.duty == pytest.approx(seq.tau_tot / (seq.tau_tot + T_DEAD), rel=1e-12)
    no_dead = mw.make_xy8(8, 458e3, T_PI, 0.0)
    assert no_dead.duty == 1.0
    assert no_dead.f_samp == pytest.approx(1.0 / no_dead.tau_tot, rel=1e-12)


def test_pulse_times_layout():
    seq = _xy8_table_row()
    times = seq.pulse_times()
    period = 2 * seq.tau + seq.t_pi
    assert times.shape == (64,)
    assert times[0] == pytest.approx(period / 2, rel=1e-12)
    assert_allclose(np.diff(times), period, rtol=1e-12)
    assert times[-1] < seq.tau_tot


def test_fixed_duration_round_trip():
    seq = mw.make_xy8_fixed_duration(8, 70e-6, T_PI, T_DEAD)
    assert seq.n_pi == 64
    assert seq.tau_tot == pytest.approx(70e-6, rel=1e-12)
    again = mw.make_xy8(8, seq.f_center, T_PI, T_DEAD)
    assert again.tau == pytest.approx(seq.tau, rel=1e-12)


def test_sequence_validation():
    with pytest.raises(ValueError):
        mw.PulseSequence(mw.SequenceKind.CPMG, 0, 1e-6)
    with pytest.raises(ValueError):
        mw.PulseSequence(mw.SequenceKind.CPMG, 8, 0.0)
    with pytest.raises(ValueError):
        mw.PulseSequence(mw.SequenceKind.CPMG, 8, 1e-6, t_pi=-1e-9)
    with pytest.raises(ValueError):
        mw.PulseSequence(mw.SequenceKind.CPMG, 8, 1e-6, t_dead=-1e-6)
    # XY8 needs a whole number of 8-pulse blocks.
    with pytest.raises(ValueError):
        mw.PulseSequence(mw.SequenceKind.XY8, 12, 1e-6)
    # Pulses longer than the half-period overlap.
    with pytest.raises(ValueError):
        mw.make_xy8(1, 500e3, t_pi=1.1e-6)
    with pytest.raises(ValueError):
        mw.make_cpmg(4, 500e3, t_pi=1.1e-6)


# --- filter function ----------------------------------------------------------

def test_filter_dc_insensitivity():
    for n_pi, t_pi in ((8, 0.0), (64, T_PI), (24, 30e-9)):
        seq = mw.PulseSequence(mw.SequenceKind.CPMG, n_pi, 500e-9, t_pi)
        for finite in (False, True):
            ff = mw.FilterFunction(seq, finite_pulse_correction=finite)
            assert abs(float(mw.filter_function_value(ff, 0.0))) < 1e-18 * n_pi**2


def test_filter_first_harmonic_value():
    # At f1 = N/(2 tau_tot) the delta-pulse response evaluates to 4 N^2.
    for n_pi in (8, 16, 32, 64):
        seq = mw.PulseSequence(mw.SequenceKind.CPMG, n_pi, 69.9e-6 / (2 * n_pi))
        ff = mw.FilterFunction(seq, finite_pulse_correction=False)
        f1 = n_pi / (2.0 * seq.tau_tot)
        assert float(mw.filter_function_value(ff, f1)) == pytest.approx(
            4.0 * n_pi**2, rel=1e-9
        )


def test_filter_matches_literal_phasor_sum():
    # Oracle: phase-accumulation weights +-2 at the pulse instants plus the
    # boundary terms, summed literally as complex phasors.
    def literal(seq, f):
        times = np.concatenate(([0.0], seq.pulse_times(), [seq.tau_tot]))
        n = seq.n_pi
        w = np.concatenate(
            ([0.0], [2.0 * (-1) ** (n - i) for i in range(1, n + 1)], [-1.0])
        )
        w[0] = -np.sum(w[1:])
        return abs(np.sum(w * np.exp(2j * np.pi * f * times))) ** 2

    rng = np.random.default_rng(4)
    for n_pi in (1, 2, 8, 33):
        seq = mw.PulseSequence(mw.SequenceKind.CPMG, n_pi, 69.9e-6 / (2 * n_pi))
        ff = mw.FilterFunction(seq, finite_pulse_correction=False)
        for f in rng.uniform(1e3, 5e6, 25):
            want = literal(seq, float(f))
            got = float(mw.filter_function_value(ff, float(f)))
            assert got == pytest.approx(want, rel=1e-9, abs=1e-6)


def test_filter_fine_grid_peak_golden():
    # Brute-force maximum of the N=8 delta-pulse response near the first
    # harmonic, frozen from a 10^6-point scan.  The true maximum sits a few
    # percent above f1 because the boundary phasors skew the lobe.
    seq = mw.PulseSequence(mw.SequenceKind.XY8, 8, 69.9e-6 / 16)
    ff = mw.FilterFunction(seq, finite_pulse_correction=False)
    f1 = seq.n_pi / (2.0 * seq.tau_tot)
    grid = np.linspace(0.5 * f1, 1.5 * f1, 1_000_001)
    vals = mw.filter_function_value(ff, grid)
    k = int(np.argmax(vals))
    assert float(vals[k]) == pytest.approx(267.86130262128427, rel=1e-6)
    assert 0.0 < grid[k] / f1 - 1.0 < 0.03


def test_filter_peak_scaling_with_n():
    # First-harmonic maxima grow as N^2; the skew shrinks with N, so the
    # fine-grid ratio approaches the exact 4N^2 ratio from above.
    peaks = {}
    for n_pi in (8, 64):
        seq = mw.PulseSequence(mw.SequenceKind.CPMG, n_pi, 69.9e-6 / (2 * n_pi))
        ff = mw.FilterFunction(seq, finite_pulse_correction=False)
        f1 = n_pi / (2.0 * seq.tau_tot)
        grid = np.linspace(0.8 * f1, 1.2 * f1, 200_001)
        vals = mw.filter_function_value(ff, grid)
        k = int(np.argmax(vals))
        peaks[n_pi] = float(vals[k])
        assert abs(grid[k] / f1 - 1.0) < 0.03
    assert peaks[64] / peaks[8] == pytest.approx(64.0, rel=0.05)


def test_filter_integral_band_averages():
    f_hi = 1e8
    for n_pi in (8, 32):
        seq = mw.PulseSequence(mw.SequenceKind.XY8, n_pi, 521.85e-9, T_PI, T_DEAD)
        ff_d = mw.FilterFunction(seq, finite_pulse_correction=False)
        ff_f = mw.FilterFunction(seq, finite_pulse_correction=True)
        i_delta = mw.filter_function_integral(ff_d, 0.0, f_hi)
        i_finite = mw.filter_function_integral(ff_f, 0.0, f_hi)
        assert i_delta == pytest.approx((4 * n_pi + 2) * 2 * math.pi * f_hi, rel=0.10)
        assert i_finite == pytest.approx((2 * n_pi + 2) * 2 * math.pi * f_hi, rel=0.10)


def test_filter_integral_additivity():
    seq = mw.PulseSequence(mw.SequenceKind.XY8, 16, 521.85e-9, T_PI)
    ff = mw.FilterFunction(seq)
    whole = mw.filter_function_integral(ff, 0.0, 5e6)
    for split in (1e5, seq.f_center, 2.34e6):
        parts = mw.filter_function_integral(ff, 0.0, split) + mw.filter_function_integral(
            ff, split, 5e6
        )
        assert parts == pytest.approx(whole, rel=1e-9)


def test_filter_integral_degenerate_and_validation():
    seq = mw.PulseSequence(mw.SequenceKind.XY8, 8, 500e-9)
    ff = mw.FilterFunction(seq)
    assert mw.filter_function_integral(ff, 1e5, 1e5) == 0.0
    with pytest.raises(ValueError):
        mw.filter_function_integral(ff, -1.0, 1e5)
    with pytest.raises(ValueError):
        mw.filter_function_integral(ff, 1e5, 1e4)
    with pytest.raises(ValueError):
        mw.filter_function_integral(ff, 0.0, math.inf)
    with pytest.raises(ValueError):
        mw.filter_function_value(ff, -1.0)


def test_filter_integral_convergence():
    seq = mw.PulseSequence(mw.SequenceKind.XY8, 8, 521.85e-9, T_PI)
    ff = mw.FilterFunction(seq)
    coarse = mw.filter_function_integral(ff, 0.0, 1e7, oversample=32)
    fine = mw.filter_function_integral(ff, 0.0, 1e7, oversample=128)
    assert coarse == pytest.approx(fine, rel=1e-3)


def test_band_integral_weight_one_matches_integral():
    seq = mw.PulseSequence(mw.SequenceKind.XY8, 8, 521.85e-9, T_PI)
    ff = mw.FilterFunction(seq)
    plain = band_integral_weighted(ff, lambda f: np.ones_like(f), 0.0, 1e6)
    assert plain * 2 * math.pi == pytest.approx(
        mw.filter_function_integral(ff, 0.0, 1e6), rel=1e-9
    )


def test_xy8_and_cpmg_share_filter():
    xy8 = mw.PulseSequence(mw.SequenceKind.XY8, 16, 400e-9, 20e-9)
    cpmg = mw.PulseSequence(mw.SequenceKind.CPMG, 16, 400e-9, 20e-9)
    freqs = np.linspace(0.0, 3e6, 500)
    assert_allclose(
        mw.filter_function_value(mw.FilterFunction(xy8), freqs),
        mw.filter_function_value(mw.FilterFunction(cpmg), freqs),
        rtol=1e-12,
    )


def test_filter_callable_handle():
    seq = mw.PulseSequence(mw.SequenceKind.XY8, 8, 500e-9)
    ff = mw.FilterFunction(seq)
    f = 1.3e5
    assert float(ff(f)) == float(mw.filter_function_value(ff, f))
    vals = mw.filter_function_value(ff, np.linspace(0, 1e6, 100))
    assert np.all(vals >= 0.0)
