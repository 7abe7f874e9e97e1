"""End-to-end acceptance checks.

Each test covers one release criterion and prints a single PASS/FAIL line
with the measured numbers (run pytest with -s to see them all).
"""

import math

import numpy as np

import mwnoise as mw
from mwnoise.signal_pipeline import (
    alias_frequency,
    amplitude_spectrum,
    estimate_noise_floor,
    excess_noise,
    synthesize_stream,
)
from mwnoise.spin_simulator import monte_carlo_sigma_phi, psd_sigma_phi_grid

T_PI = 48e-9
T_DEAD = 15e-6


def _report(num: int, label: str, ok: bool, detail: str) -> None:
    status = "PASS" if ok else "FAIL"
    print(f"[criterion {num:02d}] {status} {label}: {detail}")
    assert ok, f"criterion {num:02d} {label}: {detail}"


def _table_a1_sequence() -> mw.PulseSequence:
    return mw.PulseSequence(mw.SequenceKind.XY8, 64, 521.85e-9, T_PI, T_DEAD)


def _r2(x, y) -> float:
    return float(np.corrcoef(x, y)[0, 1] ** 2)


def test_criterion_01_shot_noise_golden():
    model = mw.ReadoutModel(contrast=0.013, n_photons=1.23e9, t_read=1.5e-6, t_norm=4e-6)
    seq = mw.PulseSequence(mw.SequenceKind.XY8, 64, (69.9e-6 / 64 - T_PI) / 2, T_PI, T_DEAD)
    eta = mw.eta_shot_noise(model, seq)
    floor = eta * mw.FFT_FLOOR_FACTOR
    ok = abs(eta * 1e12 / 4.3 - 1) < 0.03 and abs(floor * 1e12 / 5.4 - 1) < 0.03
    _report(1, "shot-noise golden value", ok,
            f"eta {eta * 1e12:.3f} pT (want 4.3 +-3%), floor {floor * 1e12:.3f} pT (want 5.4 +-3%)")


def test_criterion_02_monte_carlo_closed_forms():
    details = []
    ok = True
    for n_pi in (8, 64, 136):
        tau = (69.9e-6 / n_pi - T_PI) / 2
        seq = mw.PulseSequence(mw.SequenceKind.CPMG, n_pi, tau, T_PI, T_DEAD)
        res = monte_carlo_sigma_phi(seq, mw.WhiteNoise(0.01, seed=7), 100_000, seed=11)
        want = 2 * 0.01 * math.sqrt(n_pi + 0.25)
        rel_wh = abs(res.sigma_phi_empirical / want - 1)
        res = monte_carlo_sigma_phi(seq, mw.RandomWalkNoise(1e-3, 1e6, seed=5), 100_000, seed=13)
        want = 1e-3 * math.sqrt(seq.tau_tot * 1e6)
        rel_rw = abs(res.sigma_phi_empirical / want - 1)
        ok = ok and rel_wh < 0.02 and rel_rw < 0.02
        details.append(f"N={n_pi} white {rel_wh * 100:.2f}% rw {rel_rw * 100:.2f}%")
    _report(2, "Monte Carlo vs closed forms (<2%)", ok, "; ".join(details))


def test_criterion_03_filter_integral_band_averages():
    details = []
    ok = True
    for n_pi in (8, 32):
        seq = mw.PulseSequence(mw.SequenceKind.XY8, n_pi, 521.85e-9, T_PI, T_DEAD)
        got_d = mw.filter_function_integral(
            mw.FilterFunction(seq, finite_pulse_correction=False), 0.0, 1e8)
        got_f = mw.filter_function_integral(
            mw.FilterFunction(seq, finite_pulse_correction=True), 0.0, 1e8)
        r_d = got_d / ((4 * n_pi + 2) * 2 * math.pi * 1e8)
        r_f = got_f / ((2 * n_pi + 2) * 2 * math.pi * 1e8)
        ok = ok and abs(r_d - 1) < 0.10 and abs(r_f - 1) < 0.10
        details.append(f"N={n_pi} delta ratio {r_d:.3f} finite ratio {r_f:.3f}")
    _report(3, "filter integral band averages (<10%)", ok, "; ".join(details))


def test_criterion_04_psd_driven_cross_validation():
    seq = _table_a1_sequence()
    spec = mw.preset_spectrum("g1-2.5ghz")
    proc = mw.PsdDrivenNoise(spec, f_cutoff=1e8, seed=21)
    sig_filter = mw.sigma_phi_filter(spec, seq, finite_pulse_correction=False)
    sig_grid = psd_sigma_phi_grid(proc, seq)
    res = monte_carlo_sigma_phi(seq, proc, 2000, seed=21)
    rel_mc = abs(res.sigma_phi_empirical / sig_filter - 1)
    rel_grid = abs(sig_grid / sig_filter - 1)
    ok = rel_mc < 0.05 and rel_grid < 0.01
    _report(4, "PSD-driven Monte Carlo vs filter prediction (<5%)", ok,
            f"MC {res.sigma_phi_empirical:.4e} vs filter {sig_filter:.4e} "
            f"({rel_mc * 100:.2f}%), grid dev {rel_grid * 100:.3f}%")


def test_criterion_05_floor_scaling_laws():
    duration = 60.0
    tau_tot, f_xy8 = 69.8688e-6, 458e3

    def floor_of(seq, proc, seed):
        stream = synthesize_stream(seq, proc, 0.0, 0.0, 0.0, duration, seed=seed)
        return estimate_noise_floor(amplitude_spectrum(stream, 1.0))[0]

    seq8 = mw.make_xy8(8, f_xy8, T_PI, T_DEAD)

    sig = np.logspace(-3, -2, 5)
    fl = np.array([floor_of(seq8, mw.WhiteNoise(s), 11) for s in sig])
    r2_sigma = _r2(sig, fl)

    seqs = [mw.make_xy8_fixed_duration(nr, tau_tot, T_PI, T_DEAD) for nr in (1, 2, 4, 8)]
    fx = np.array([s.f_center for s in seqs])
    fl = np.array([floor_of(s, mw.WhiteNoise(4e-3), 12) for s in seqs])
    r2_fxy8 = _r2(np.sqrt(fx), fl)

    seqs = [mw.make_xy8(nr, f_xy8, T_PI, T_DEAD) for nr in (4, 8, 12, 16)]
    devs = {}
    for name, proc in (("white", mw.WhiteNoise(4e-3)), ("rw", mw.RandomWalkNoise(2e-3, 5e4))):
        fl = np.array([floor_of(s, proc, 13) for s in seqs])
        devs[name] = float(np.abs(fl / fl.mean() - 1).max())

    seqs = [mw.make_xy8_fixed_duration(nr, tau_tot, T_PI, T_DEAD) for nr in (1, 2, 4, 8)]
    fl = np.array([floor_of(s, mw.RandomWalkNoise(2e-3, 5e4), 14) for s in seqs])
    dev_n = float(np.abs(fl / fl.mean() - 1).max())

    rates = np.logspace(4, 5, 5)
    fl = np.array([floor_of(seq8, mw.RandomWalkNoise(2e-3, r), 15) for r in rates])
    r2_rate = _r2(np.sqrt(rates), fl)

    ok = (r2_sigma > 0.99 and r2_fxy8 > 0.99 and devs["white"] < 0.10
          and devs["rw"] < 0.10 and dev_n < 0.10 and r2_rate > 0.99)
    _report(5, "floor scaling laws", ok,
            f"R2(sigma_wh) {r2_sigma:.5f}, R2(sqrt f_xy8) {r2_fxy8:.5f}, "
            f"tau_tot flatness white {devs['white'] * 100:.1f}% rw {devs['rw'] * 100:.1f}%, "
            f"N flatness rw {dev_n * 100:.1f}%, R2(sqrt R) {r2_rate:.5f}")


def test_criterion_06_excess_noise_fixture():
    seq = _table_a1_sequence()
    scale = 4 * mw.DEFAULT_CONSTANTS.gamma_nv * seq.tau_tot
    f_samp = seq.f_samp

    def sigma_for_floor(floor_t):
        return scale * (floor_t / mw.FFT_FLOOR_FACTOR) * math.sqrt(f_samp)

    sig_shot = sigma_for_floor(6.0e-12)
    cases = {11.9e-12: 3.04e9, 4.7e-12: 2.70e9}
    ok = True
    details = []
    for target_excess, carrier in cases.items():
        base = mw.preset_spectrum("g1-2.5ghz").scaled_to_carrier(carrier)
        s0 = mw.sigma_phi_filter(base, seq, finite_pulse_correction=False)
        s_target = sigma_for_floor(target_excess)
        spec = base.shifted_db(20 * math.log10(s_target / s0))
        proc = mw.PsdDrivenNoise(spec, 1e8, seed=0)
        stream_on = synthesize_stream(seq, proc, 212e-12, 457.9e3, sig_shot, 150.0, seed=42)
        stream_off = synthesize_stream(seq, None, 212e-12, 457.9e3, sig_shot, 150.0, seed=42)
        floor_on, _ = estimate_noise_floor(amplitude_spectrum(stream_on, 1.0), 457.9e3)
        floor_off, _ = estimate_noise_floor(amplitude_spectrum(stream_off, 1.0), 457.9e3)
        excess = excess_noise(floor_on, floor_off)
        rel = abs(excess / target_excess - 1)
        ok = ok and rel < 0.15
        details.append(
            f"target {target_excess * 1e12:.1f} pT -> floors {floor_on * 1e12:.2f}/"
            f"{floor_off * 1e12:.2f}, excess {excess * 1e12:.2f} ({rel * 100:.1f}%)")
    _report(6, "excess noise over shot floor (<15%)", ok, "; ".join(details))


def test_criterion_07_repetition_sweep_plateau():
    spec = mw.preset_spectrum("g1-2.5ghz")
    etas = []
    for n_r in range(1, 21):
        seq = mw.make_xy8_fixed_duration(n_r, 70e-6, T_PI, T_DEAD)
        etas.append(mw.eta_phi(mw.sigma_phi_filter(spec, seq), seq))
    etas = np.array(etas)
    argmax_nr = int(np.argmax(etas)) + 1
    ratio = etas[16] / etas[13]
    ok = argmax_nr >= 12 and ratio <= 1.05
    _report(7, "sensitivity plateau vs repetition count", ok,
            f"argmax N_r {argmax_nr} (want >=12), eta(17)/eta(14) {ratio:.4f} (want <=1.05)")


def test_criterion_08_gradiometer_suppression():
    seq = _table_a1_sequence()
    scale = 4 * mw.DEFAULT_CONSTANTS.gamma_nv * seq.tau_tot
    f_samp = seq.f_samp
    sig_shot = 4.0708e-3
    sigma_wh = 10.0 * math.sqrt(2.0) * sig_shot / (2.0 * math.sqrt(seq.n_pi + 0.25))
    n_seq = int(round(150.0 * f_samp))
    f_uniform = 33 * f_samp + 3000.0
    f_gradient = 12 * f_samp + 5000.0
    ch1, ch2, diff = mw.simulate_gradiometer(
        seq, mw.WhiteNoise(sigma_wh), 300e-12, 1000e-12, sig_shot, n_seq, seed=7,
        f_uniform=f_uniform, f_gradient=f_gradient)
    sp_ch1 = amplitude_spectrum(ch1, 1.0)
    sp_diff = amplitude_spectrum(diff, 1.0)
    floor_ch1 = estimate_noise_floor(sp_ch1)[0]
    floor_diff = estimate_noise_floor(sp_diff)[0]
    shot_diff = mw.FFT_FLOOR_FACTOR * (math.sqrt(2) * sig_shot / scale) / math.sqrt(f_samp)
    suppression = floor_ch1 / floor_diff
    f_u = alias_frequency(f_uniform, f_samp)[0]
    f_g = alias_frequency(f_gradient, f_samp)[0]

    def bin_at(sp, f):
        return float(sp.asd[int(np.argmin(np.abs(sp.freqs - f)))])

    uniform_supp = bin_at(sp_ch1, f_u) / bin_at(sp_diff, f_u)
    gradient_ratio = bin_at(sp_diff, f_g) / bin_at(sp_ch1, f_g)
    ok = (abs(floor_diff / shot_diff - 1) < 0.20 and suppression >= 10.0
          and uniform_supp >= 20.0 and abs(gradient_ratio / 2.0 - 1) < 0.05)
    _report(8, "gradiometer common-mode suppression", ok,
            f"diff floor {floor_diff * 1e12:.3f} pT vs shot {shot_diff * 1e12:.3f} pT, "
            f"suppression {suppression:.2f} (want >=10), uniform x{uniform_supp:.0f} "
            f"(want >=20), gradient ratio {gradient_ratio:.3f} (want 2 +-5%)")


def test_criterion_09_two_tone_phase_invariance():
    rng = np.random.default_rng(3)
    worst = 0.0
    for _ in range(200):
        a_low, a_high, a_low_p, a_high_p = rng.normal(0, 0.3, 4)
        b, tau = rng.normal(0, 1e-6), rng.uniform(1e-7, 1e-4)
        base = mw.dq_ramsey_probability_tones(a_low, a_high, a_low_p, a_high_p, b, tau)
        for shift in (0.7, -2.4, 13.9):
            shifted = mw.dq_ramsey_probability_tones(
                a_low + shift, a_high + shift, a_low_p + shift, a_high_p + shift, b, tau)
            worst = max(worst, abs(shifted - base))

    seq = _table_a1_sequence()
    f_lo, f_car = 0.61e9, 2.87e9
    lo = mw.preset_spectrum("g1-2.5ghz").scaled_to_carrier(f_lo)
    eta_dq, eta_single = mw.dq_noise_suppression(lo, lo.scaled_to_carrier(f_car), seq)
    ratio = eta_single / eta_dq
    expected = math.sqrt(1.0 + (f_car / f_lo) ** 2)
    rel = abs(ratio / expected - 1)
    ok = worst < 1e-12 and rel < 0.01
    _report(9, "double-quantum invariance and suppression arithmetic", ok,
            f"shift invariance worst {worst:.1e} (want <1e-12), "
            f"ratio {ratio:.4f} vs {expected:.4f} ({rel * 100:.3f}%)")


def test_criterion_10_cw_responses():
    spec = mw.flat_spectrum(-100.0)
    s0 = 2.0 * 10.0 ** (-100.0 / 10.0)
    f_cutoff = 1e6
    ok = True
    rels = []
    for tau in (2e-4, 1e-3, 1e-2):
        got = mw.cw_sigma_f(spec, tau, f_cutoff=f_cutoff)
        want = math.sqrt(2.0 * s0 * f_cutoff) / (2.0 * math.pi * tau)
        rels.append(abs(got / want - 1))
        ok = ok and rels[-1] < 0.05

    model = mw.CwModel(contrast=0.02, linewidth=1e6)
    dt, duration = 1e-6, 0.5
    trace = mw.simulate_cw_trace(model, spec, 0.0, dt, duration, seed=5)
    detuning = mw.cw_detuning_from_trace(model, trace)
    taus, sigmas = [], []
    for width in (10, 32, 100, 316, 1000):
        n_blocks = detuning.size // width
        means = detuning[: n_blocks * width].reshape(n_blocks, width).mean(axis=1)
        taus.append(width * dt)
        sigmas.append(means.std(ddof=1))
    exponent = float(np.polyfit(np.log(taus), np.log(sigmas), 1)[0])
    ok = ok and abs(exponent + 1.0) < 0.05

    johnson = mw.preset_spectrum("johnson-300k")
    tau = 5e-6
    eta_j = mw.cw_eta_f(mw.cw_sigma_f(johnson, tau, f_cutoff=1e6), tau)
    ok = ok and 10e-15 / 3.0 < eta_j < 3.0 * 10e-15
    _report(10, "cw flat closed form, averaging exponent, thermal floor", ok,
            f"flat rel {max(rels) * 100:.2f}% (want <5%), exponent {exponent:.4f} "
            f"(want -1 +-0.05), thermal cw eta {eta_j * 1e15:.2f} fT (want 10/3..30)")


def test_criterion_11_floor_estimator_robustness():
    seq = _table_a1_sequence()
    scale = 4 * mw.DEFAULT_CONSTANTS.gamma_nv * seq.tau_tot
    f_samp = seq.f_samp

    total_bins = total_spikes = 0
    for k in range(100):
        stream = synthesize_stream(seq, None, 0.0, 0.0, 4e-3, 30.0, seed=1000 + k)
        spectrum = amplitude_spectrum(stream, 1.0)
        _, spikes = estimate_noise_floor(spectrum)
        total_bins += int((spectrum.freqs >= 1e3).sum())
        total_spikes += len(spikes)
    fp_rate = total_spikes / total_bins

    sig_shot = 4e-3
    floor_true = mw.FFT_FLOOR_FACTOR * (sig_shot / scale) / math.sqrt(f_samp)
    biases = []
    for k in range(10):
        stream = synthesize_stream(seq, None, 0.0, 0.0, sig_shot, 30.0, seed=2000 + k)
        data = stream.samples.copy()
        t = stream.times()
        for j, f_spike in enumerate((2e3, 3.5e3, 4.7e3, 5.2e3, 5.5e3)):
            data = data + 10.0 * floor_true * math.sqrt(2.0) * np.cos(
                2 * math.pi * f_spike * t + 0.37 * j)
        spectrum = amplitude_spectrum(mw.ReadoutStream(data, stream.f_samp), 1.0)
        floor, _ = estimate_noise_floor(spectrum)
        biases.append(abs(floor / floor_true - 1.0))
    bias = max(biases)
    ok = fp_rate < 0.01 and bias < 0.02
    _report(11, "floor estimator robustness", ok,
            f"false-positive rate {fp_rate * 100:.4f}% (want <1%), "
            f"spiked-floor bias {bias * 100:.3f}% (want <2%)")


def test_criterion_12_calibration_recovery():
    seq = _table_a1_sequence()
    arg_scale = 4.0 * math.sqrt(2.0) * mw.DEFAULT_CONSTANTS.gamma_nv * seq.tau_tot
    rng = np.random.default_rng(99)
    worst = 0.0
    for kappa_true in np.logspace(-7, -4, 7):
        v_quarter = (0.5 * math.pi) / (arg_scale * kappa_true)
        v_test = np.linspace(0.0, 2.4 * v_quarter, 25)
        clean = 0.83 * np.abs(np.sin(arg_scale * kappa_true * v_test))
        noisy = clean * (1.0 + 0.01 * rng.standard_normal(clean.size))
        fit = mw.fit_calibration(v_test, noisy, seq)
        worst = max(worst, abs(fit.kappa / kappa_true - 1.0))
    ok = worst < 0.01
    _report(12, "calibration slope recovery across three decades", ok,
            f"worst kappa error {worst * 100:.3f}% (want <1%)")
