"""Time-domain spin-phase propagation under microwave phase errors.

Each pi pulse about an axis rotated by the instantaneous source phase error
alpha reflects the accumulated spin phase: phi -> 2 alpha - phi.  Starting
from phi = 0 after the initial pi/2 pulse, N pulses and a final readout
pulse with phase error alpha_f leave

    phi_tot = -alpha_f + sum_{i=1..N} (-1)^(N-i) 2 alpha_i.

The XY8 axis pattern adds desired phases that cancel in this alternating
sum, so its phase-error statistics match CPMG's exactly; the Monte Carlo
therefore uses the CPMG timing with instantaneous pulses at the sequence's
pulse centers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from .core import DEFAULT_CONSTANTS, Constants, FrequencyHz, Radians, Tesla, TimeSeconds
from .noise_models import (
    NoiseProcess,
    PhaseNoiseSpectrum,
    PsdDrivenNoise,
    philox_rng,
    sample_pulse_phases_batch,
    synthesize_phase_track,
)
from .pulse_sequences import PulseSequence

if TYPE_CHECKING:
    from .signal_pipeline import ReadoutStream


@dataclass(frozen=True)
class SequenceRealization:
    """Phase errors of one simulated sequence run."""

    pulse_phase_errors: tuple[float, ...]
    final_pulse_error: float
    field_phase: Radians = 0.0

    @property
    def phi_tot(self) -> Radians:
        return self.field_phase + propagate_phase(
            self.pulse_phase_errors, self.final_pulse_error
        )


def propagate_phase(alphas, alpha_f: Radians) -> Radians:
    """Spin phase after the full pulse train, by the reflection recursion.

    ``alphas`` are the per-pulse source phase errors in pulse order,
    ``alpha_f`` the error of the final readout pulse, all relative to the
    frame of the (assumed perfect) initial pi/2 pulse.
    """
    phi = 0.0
    for alpha in np.asarray(alphas, dtype=float):
        phi = 2.0 * alpha - phi
    return float(phi - alpha_f)


def _alternating_weights(n_pi: int) -> np.ndarray:
    """Coefficients of alpha_1..alpha_N in the closed form of the recursion."""
    signs = np.where((n_pi - np.arange(1, n_pi + 1)) % 2 == 0, 1.0, -1.0)
    return 2.0 * signs


@dataclass(frozen=True)
class MonteCarloResult:
    n_realizations: int
    sigma_phi_empirical: Radians
    standard_error: Radians
    seed: int


def monte_carlo_sigma_phi(
    seq: PulseSequence,
    process: NoiseProcess,
    n_realizations: int,
    seed: int = 0,
) -> MonteCarloResult:
    """Empirical std of phi_tot over independent noise realizations.

    Pulses are treated as instantaneous at the sequence's pulse centers and
    the final readout pulse at tau_tot.  For the PSD-driven process the
    source phase at t = 0 is subtracted from every sample, referencing the
    errors to the initial pulse's frame; the white and random-walk processes
    are frame-referenced by construction.
    """
    if n_realizations < 100:
        raise ValueError("need at least 100 realizations for a usable std estimate")
    times = np.concatenate((seq.pulse_times(), [seq.tau_tot]))
    if isinstance(process, PsdDrivenNoise):
        times = np.concatenate(([0.0], times))
        samples = sample_pulse_phases_batch(process, times, n_realizations, seed=seed)
        samples = samples[:, 1:] - samples[:, :1]
    else:
        samples = sample_pulse_phases_batch(process, times, n_realizations, seed=seed)
    weights = np.concatenate((_alternating_weights(seq.n_pi), [-1.0]))
    phi_tot = samples @ weights
    sigma = float(np.std(phi_tot, ddof=1))
    std_err = sigma / math.sqrt(2.0 * (n_realizations - 1))
    return MonteCarloResult(n_realizations, sigma, std_err, seed)


def phi_tot_batch(
    seq: PulseSequence,
    process: NoiseProcess,
    n_realizations: int,
    seed: int,
) -> np.ndarray:
    """phi_tot samples for ``n_realizations`` independent sequences.

    Per-sequence draws are independent: the alternating weights sum to zero
    over a sequence, so a source phase track contributes only through its
    increments inside each interrogation window, which occupy disjoint time
    intervals for consecutive sequences.

    For the PSD-driven process the per-sequence variance is computed once
    from the synthesis grid (the draws are Gaussian either way) and the
    samples drawn i.i.d. at that std, which keeps 10^6-sequence streams
    tractable.
    """
    times = np.concatenate((seq.pulse_times(), [seq.tau_tot]))
    weights = np.concatenate((_alternating_weights(seq.n_pi), [-1.0]))
    if isinstance(process, PsdDrivenNoise):
        sigma = psd_sigma_phi_grid(process, seq)
        rng = philox_rng(seed, 0x70736453)
        return sigma * rng.standard_normal(n_realizations)
    samples = sample_pulse_phases_batch(process, times, n_realizations, seed=seed)
    return samples @ weights


def psd_sigma_phi_grid(process: PsdDrivenNoise, seq: PulseSequence) -> Radians:
    """Per-sequence phase std implied by the discrete synthesis grid.

    This is the exact std of phi_tot for tracks generated by
    :func:`synthesize_phase_track` with the layout used in the Monte Carlo,
    computed from the track's frequency comb instead of by sampling.
    """
    from .noise_models import _psd_track_layout, ssb_to_psd

    times = np.concatenate(([0.0], seq.pulse_times(), [seq.tau_tot]))
    duration, dt, idx = _psd_track_layout(times, process.f_cutoff)
    n = int(round(duration / dt))
    freqs = np.fft.rfftfreq(n, dt)[1:]
    s_vals = ssb_to_psd(process.spectrum, freqs)
    # Transfer function of the weighted sample combination at the comb lines.
    sample_times = idx * dt
    weights = np.concatenate(([1.0], _alternating_weights(seq.n_pi), [-1.0]))
    weights[0] = -np.sum(weights[1:])  # frame reference at t = 0
    h = np.exp(2j * np.pi * np.outer(freqs, sample_times)) @ weights
    contrib = s_vals * np.abs(h) ** 2
    if n % 2 == 0:
        contrib[-1] *= 0.5  # the real Nyquist bin enters the track once, not twice
    var = float(np.sum(contrib) / (n * dt))
    return math.sqrt(var)


# --- double-quantum magnetometry -------------------------------------------

def dq_ramsey_probability(
    delta_alpha: Radians,
    delta_alpha_prime: Radians,
    b_z: Tesla,
    tau: TimeSeconds,
    constants: Constants = DEFAULT_CONSTANTS,
) -> float:
    """Bright-state probability of a double-quantum Ramsey measurement.

    ``delta_alpha`` and ``delta_alpha_prime`` are the two-tone phase
    differences at the first and second pulse.  Only their change and the
    accumulated field phase matter:

        p = cos^2((delta_alpha' - delta_alpha)/2 - 2 pi gamma b_z tau).
    """
    if tau < 0:
        raise ValueError("tau must be nonnegative")
    arg = 0.5 * (delta_alpha_prime - delta_alpha) - 2.0 * math.pi * constants.gamma_nv * b_z * tau
    return math.cos(arg) ** 2


def dq_ramsey_probability_tones(
    alpha_low: Radians,
    alpha_high: Radians,
    alpha_low_prime: Radians,
    alpha_high_prime: Radians,
    b_z: Tesla,
    tau: TimeSeconds,
    constants: Constants = DEFAULT_CONSTANTS,
) -> float:
    """Same, from the four individual tone phases.

    A carrier phase shift common to both tones of a pulse cancels in the
    differences, which is the point of the scheme: only the lower-frequency
    (LO) source contributes.
    """
    return dq_ramsey_probability(
        alpha_high - alpha_low,
        alpha_high_prime - alpha_low_prime,
        b_z,
        tau,
        constants,
    )


def dq_noise_suppression(
    lo_spectrum: PhaseNoiseSpectrum,
    carrier_spectrum: PhaseNoiseSpectrum,
    seq: PulseSequence,
    f_cutoff: FrequencyHz = 1e8,
    constants: Constants = DEFAULT_CONSTANTS,
) -> tuple[float, float]:
    """(eta_dq, eta_single): sensitivity with the two-tone scheme vs a
    single mixed tone.

    The double-quantum drive sees only the LO's phase noise; a conventional
    single-tone drive built by mixing sees the sum of carrier and LO noise.
    """
    from .analytic_sensitivity import eta_phi, sigma_phi_filter
    from .noise_models import mix_spectra

    eta_dq = eta_phi(sigma_phi_filter(lo_spectrum, seq, f_cutoff), seq, constants)
    mixed = mix_spectra(carrier_spectrum, lo_spectrum, mode="sum")
    eta_single = eta_phi(sigma_phi_filter(mixed, seq, f_cutoff), seq, constants)
    return eta_dq, eta_single


# --- gradiometer -------------------------------------------------------------

def simulate_gradiometer(
    seq: PulseSequence,
    process: NoiseProcess,
    uniform_signal: Tesla,
    gradient_signal: Tesla,
    shot_sigma: Radians,
    n_sequences: int,
    seed: int = 0,
    *,
    f_uniform: FrequencyHz = 394e3,
    f_gradient: FrequencyHz = 394e3,
    channel_gains: tuple[float, float] = (1.0, 1.0),
    constants: Constants = DEFAULT_CONSTANTS,
) -> tuple["ReadoutStream", "ReadoutStream", "ReadoutStream"]:
    """Two magnetometer channels driven by one microwave source, plus their
    difference channel.

    Both channels share each sequence's source phase error (common mode).  A
    uniform AC test field (rms amplitude ``uniform_signal`` at ``f_uniform``)
    enters both channels with the same sign; a gradient test field
    (``gradient_signal`` at ``f_gradient``) enters with opposite signs.  Shot
    noise is drawn independently per channel.  The difference channel is
    ch1 - ch2: common phase noise and the uniform field cancel while the
    gradient peak doubles, at the cost of a sqrt(2) larger shot floor.

    Returns (channel_1, channel_2, difference) as readout streams in tesla.
    """
    from .signal_pipeline import ReadoutStream

    if n_sequences < 2:
        raise ValueError("need at least 2 sequences")
    if shot_sigma < 0:
        raise ValueError("shot_sigma must be nonnegative")
    f_samp = seq.f_samp
    t_start = np.arange(n_sequences) / f_samp

    common_phase = phi_tot_batch(seq, process, n_sequences, seed)
    rng = philox_rng(seed, 0x67726164)
    shot = shot_sigma * rng.standard_normal((2, n_sequences))

    scale = 4.0 * constants.gamma_nv * seq.tau_tot
    uniform = uniform_signal * math.sqrt(2.0) * np.cos(2.0 * np.pi * f_uniform * t_start)
    gradient = gradient_signal * math.sqrt(2.0) * np.cos(2.0 * np.pi * f_gradient * t_start)

    ch = []
    for i, sign in enumerate((+1.0, -1.0)):
        phase = scale * (uniform + sign * gradient) + common_phase + shot[i]
        ch.append(channel_gains[i] * phase / scale)
    diff = ch[0] - ch[1]
    return (
        ReadoutStream(ch[0], f_samp),
        ReadoutStream(ch[1], f_samp),
        ReadoutStream(diff, f_samp),
    )


# --- cw magnetometry ---------------------------------------------------------

def simulate_cw_trace(
    model,
    spectrum: PhaseNoiseSpectrum,
    b_series,
    dt: TimeSeconds,
    duration: TimeSeconds,
    seed: int = 0,
    constants: Constants = DEFAULT_CONSTANTS,
) -> np.ndarray:
    """Fluorescence trace of a cw (ODMR) magnetometer on the slope.

    The normalized fluorescence responds linearly to the detuning from the
    lock point: F(t) = 1 - contrast * (3 sqrt(3) / 4) * df(t) / linewidth,
    where df = gamma * B(t) + (1 / 2 pi) dphi/dt combines the magnetic
    signal and the instantaneous frequency deviation of the drive.

    ``b_series`` may be a scalar or an array of length round(duration/dt).
    """
    if dt <= 0 or duration <= 0:
        raise ValueError("dt and duration must be positive")
    n = int(round(duration / dt))
    if n < 2:
        raise ValueError("duration must cover at least two samples")
    b_arr = np.broadcast_to(np.asarray(b_series, dtype=float), (n,))
    # One extra phase sample so the finite difference covers n intervals.
    track = synthesize_phase_track(spectrum, (n + 1) * dt, dt, seed)
    delta_f = np.diff(track) / (2.0 * math.pi * dt)
    detuning = constants.gamma_nv * b_arr + delta_f
    slope = model.contrast * (3.0 * math.sqrt(3.0) / 4.0) / model.linewidth
    return 1.0 - slope * detuning


def cw_detuning_from_trace(model, trace: np.ndarray) -> np.ndarray:
    """Invert :func:`simulate_cw_trace` back to the detuning in Hz."""
    slope = model.contrast * (3.0 * math.sqrt(3.0) / 4.0) / model.linewidth
    return (1.0 - np.asarray(trace, dtype=float)) / slope
