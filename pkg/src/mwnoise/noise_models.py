"""Phase-noise spectra and stochastic phase processes of microwave sources.

Single-sideband noise L(f) in dBc/Hz converts to a one-sided phase PSD
S_phi(f) = 2 * 10^(L(f)/10) in rad^2/Hz.  Tabulated spectra are
interpolated linearly in (log10 f, L); below the first tabulated offset the
first value is held, above the last the final slope is extrapolated with a
floor of -200 dBc/Hz.

Three stochastic processes generate per-pulse phase samples for the time
domain simulator: white (independent per pulse), random walk (independent
Gaussian increments at rate r_samp) and PSD-driven (samples read off a
synthesized phase track with a prescribed spectrum).  All randomness comes
from numpy's Philox counter-based generator keyed on (seed, realization),
so runs are reproducible and realizations can be generated independently in
any order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Union

import numpy as np

from .core import DbcPerHz, FrequencyHz, Radians, TimeSeconds

# Extrapolation floor for L(f) beyond the tabulated span.
L_FLOOR_DBC = -200.0

# Typical bandwidth attenuation of an injection chain (waveform generator
# -> modulation port).  Applied only on request, when a simulation is meant
# to emulate injected rather than intrinsic noise.
INJECTION_GAIN_WHITE = 0.8
INJECTION_GAIN_RANDOM_WALK = 0.85

_PHILOX_MASK = (1 << 64) - 1


def _mix_key(*parts: int) -> list[int]:
    """Fold integer identifiers into a 2x64-bit Philox key (splitmix-style)."""
    acc = 0x9E3779B97F4A7C15
    for p in parts:
        acc = (acc ^ (p & _PHILOX_MASK)) * 0xBF58476D1CE4E5B9 & _PHILOX_MASK
        acc = (acc ^ (acc >> 31)) * 0x94D049BB133111EB & _PHILOX_MASK
    return [acc, (acc * 0xD6E8FEB86659FD93 ^ len(parts)) & _PHILOX_MASK]


def philox_rng(*key_parts: int) -> np.random.Generator:
    """Counter-based generator for a (seed, stream, ...) tuple.

    Distinct tuples give statistically independent streams; the same tuple
    always reproduces the same draws regardless of what other streams were
    consumed before.
    """
    return np.random.Generator(np.random.Philox(key=_mix_key(*key_parts)))


@dataclass(frozen=True)
class PhaseNoiseSpectrum:
    """Tabulated single-sideband phase noise of one source at one carrier."""

    carrier_hz: FrequencyHz
    offsets_hz: tuple[float, ...]
    l_dbc: tuple[float, ...]
    label: str = ""

    def __post_init__(self) -> None:
        if self.carrier_hz <= 0:
            raise ValueError("carrier frequency must be positive")
        offsets = np.asarray(self.offsets_hz, dtype=float)
        if offsets.size == 0:
            raise ValueError("spectrum needs at least one tabulated point")
        if np.any(offsets <= 0):
            raise ValueError("offsets must be positive")
        if np.any(np.diff(offsets) <= 0):
            raise ValueError("offsets must be strictly increasing")
        if len(self.l_dbc) != offsets.size:
            raise ValueError("offsets and l_dbc must have the same length")
        object.__setattr__(self, "offsets_hz", tuple(float(x) for x in offsets))
        object.__setattr__(self, "l_dbc", tuple(float(x) for x in self.l_dbc))

    def l_at(self, f) -> np.ndarray:
        """L(f) in dBc/Hz with hold-below / slope-extrapolate-above rules."""
        f_arr = np.asarray(f, dtype=float)
        if np.any(f_arr <= 0):
            raise ValueError("offset frequency must be positive")
        log_f = np.log10(f_arr)
        log_tab = np.log10(np.asarray(self.offsets_hz))
        l_tab = np.asarray(self.l_dbc)
        out = np.interp(log_f, log_tab, l_tab)
        if len(l_tab) >= 2:
            slope = (l_tab[-1] - l_tab[-2]) / (log_tab[-1] - log_tab[-2])
            above = log_f > log_tab[-1]
            out = np.where(above, l_tab[-1] + slope * (log_f - log_tab[-1]), out)
        out = np.maximum(out, L_FLOOR_DBC)
        return out if out.ndim else float(out)

    def shifted_db(self, delta_db: float, label: str | None = None) -> "PhaseNoiseSpectrum":
        """Same shape shifted by ``delta_db`` at every offset."""
        new_l = tuple(v + delta_db for v in self.l_dbc)
        return replace(self, l_dbc=new_l, label=self.label if label is None else label)

    def scaled_to_carrier(self, new_carrier_hz: FrequencyHz) -> "PhaseNoiseSpectrum":
        """Linear-with-carrier scaling model: phase noise amplitude grows
        proportionally to the carrier, i.e. L shifts by 20*log10(ratio)."""
        if new_carrier_hz <= 0:
            raise ValueError("carrier frequency must be positive")
        delta = 20.0 * math.log10(new_carrier_hz / self.carrier_hz)
        shifted = self.shifted_db(delta)
        return replace(shifted, carrier_hz=new_carrier_hz)


def ssb_to_psd(spectrum: PhaseNoiseSpectrum, f) -> np.ndarray:
    """One-sided phase PSD S_phi(f) = 2 * 10^(L(f)/10), rad^2/Hz."""
    l_val = spectrum.l_at(f)
    out = 2.0 * np.power(10.0, np.asarray(l_val) / 10.0)
    return out if out.ndim else float(out)


def mix_spectra(
    a: PhaseNoiseSpectrum, b: PhaseNoiseSpectrum, mode: str = "sum"
) -> PhaseNoiseSpectrum:
    """Phase noise of an ideal mixer output.

    Phase fluctuations of the two inputs are statistically independent and
    add, so the output PSD is the pointwise sum S_a + S_b evaluated on the
    union of the two offset grids.  ``mode`` selects the output carrier
    a + b ("sum") or a - b ("difference").
    """
    if mode == "sum":
        carrier = a.carrier_hz + b.carrier_hz
    elif mode == "difference":
        carrier = a.carrier_hz - b.carrier_hz
        if carrier <= 0:
            raise ValueError("difference carrier must be positive")
    else:
        raise ValueError("mode must be 'sum' or 'difference'")
    offsets = np.union1d(np.asarray(a.offsets_hz), np.asarray(b.offsets_hz))
    s_total = ssb_to_psd(a, offsets) + ssb_to_psd(b, offsets)
    l_out = 10.0 * np.log10(s_total / 2.0)
    label = f"mix({a.label or 'a'},{b.label or 'b'})"
    return PhaseNoiseSpectrum(carrier, tuple(offsets), tuple(l_out), label)


# --- bundled spectra --------------------------------------------------------
# Hand-built piecewise approximations of the phase noise of two commercial
# generator families, anchored at the published -114 dBc/Hz (G1) and
# -134 dBc/Hz (G2) at 20 kHz offset from a 1 GHz carrier.  The shapes are
# digitization-quality only: good enough for floor budgeting and trend
# studies, not a substitute for the instrument's measured data.  Other
# carriers use the linear-with-carrier scaling model.

_G1_BASE = PhaseNoiseSpectrum(
    carrier_hz=1e9,
    offsets_hz=(1e1, 1e2, 1e3, 1e4, 2e4, 5e4, 1e5, 5e5, 8e5, 5e6, 1e7, 1e8),
    l_dbc=(-70.0, -84.0, -98.0, -112.0, -114.0, -116.0, -117.0, -117.0,
           -119.7, -138.8, -146.0, -155.0),
    label="g1",
)

_G2_BASE = PhaseNoiseSpectrum(
    carrier_hz=1e9,
    offsets_hz=(1e1, 1e2, 1e3, 1e4, 2e4, 1e5, 1e6, 2e6, 1e7, 1e8),
    l_dbc=(-80.0, -98.0, -116.0, -130.0, -134.0, -140.0, -148.0, -151.0,
           -152.0, -152.0),
    label="g2",
)

_PRESET_BASES: dict[str, tuple[PhaseNoiseSpectrum, float]] = {
    "g1-1ghz": (_G1_BASE, 1.0e9),
    "g1-2.5ghz": (_G1_BASE, 2.5e9),
    "g1-6ghz": (_G1_BASE, 6.0e9),
    "g2-0.85ghz": (_G2_BASE, 0.85e9),
    "g2-2.1ghz": (_G2_BASE, 2.1e9),
    "g2-5.7ghz": (_G2_BASE, 5.7e9),
}


def preset_names() -> list[str]:
    return sorted(_PRESET_BASES) + ["johnson-300k"]


def preset_spectrum(name: str) -> PhaseNoiseSpectrum:
    """A bundled approximate spectrum by name (see :func:`preset_names`)."""
    key = name.lower()
    if key == "johnson-300k":
        # Room-temperature thermal floor of a 0 dBm carrier: flat -177 dBc/Hz.
        return PhaseNoiseSpectrum(
            carrier_hz=2.87e9,
            offsets_hz=(1.0, 1e9),
            l_dbc=(-177.0, -177.0),
            label="johnson-300k",
        )
    try:
        base, carrier = _PRESET_BASES[key]
    except KeyError:
        raise KeyError(
            f"unknown preset {name!r}; available: {', '.join(preset_names())}"
        ) from None
    out = base.scaled_to_carrier(carrier)
    return replace(out, label=key)


def flat_spectrum(
    l_dbc: DbcPerHz,
    carrier_hz: FrequencyHz = 2.87e9,
    f_max: FrequencyHz = 1e9,
    label: str = "flat",
) -> PhaseNoiseSpectrum:
    """Frequency-independent L(f) from 1 Hz to ``f_max``."""
    return PhaseNoiseSpectrum(carrier_hz, (1.0, f_max), (l_dbc, l_dbc), label)


# --- spectrum file I/O ------------------------------------------------------

def load_spectrum(path: str | Path, carrier_hz: FrequencyHz | None = None) -> PhaseNoiseSpectrum:
    """Read a two-column CSV table ``offset_hz,l_dbc_per_hz``.

    Lines starting with '#' are comments; a ``# carrier_hz=<value>`` comment
    sets the carrier unless overridden by the argument.
    """
    path = Path(path)
    offsets: list[float] = []
    l_vals: list[float] = []
    carrier = carrier_hz
    for raw in path.read_text().splitlines():
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line.lstrip("#").strip()
            if body.startswith("carrier_hz=") and carrier_hz is None:
                carrier = float(body.split("=", 1)[1])
            continue
        if line.lower().replace(" ", "").startswith("offset_hz,"):
            continue
        parts = line.split(",")
        if len(parts) != 2:
            raise ValueError(f"{path}: expected 'offset,l' pairs, got {line!r}")
        offsets.append(float(parts[0]))
        l_vals.append(float(parts[1]))
    if carrier is None:
        raise ValueError(f"{path}: no carrier given (use '# carrier_hz=...' or the argument)")
    if not offsets:
        raise ValueError(f"{path}: no data rows")
    return PhaseNoiseSpectrum(carrier, tuple(offsets), tuple(l_vals), label=path.stem)


def save_spectrum(spectrum: PhaseNoiseSpectrum, path: str | Path) -> None:
    path = Path(path)
    lines = [f"# carrier_hz={spectrum.carrier_hz:.10g}", "offset_hz,l_dbc_per_hz"]
    for f_off, l_val in zip(spectrum.offsets_hz, spectrum.l_dbc):
        lines.append(f"{f_off:.10g},{l_val:.10g}")
    path.write_text("\n".join(lines) + "\n")


# --- stochastic processes ---------------------------------------------------

@dataclass(frozen=True)
class WhiteNoise:
    """Independent Gaussian phase error per pulse, std ``sigma_wh`` (rad).

    Samples are deviations relative to the frame set by the initial pi/2
    pulse, which is taken as error-free.
    """

    sigma_wh: Radians
    seed: int = 0
    emulate_injection_bandwidth: bool = False

    def __post_init__(self) -> None:
        if self.sigma_wh < 0:
            raise ValueError("sigma_wh must be nonnegative")

    @property
    def effective_sigma(self) -> Radians:
        gain = INJECTION_GAIN_WHITE if self.emulate_injection_bandwidth else 1.0
        return gain * self.sigma_wh


@dataclass(frozen=True)
class RandomWalkNoise:
    """Random-walk phase: N(0, sigma_rw^2) steps at rate ``r_samp``.

    By default consecutive samples differ by a Gaussian of variance
    sigma_rw^2 * r_samp * dt (the continuum limit); with
    ``discrete_jumps`` the walk advances only on ticks of a global clock at
    ``r_samp``, one Gaussian jump per tick.
    """

    sigma_rw: Radians
    r_samp: FrequencyHz
    seed: int = 0
    discrete_jumps: bool = False
    emulate_injection_bandwidth: bool = False

    def __post_init__(self) -> None:
        if self.sigma_rw < 0:
            raise ValueError("sigma_rw must be nonnegative")
        if self.r_samp <= 0:
            raise ValueError("r_samp must be positive")

    @property
    def effective_sigma(self) -> Radians:
        gain = INJECTION_GAIN_RANDOM_WALK if self.emulate_injection_bandwidth else 1.0
        return gain * self.sigma_rw


@dataclass(frozen=True)
class PsdDrivenNoise:
    """Phase samples read off a synthesized track with spectrum ``spectrum``
    band-limited to ``f_cutoff``.  Values are raw track reads; referencing
    to the frame of the first pulse is the simulator's job."""

    spectrum: PhaseNoiseSpectrum
    f_cutoff: FrequencyHz
    seed: int = 0

    def __post_init__(self) -> None:
        if self.f_cutoff <= 0:
            raise ValueError("f_cutoff must be positive")


NoiseProcess = Union[WhiteNoise, RandomWalkNoise, PsdDrivenNoise]

MAX_TRACK_SAMPLES = 1 << 26


def synthesize_phase_track(
    spectrum: PhaseNoiseSpectrum,
    duration: TimeSeconds,
    dt: TimeSeconds,
    seed: int,
    realization: int = 0,
    n_tracks: int = 1,
) -> np.ndarray:
    """Gaussian time series with one-sided PSD S_phi(f) on [1/duration, 1/(2 dt)].

    Standard Fourier synthesis: independent complex-normal coefficients with
    variance S(f_k) * n / (2 dt) per positive-frequency bin, inverse rFFT to
    a real track.  The DC bin is zero (absolute phase offset carries no
    information here).  Returns shape (n,) or (n_tracks, n).
    """
    if duration <= 0 or dt <= 0:
        raise ValueError("duration and dt must be positive")
    n = int(round(duration / dt))
    if n < 2:
        raise ValueError("duration must cover at least two samples")
    if n * n_tracks > MAX_TRACK_SAMPLES:
        raise ValueError("requested track too large; reduce duration or raise dt")
    freqs = np.fft.rfftfreq(n, dt)
    s_vals = np.zeros_like(freqs)
    s_vals[1:] = ssb_to_psd(spectrum, freqs[1:])
    scale = np.sqrt(s_vals * n / (2.0 * dt))

    rng = philox_rng(seed, realization, 0x747261636B)
    re = rng.standard_normal((n_tracks, freqs.size))
    im = rng.standard_normal((n_tracks, freqs.size))
    coeff = (re + 1j * im) * (scale / math.sqrt(2.0))
    coeff[:, 0] = 0.0
    if n % 2 == 0:
        # Nyquist bin must be real; give it the full per-bin variance.
        coeff[:, -1] = re[:, -1] * scale[-1]
    tracks = np.fft.irfft(coeff, n=n, axis=1)
    return tracks[0] if n_tracks == 1 else tracks


def _psd_track_layout(
    pulse_times: np.ndarray, f_cutoff: float
) -> tuple[float, float, np.ndarray]:
    """(duration, dt, sample indices) for reading pulses off a track.

    The track spans eight times the pulse window so its frequency comb
    (spacing 1/duration) resolves the filter passband, and it is sampled at
    the synthesis Nyquist rate of the cutoff.
    """
    t_max = float(pulse_times[-1]) if pulse_times.size else 0.0
    if t_max <= 0:
        t_max = 1.0 / f_cutoff
    dt = 1.0 / (2.0 * f_cutoff)
    duration = 8.0 * t_max
    n = int(round(duration / dt))
    if n > MAX_TRACK_SAMPLES:
        raise ValueError("pulse window too long for the requested cutoff")
    idx = np.clip(np.rint(pulse_times / dt).astype(int), 0, n - 1)
    return duration, dt, idx


def sample_pulse_phases(
    process: NoiseProcess,
    pulse_times,
    realization: int = 0,
) -> np.ndarray:
    """One realization of the source phase at the given times (radians).

    ``pulse_times`` must be nondecreasing and nonnegative.  The same
    (process.seed, realization) pair always returns identical samples.
    """
    times = np.asarray(pulse_times, dtype=float)
    if times.ndim != 1:
        raise ValueError("pulse_times must be one-dimensional")
    if times.size and (np.any(np.diff(times) < 0) or times[0] < 0):
        raise ValueError("pulse_times must be nondecreasing and nonnegative")

    if isinstance(process, WhiteNoise):
        rng = philox_rng(process.seed, realization, 0x7768697465)
        return process.effective_sigma * rng.standard_normal(times.size)

    if isinstance(process, RandomWalkNoise):
        rng = philox_rng(process.seed, realization, 0x77616C6B)
        sigma = process.effective_sigma
        bounds = np.concatenate(([0.0], times))
        if process.discrete_jumps:
            ticks = np.floor(bounds * process.r_samp)
            step_var = sigma**2 * np.diff(ticks)
        else:
            step_var = sigma**2 * process.r_samp * np.diff(bounds)
        steps = np.sqrt(step_var) * rng.standard_normal(times.size)
        return np.cumsum(steps)

    if isinstance(process, PsdDrivenNoise):
        duration, dt, idx = _psd_track_layout(times, process.f_cutoff)
        track = synthesize_phase_track(
            process.spectrum, duration, dt, process.seed, realization
        )
        return track[idx]

    raise TypeError(f"unknown noise process type: {type(process).__name__}")


def sample_pulse_phases_batch(
    process: NoiseProcess,
    pulse_times,
    n_realizations: int,
    seed: int | None = None,
) -> np.ndarray:
    """Vectorized stack of realizations, shape (n_realizations, n_times).

    Statistically identical to calling :func:`sample_pulse_phases` for
    realizations 0..n-1 but drawn from one batched stream for speed.
    ``seed`` overrides the process seed when given.
    """
    times = np.asarray(pulse_times, dtype=float)
    if times.size and (np.any(np.diff(times) < 0) or times[0] < 0):
        raise ValueError("pulse_times must be nondecreasing and nonnegative")
    if n_realizations < 1:
        raise ValueError("n_realizations must be at least 1")
    base_seed = process.seed if seed is None else seed

    if isinstance(process, WhiteNoise):
        rng = philox_rng(base_seed, 0x7768697465, 1)
        return process.effective_sigma * rng.standard_normal((n_realizations, times.size))

    if isinstance(process, RandomWalkNoise):
        rng = philox_rng(base_seed, 0x77616C6B, 1)
        sigma = process.effective_sigma
        bounds = np.concatenate(([0.0], times))
        if process.discrete_jumps:
            ticks = np.floor(bounds * process.r_samp)
            step_var = sigma**2 * np.diff(ticks)
        else:
            step_var = sigma**2 * process.r_samp * np.diff(bounds)
        steps = np.sqrt(step_var) * rng.standard_normal((n_realizations, times.size))
        return np.cumsum(steps, axis=1)

    if isinstance(process, PsdDrivenNoise):
        duration, dt, idx = _psd_track_layout(times, process.f_cutoff)
        out = np.empty((n_realizations, times.size))
        # Batch the fairly large tracks to bound peak memory.
        n_per = int(round(duration / dt))
        chunk = max(1, MAX_TRACK_SAMPLES // (4 * n_per))
        for start in range(0, n_realizations, chunk):
            stop = min(start + chunk, n_realizations)
            tracks = synthesize_phase_track(
                process.spectrum, duration, dt, base_seed,
                realization=start, n_tracks=stop - start,
            )
            tracks = np.atleast_2d(tracks)
            out[start:stop] = tracks[:, idx]
        return out

    raise TypeError(f"unknown noise process type: {type(process).__name__}")
