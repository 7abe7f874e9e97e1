"""Dynamical-decoupling sequence timing and spectral filter functions.

A CPMG / XY8-style sequence with N equally spaced pi pulses behaves, with
respect to the microwave phase, like a comb filter: phase fluctuations of
the drive at the sequence passband (and its odd harmonics) accumulate into
the final readout phase while slow drift is rejected to high order.  The
squared magnitude of that transfer function is

    F(f) = | 1 + (-1)^(N+1) * e^(i 2 pi f T)
             + 2 * sum_{j=1..N} (-1)^j e^(i ((j - 1/2)/N) 2 pi f T) * g(f) |^2

with T the total interrogation time and g(f) = cos(pi f t_pi) the
finite-pulse-width correction (g = 1 for delta pulses).  F(0) = 0, the
first passband sits at N/(2T) and peaks at 4 N^2 for delta pulses.

The inner sum is geometric, so F is evaluated in closed form per frequency;
integrals use a trapezoid rule on a frequency lattice anchored at integer
multiples of a fixed step (1 / (tau_tot * oversample)).  The lattice both
resolves every oscillation of F (period 1/tau_tot) and makes integrals
exactly additive over adjacent intervals, because the integrand is the
piecewise-linear interpolant on a grid that does not depend on the query
interval.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .core import FrequencyHz, TimeSeconds


class SequenceKind(enum.Enum):
    XY8 = "xy8"
    CPMG = "cpmg"


@dataclass(frozen=True)
class PulseSequence:
    """Timing of an N-pulse decoupling sequence.

    tau is the half-spacing: pulse centers are separated by 2*tau + t_pi and
    the first center sits tau + t_pi/2 after the initial pi/2 pulse, so the
    total interrogation time is tau_tot = n_pi * (2*tau + t_pi).  t_dead is
    the per-sequence overhead (readout, initialization) between repetitions.
    """

    kind: SequenceKind
    n_pi: int
    tau: TimeSeconds
    t_pi: TimeSeconds = 0.0
    t_dead: TimeSeconds = 0.0

    def __post_init__(self) -> None:
        if self.n_pi < 1:
            raise ValueError("n_pi must be at least 1")
        if self.tau <= 0:
            raise ValueError("tau must be positive")
        if self.t_pi < 0 or self.t_dead < 0:
            raise ValueError("t_pi and t_dead must be nonnegative")
        if self.kind is SequenceKind.XY8 and self.n_pi % 8 != 0:
            raise ValueError("an XY8 sequence needs a multiple of 8 pi pulses")

    @property
    def n_repeats(self) -> int:
        """Number of 8-pulse blocks (XY8 only; 0 for a bare CPMG train)."""
        return self.n_pi // 8 if self.kind is SequenceKind.XY8 else 0

    @property
    def tau_tot(self) -> TimeSeconds:
        return self.n_pi * (2.0 * self.tau + self.t_pi)

    @property
    def f_center(self) -> FrequencyHz:
        """Passband center n_pi / (2 tau_tot) = 1 / (2 (2 tau + t_pi))."""
        return 1.0 / (2.0 * (2.0 * self.tau + self.t_pi))

    @property
    def f_samp(self) -> FrequencyHz:
        """Sequence repetition rate 1 / (tau_tot + t_dead)."""
        return 1.0 / (self.tau_tot + self.t_dead)

    @property
    def duty(self) -> float:
        """Interrogation duty cycle tau_tot / (tau_tot + t_dead)."""
        return self.tau_tot / (self.tau_tot + self.t_dead)

    def pulse_times(self) -> np.ndarray:
        """Centers of the pi pulses, measured from the initial pi/2 pulse."""
        period = 2.0 * self.tau + self.t_pi
        return (np.arange(self.n_pi) + 0.5) * period


def make_xy8(
    n_repeats: int,
    f_xy8: FrequencyHz,
    t_pi: TimeSeconds = 0.0,
    t_dead: TimeSeconds = 0.0,
) -> PulseSequence:
    """XY8-n sequence tuned so the passband center lands on ``f_xy8``.

    The pulse spacing follows from 2*tau + t_pi = 1/(2 f_xy8); rejects
    combinations where the pi pulse does not fit in the spacing.
    """
    if n_repeats < 1:
        raise ValueError("n_repeats must be at least 1")
    if f_xy8 <= 0:
        raise ValueError("f_xy8 must be positive")
    period = 1.0 / (2.0 * f_xy8)
    if t_pi >= period:
        raise ValueError("t_pi too long for the requested passband center")
    tau = 0.5 * (period - t_pi)
    return PulseSequence(SequenceKind.XY8, 8 * n_repeats, tau, t_pi, t_dead)


def make_xy8_fixed_duration(
    n_repeats: int,
    tau_tot: TimeSeconds,
    t_pi: TimeSeconds = 0.0,
    t_dead: TimeSeconds = 0.0,
) -> PulseSequence:
    """XY8-n sequence with prescribed total interrogation time."""
    if n_repeats < 1:
        raise ValueError("n_repeats must be at least 1")
    n_pi = 8 * n_repeats
    period = tau_tot / n_pi
    if t_pi >= period:
        raise ValueError("t_pi too long for the requested tau_tot")
    tau = 0.5 * (period - t_pi)
    return PulseSequence(SequenceKind.XY8, n_pi, tau, t_pi, t_dead)


def make_cpmg(
    n_pi: int,
    f_center: FrequencyHz,
    t_pi: TimeSeconds = 0.0,
    t_dead: TimeSeconds = 0.0,
) -> PulseSequence:
    """CPMG train of ``n_pi`` pulses with passband center ``f_center``."""
    if n_pi < 1:
        raise ValueError("n_pi must be at least 1")
    if f_center <= 0:
        raise ValueError("f_center must be positive")
    period = 1.0 / (2.0 * f_center)
    if t_pi >= period:
        raise ValueError("t_pi too long for the requested passband center")
    tau = 0.5 * (period - t_pi)
    return PulseSequence(SequenceKind.CPMG, n_pi, tau, t_pi, t_dead)


@dataclass(frozen=True)
class FilterFunction:
    """Phase-noise filter function of a decoupling sequence."""

    sequence: PulseSequence
    finite_pulse_correction: bool = True

    def __call__(self, f) -> np.ndarray:
        return filter_function_value(self, f)


def filter_function_value(ff: FilterFunction, f) -> np.ndarray:
    """Evaluate F(f); accepts a scalar or array of frequencies in Hz.

    Uses the closed form of the alternating geometric sum (a Dirichlet
    kernel), which is exact and O(1) per frequency for any pulse count.
    """
    seq = ff.sequence
    n = seq.n_pi
    f_arr = np.asarray(f, dtype=float)
    if np.any(f_arr < 0):
        raise ValueError("frequency must be nonnegative")
    z = 2.0 * np.pi * f_arr * seq.tau_tot

    # sum_{j=1..N} (-1)^j e^{i (j - 1/2) z / N}
    #   = e^{-i z / (2N)} * sum_j r^j            with r = -e^{i z / N}
    #   = e^{-i z / (2N)} * e^{i theta (N+1)/2} * sin(N theta / 2) / sin(theta / 2)
    # with r = e^{i theta}, theta = pi + z / N.  The ratio of sines needs its
    # analytic limit N * cos(N theta / 2) / cos(theta / 2) where sin(theta/2)
    # vanishes, i.e. exactly at the passband harmonics.
    theta = np.pi + z / n
    den = np.sin(0.5 * theta)
    num = np.sin(0.5 * n * theta)
    near_pole = np.abs(den) < 1e-9
    safe_den = np.where(near_pole, 1.0, den)
    ratio = np.where(
        near_pole,
        n * np.cos(0.5 * n * theta) / np.cos(0.5 * theta),
        num / safe_den,
    )
    pulse_sum = np.exp(-0.5j * z / n) * np.exp(0.5j * theta * (n + 1)) * ratio

    if ff.finite_pulse_correction and seq.t_pi > 0:
        gain = np.cos(np.pi * f_arr * seq.t_pi)
    else:
        gain = 1.0

    total = 1.0 + (-1.0) ** (n + 1) * np.exp(1j * z) + 2.0 * gain * pulse_sum
    result = np.abs(total) ** 2
    return result if result.ndim else float(result)


def _lattice_points(step: float, f_lo: float, f_hi: float) -> np.ndarray:
    """Integer multiples of ``step`` bracketing [f_lo, f_hi] from both sides."""
    k_lo = math.floor(f_lo / step)
    k_hi = math.ceil(f_hi / step)
    ks = np.arange(max(k_lo, 0), k_hi + 1)
    return ks * step


def _interpolant_integral(
    values_fn, step: float, f_lo: float, f_hi: float
) -> float:
    """Integral over [f_lo, f_hi] of the piecewise-linear interpolant of
    ``values_fn`` sampled on the absolute lattice k*step.

    Because the interpolant is defined on a lattice independent of the query
    interval, integrals are exactly additive over adjacent intervals.
    """
    if f_hi == f_lo:
        return 0.0
    grid = _lattice_points(step, f_lo, f_hi)
    vals = values_fn(grid)
    # Cumulative trapezoid along the lattice, then correct the two partial
    # end panels using the same linear interpolant.
    inner = np.concatenate(([0.0], np.cumsum(0.5 * (vals[1:] + vals[:-1]) * step)))

    def cumulative_at(x: float) -> float:
        if x <= grid[0]:
            return 0.0
        idx = min(int((x - grid[0]) // step), len(grid) - 2)
        x0 = grid[idx]
        frac = (x - x0) / step
        v0 = vals[idx]
        v1 = vals[idx + 1]
        vx = v0 + (v1 - v0) * frac
        return inner[idx] + 0.5 * (v0 + vx) * (x - x0)

    return cumulative_at(f_hi) - cumulative_at(f_lo)


def filter_function_integral(
    ff: FilterFunction,
    f_lo: FrequencyHz,
    f_hi: FrequencyHz,
    oversample: int = 32,
) -> float:
    """Band integral of the filter function in angular-frequency measure,
    i.e. the integral of F over [f_lo, f_hi] with d(omega) = 2 pi df.

    In this convention a delta-pulse sequence integrated over a band much
    wider than the passband gives (4 N + 2) * 2 pi * f_hi; with the
    finite-pulse correction on, (2 N + 2) * 2 pi * f_hi.

    The lattice step is 1 / (tau_tot * oversample), fine enough to resolve
    the 1/tau_tot oscillation of F, and results are exactly additive over
    adjacent intervals (same absolute lattice).
    """
    if not (math.isfinite(f_lo) and math.isfinite(f_hi)):
        raise ValueError("integration bounds must be finite")
    if f_lo < 0 or f_hi < f_lo:
        raise ValueError("need 0 <= f_lo <= f_hi")
    if oversample < 2:
        raise ValueError("oversample must be at least 2")
    step = 1.0 / (ff.sequence.tau_tot * oversample)
    value = _interpolant_integral(lambda g: filter_function_value(ff, g), step, f_lo, f_hi)
    return 2.0 * math.pi * value


def band_integral_weighted(
    ff: FilterFunction,
    weight_fn,
    f_lo: FrequencyHz,
    f_hi: FrequencyHz,
    oversample: int = 32,
) -> float:
    """Integral of weight(f) * F(f) df over [f_lo, f_hi] (ordinary frequency
    measure, no 2 pi).  Shares the anchored lattice with
    :func:`filter_function_integral`."""
    if f_lo < 0 or f_hi < f_lo:
        raise ValueError("need 0 <= f_lo <= f_hi")
    step = 1.0 / (ff.sequence.tau_tot * oversample)

    def integrand(grid: np.ndarray) -> np.ndarray:
        return weight_fn(grid) * filter_function_value(ff, grid)

    return _interpolant_integral(integrand, step, f_lo, f_hi)
