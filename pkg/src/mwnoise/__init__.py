"""Microwave phase-noise budgeting and simulation for spin-qubit magnetometers.

The package predicts how the phase noise of a microwave source limits the
magnetic noise floor of pulsed (XY8/CPMG) and continuous-wave spin sensors,
and cross-checks those predictions with a time-domain Monte Carlo and a full
readout-stream signal pipeline.
"""

__version__ = "0.1.0"

from .core import (
    Constants,
    DEFAULT_CONSTANTS,
    GAMMA_NV,
    ZERO_FIELD_SPLITTING_D,
    resonance_frequencies,
)
from .pulse_sequences import (
    FilterFunction,
    PulseSequence,
    SequenceKind,
    filter_function_integral,
    filter_function_value,
    make_cpmg,
    make_xy8,
    make_xy8_fixed_duration,
)
from .noise_models import (
    PhaseNoiseSpectrum,
    PsdDrivenNoise,
    RandomWalkNoise,
    WhiteNoise,
    flat_spectrum,
    load_spectrum,
    mix_spectra,
    preset_names,
    preset_spectrum,
    save_spectrum,
    ssb_to_psd,
    synthesize_phase_track,
)
from .analytic_sensitivity import (
    CwModel,
    FFT_FLOOR_FACTOR,
    ReadoutModel,
    cw_eta_f,
    cw_sigma_f,
    eta_johnson_pulsed,
    eta_phi,
    eta_random_walk,
    eta_shot_noise,
    eta_white,
    sigma_phi_filter,
)
from .spin_simulator import (
    MonteCarloResult,
    SequenceRealization,
    cw_detuning_from_trace,
    dq_noise_suppression,
    dq_ramsey_probability,
    dq_ramsey_probability_tones,
    monte_carlo_sigma_phi,
    phi_tot_batch,
    propagate_phase,
    psd_sigma_phi_grid,
    simulate_cw_trace,
    simulate_gradiometer,
)
from .signal_pipeline import (
    AmplitudeSpectrum,
    CalibrationFit,
    FitError,
    FloorParams,
    ReadoutStream,
    alias_frequency,
    amplitude_spectrum,
    estimate_noise_floor,
    excess_noise,
    fit_calibration,
    load_amplitude_spectrum,
    load_stream,
    save_amplitude_spectrum,
    save_stream,
    sensitivity_from_floor,
    synthesize_stream,
    with_floor,
)

__all__ = [
    "AmplitudeSpectrum",
    "CalibrationFit",
    "Constants",
    "CwModel",
    "DEFAULT_CONSTANTS",
    "FFT_FLOOR_FACTOR",
    "FilterFunction",
    "FitError",
    "FloorParams",
    "GAMMA_NV",
    "MonteCarloResult",
    "PhaseNoiseSpectrum",
    "PsdDrivenNoise",
    "PulseSequence",
    "RandomWalkNoise",
    "ReadoutModel",
    "ReadoutStream",
    "SequenceKind",
    "SequenceRealization",
    "WhiteNoise",
    "ZERO_FIELD_SPLITTING_D",
    "alias_frequency",
    "amplitude_spectrum",
    "cw_detuning_from_trace",
    "cw_eta_f",
    "cw_sigma_f",
    "dq_noise_suppression",
    "dq_ramsey_probability",
    "dq_ramsey_probability_tones",
    "estimate_noise_floor",
    "eta_johnson_pulsed",
    "eta_phi",
    "eta_random_walk",
    "eta_shot_noise",
    "eta_white",
    "excess_noise",
    "filter_function_integral",
    "filter_function_value",
    "fit_calibration",
    "flat_spectrum",
    "load_amplitude_spectrum",
    "load_spectrum",
    "load_stream",
    "make_cpmg",
    "make_xy8",
    "make_xy8_fixed_duration",
    "mix_spectra",
    "monte_carlo_sigma_phi",
    "phi_tot_batch",
    "preset_names",
    "preset_spectrum",
    "propagate_phase",
    "psd_sigma_phi_grid",
    "resonance_frequencies",
    "save_amplitude_spectrum",
    "save_spectrum",
    "save_stream",
    "sensitivity_from_floor",
    "sigma_phi_filter",
    "simulate_cw_trace",
    "simulate_gradiometer",
    "ssb_to_psd",
    "synthesize_phase_track",
    "synthesize_stream",
    "with_floor",
]
