"""Intensity- and phase-noise propagation in a driven optical cavity with
electro-optic intensity feedback: closed-form spectra, loop analysis, and a
time-domain stochastic cross-check."""

from . import control, errors, model, oracle, spectra
from .control import StabilityReport, is_stable, open_loop_gain, required_loop_gain
from .model import (
    CavityParams,
    ConstantSpectrum,
    DetectorParams,
    DriveField,
    MechanicalResponse,
    RationalMagnitudeSpectrum,
    SteadyState,
    TabulatedSpectrum,
    steady_state,
    validate_cavity,
)
from .oracle import (
    ComparisonReport,
    PsdEstimate,
    SimulationConfig,
    TimeSeries,
    compare_to_analytic,
    dump_timeseries,
    estimate_psd,
    simulate,
)
from .spectra import (
    FrequencyGrid,
    LoopFilter,
    NoiseBudget,
    SuppressionRatio,
    coherent_limit,
    compare_squeezing_vs_feedback,
    highgain_limit,
    intracavity_amplitude_spectrum,
    intracavity_amplitude_spectrum_fb,
    radiation_pressure_spectrum,
    reflected_phase_spectrum,
    suppression_ratio,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
