"""Closed-form frequency-domain noise spectra.

Open-loop and closed-loop intra-cavity intensity noise, the reflected-field
phase noise that constitutes the thermal-noise readout, their per-source
budgets, and the limiting values (coherent floor, high-gain floor,
suppression ratio).

Every budget is decomposed by physical source; the decibel convention for
power-spectrum ratios is 10*log10.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import (
    DegenerateDenominator,
    GridMismatch,
    InvalidParameter,
    InvalidSqueezeFactor,
    ZeroOutputCoupling,
)
from .model import (
    CavityParams,
    DetectorParams,
    DriveField,
    MechanicalResponse,
    SteadyState,
)

__all__ = [
    "FrequencyGrid",
    "LoopFilter",
    "NoiseBudget",
    "SOURCE_LABELS",
    "SqueezeFeedbackComparison",
    "SuppressionRatio",
    "coherent_limit",
    "compare_squeezing_vs_feedback",
    "highgain_limit",
    "intracavity_amplitude_spectrum",
    "intracavity_amplitude_spectrum_fb",
    "radiation_pressure_spectrum",
    "reflected_phase_spectrum",
    "suppression_ratio",
]

# Fixed ordering so CSV columns are deterministic for a given budget.
SOURCE_LABELS = (
    "input_amplitude",
    "input_phase",
    "input_vacuum",
    "output_vacuum",
    "loss_vacuum",
    "detector_vacuum",
    "thermal",
    "radiation_pressure",
)

# The input-phase entry is the classical excess (V- - 1) and is negative for
# a phase-squeezed drive; every other entry is nonnegative by construction.
_SIGNED_LABELS = frozenset({"input_phase"})


@dataclass(frozen=True)
class FrequencyGrid:
    """Strictly increasing, nonnegative angular frequencies."""

    omegas: np.ndarray

    def __post_init__(self):
        om = np.asarray(self.omegas, dtype=float)
        if om.ndim != 1 or om.size == 0:
            raise InvalidParameter("frequency grid must be a non-empty 1-d array")
        if not np.all(np.isfinite(om)):
            raise InvalidParameter("frequency grid must be finite")
        if np.any(om < 0):
            raise InvalidParameter("frequency grid must be >= 0")
        if om.size > 1 and np.any(np.diff(om) <= 0):
            raise InvalidParameter("frequency grid must be strictly increasing")
        om = om.copy()
        om.setflags(write=False)
        object.__setattr__(self, "omegas", om)

    def __len__(self) -> int:
        return int(self.omegas.size)

    def __eq__(self, other) -> bool:
        if not isinstance(other, FrequencyGrid):
            return NotImplemented
        return np.array_equal(self.omegas, other.omegas)

    def __hash__(self):
        return hash((self.omegas.size, float(self.omegas[0]), float(self.omegas[-1])))

    @classmethod
    def linear(cls, omega_min: float, omega_max: float, points: int) -> "FrequencyGrid":
        return cls(np.linspace(omega_min, omega_max, points))

    @classmethod
    def logarithmic(cls, omega_min: float, omega_max: float, points: int) -> "FrequencyGrid":
        if omega_min <= 0:
            raise InvalidParameter("logarithmic grid needs omega_min > 0")
        return cls(np.geomspace(omega_min, omega_max, points))


@dataclass(frozen=True, eq=False)
class NoiseBudget:
    """Per-source spectral contributions on a common grid, plus their total.

    The total equals the sum of the contributions to 1e-12 relative at every
    grid point.
    """

    grid: FrequencyGrid
    contributions: dict
    total: np.ndarray

    def __post_init__(self):
        n = len(self.grid)
        total = np.asarray(self.total, dtype=float)
        if total.shape != (n,):
            raise InvalidParameter("budget total length does not match grid")
        acc = np.zeros(n)
        for label, values in self.contributions.items():
            if label not in SOURCE_LABELS:
                raise InvalidParameter(f"unknown budget source label {label!r}")
            values = np.asarray(values, dtype=float)
            if values.shape != (n,):
                raise GridMismatch(f"contribution {label!r} length does not match grid")
            if label not in _SIGNED_LABELS and np.any(values < 0):
                raise InvalidParameter(f"contribution {label!r} must be >= 0")
            acc += values
        scale = np.maximum(np.abs(total), 1.0)
        if np.any(np.abs(acc - total) > 1e-12 * scale):
            raise InvalidParameter("budget total does not equal the sum of contributions")
        if np.any(total < 0):
            raise InvalidParameter("budget total must be >= 0")
        total = total.copy()
        total.setflags(write=False)
        object.__setattr__(self, "total", total)
        object.__setattr__(self, "contributions", dict(self.contributions))

    @property
    def labels(self) -> tuple:
        return tuple(l for l in SOURCE_LABELS if l in self.contributions)

    def contribution(self, label: str) -> np.ndarray:
        return self.contributions[label]


def _budget(grid: FrequencyGrid, parts: dict) -> NoiseBudget:
    total = np.zeros(len(grid))
    for values in parts.values():
        total = total + values
    return NoiseBudget(grid, parts, total)


class SuppressionRatio(NamedTuple):
    linear: float
    db: float


@dataclass(frozen=True)
class SqueezeFeedbackComparison:
    """Reflected-phase budgets of the two routes to reduced radiation
    pressure noise: in-loop feedback versus an amplitude-squeezed drive."""

    feedback: NoiseBudget
    squeezed: NoiseBudget


# ---------------------------------------------------------------------------
# Feedback electronics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LoopFilter:
    """Rational transfer function of the feedback electronics with an
    optional pure delay:

        K(omega) = gain * prod(iw - z) / prod(iw - p) * exp(-i*w*delay)

    Zeros/poles must be closed under conjugation (real impulse response),
    the rational part proper (len(zeros) <= len(poles)), and every pole
    strictly in the left half-plane: the filter itself is stable and
    realizable; closed-loop stability is a separate question answered by
    the control module.
    """

    gain: float
    zeros: tuple = ()
    poles: tuple = ()
    delay: float = 0.0

    def __post_init__(self):
        gain = float(self.gain)
        if not math.isfinite(gain):
            raise InvalidParameter("filter gain must be finite")
        zeros = tuple(complex(z) for z in self.zeros)
        poles = tuple(complex(p) for p in self.poles)
        delay = float(self.delay)
        if not math.isfinite(delay) or delay < 0:
            raise InvalidParameter("filter delay must be finite and >= 0")
        if len(zeros) > len(poles):
            raise InvalidParameter(
                "filter must be proper: need len(zeros) <= len(poles), "
                f"got {len(zeros)} > {len(poles)}"
            )
        for name, values in (("zeros", zeros), ("poles", poles)):
            if not _conjugate_closed(values):
                raise InvalidParameter(f"filter {name} are not closed under conjugation")
        for p in poles:
            if p.real >= 0:
                raise InvalidParameter(
                    f"filter pole {p} is not strictly in the left half-plane"
                )
        object.__setattr__(self, "gain", gain)
        object.__setattr__(self, "zeros", zeros)
        object.__setattr__(self, "poles", poles)
        object.__setattr__(self, "delay", delay)

    @classmethod
    def flat(cls, gain: float) -> "LoopFilter":
        return cls(gain=gain)

    @property
    def order(self) -> int:
        return len(self.poles)

    def response(self, omega):
        """K evaluated on nonnegative angular frequencies (complex array)."""
        omega = np.asarray(omega, dtype=float)
        s = 1j * omega
        out = np.full(omega.shape, complex(self.gain), dtype=complex)
        for z in self.zeros:
            out = out * (s - z)
        for p in self.poles:
            out = out / (s - p)
        if self.delay > 0.0:
            out = out * np.exp(-1j * omega * self.delay)
        return out

    def rational_coefficients(self):
        """(num, den) real polynomial coefficients of the delay-free part,
        descending powers of s."""
        num = np.atleast_1d(np.real(self.gain * np.poly(self.zeros) if self.zeros else [self.gain]))
        den = np.atleast_1d(np.real(np.poly(self.poles) if self.poles else [1.0]))
        return np.asarray(num, float), np.asarray(den, float)


def _conjugate_closed(values: tuple, rtol: float = 1e-9) -> bool:
    remaining = list(values)
    while remaining:
        v = remaining.pop()
        if abs(v.imag) <= rtol * max(1.0, abs(v)):
            continue
        for i, other in enumerate(remaining):
            if abs(other - v.conjugate()) <= rtol * max(1.0, abs(v)):
                remaining.pop(i)
                break
        else:
            return False
    return True


# ---------------------------------------------------------------------------
# Intra-cavity intensity noise
# ---------------------------------------------------------------------------

def intracavity_amplitude_spectrum(
    cavity: CavityParams, drive: DriveField, grid: FrequencyGrid
) -> NoiseBudget:
    """Open-loop intensity noise of the cavity mode:

        V_a(w) = (2*kin*Vin(w) + 2*kout + 2*kloss) / (kappa^2 + w^2)

    decomposed into the drive, output-mirror vacuum and loss vacuum parts.
    """
    om = grid.omegas
    denom = cavity.kappa**2 + om**2
    vin = drive.amp_noise_at(om)
    parts = {
        "input_amplitude": 2.0 * cavity.kappa_in * vin / denom,
        "output_vacuum": 2.0 * cavity.kappa_out / denom,
        "loss_vacuum": 2.0 * cavity.kappa_loss / denom,
    }
    return _budget(grid, parts)


def coherent_limit(cavity: CavityParams) -> float:
    """Low-frequency intensity noise floor with a coherent drive: 2/kappa."""
    return 2.0 / cavity.kappa


def intracavity_amplitude_spectrum_fb(
    cavity: CavityParams,
    drive: DriveField,
    detector: DetectorParams,
    loop_filter: LoopFilter,
    grid: FrequencyGrid,
) -> NoiseBudget:
    """Closed-loop intensity noise with the transmitted field detected at
    efficiency eta and fed back through K onto the drive amplitude:

        V_a^f(w) = (2*kin*Vin + 2*kin*(1-eta)*|K|^2
                    + |sqrt(2*eta*kin)*K + sqrt(2*kout)|^2 + 2*kloss)
                   / |kappa + i*w + 2*sqrt(kout*kin*eta)*K|^2

    The output-vacuum entry carries the correlated cross term: the same
    vacuum field enters the cavity through the rear mirror and hits the
    feedback detector, and the split of that interference is not
    gauge-invariant.  With K = 0 this reduces exactly to the open-loop
    spectrum.
    """
    om = grid.omegas
    kin, kout, kloss = cavity.kappa_in, cavity.kappa_out, cavity.kappa_loss
    kappa = cavity.kappa
    eta = detector.eta
    k_resp = loop_filter.response(om)
    loop_coupling = 2.0 * math.sqrt(kout * kin * eta)
    d = kappa + 1j * om + loop_coupling * k_resp
    denom = d.real**2 + d.imag**2
    floor = 1e-12 * kappa
    if np.any(denom < floor * floor):
        worst = om[int(np.argmin(denom))]
        raise DegenerateDenominator(
            f"closed-loop denominator vanishes near omega = {worst:.6g} rad/s; "
            "run the stability analysis on this loop"
        )
    vin = drive.amp_noise_at(om)
    k_mag2 = k_resp.real**2 + k_resp.imag**2
    # |sqrt(2*eta*kin)*K + sqrt(2*kout)|^2 expanded so the K = 0 case reduces
    # to the open-loop expression exactly; the clamp only absorbs rounding
    # when the interference is fully destructive.
    corr_sq = np.maximum(
        2.0 * eta * kin * k_mag2
        + 4.0 * math.sqrt(eta * kin * kout) * k_resp.real
        + 2.0 * kout,
        0.0,
    )
    parts = {
        "input_amplitude": 2.0 * kin * vin / denom,
        "detector_vacuum": 2.0 * kin * (1.0 - eta) * k_mag2 / denom,
        "output_vacuum": corr_sq / denom,
        "loss_vacuum": 2.0 * kloss / denom,
    }
    return _budget(grid, parts)


def highgain_limit(cavity: CavityParams, detector: DetectorParams) -> float:
    """Closed-loop floor at low frequency and unbounded gain: 1/(2*eta*kout).

    Only the rear-mirror vacuum and the detection inefficiency survive; the
    drive noise and the loss vacuum are fully suppressed by the loop.
    """
    if cavity.kappa_out == 0.0:
        raise ZeroOutputCoupling("highgain_limit needs kappa_out > 0")
    return 1.0 / (2.0 * detector.eta * cavity.kappa_out)


def suppression_ratio(cavity: CavityParams, detector: DetectorParams) -> SuppressionRatio:
    """High-gain closed-loop noise relative to the coherent open-loop floor:
    kappa/(4*eta*kout); equals 1/(2*eta) for an impedance-matched cavity."""
    if cavity.kappa_out == 0.0:
        raise ZeroOutputCoupling("suppression_ratio needs kappa_out > 0")
    if cavity.is_impedance_matched:
        linear = 1.0 / (2.0 * detector.eta)
    else:
        linear = cavity.kappa / (4.0 * detector.eta * cavity.kappa_out)
    return SuppressionRatio(linear, 10.0 * math.log10(linear))


# ---------------------------------------------------------------------------
# Detuning noise and the reflected-phase readout
# ---------------------------------------------------------------------------

def radiation_pressure_spectrum(mech: MechanicalResponse, va, grid: FrequencyGrid):
    """Detuning spectrum driven by intensity noise: pointwise F(w) * V_a(w).

    ``va`` is either the values array of an intensity budget on ``grid`` or
    the budget itself (its grid must match exactly).
    """
    if isinstance(va, NoiseBudget):
        if va.grid != grid:
            raise GridMismatch("intensity budget grid differs from the requested grid")
        va = va.total
    va = np.asarray(va, dtype=float)
    if va.shape != grid.omegas.shape:
        raise GridMismatch(
            f"intensity spectrum has {va.size} points, grid has {len(grid)}"
        )
    return mech.transfer_at(grid.omegas) * va


def reflected_phase_spectrum(
    cavity: CavityParams,
    drive: DriveField,
    steady: SteadyState,
    mech: MechanicalResponse | None,
    grid: FrequencyGrid,
    feedback: tuple | None = None,
) -> NoiseBudget:
    """Phase noise of the reflected field, the error-signal readout of the
    locked cavity:

        V_ref^-(w) = 1 + [8*kin*alpha^2*(V_dR + V_dT)
                          + ((2*kin - kappa)^2 + w^2) * (Vph - 1)]
                     / (kappa^2 + w^2)

    The vacuum floor of exactly 1 splits across the promptly reflected input
    vacuum, the rear-mirror vacuum and the loss vacuum through the identity
    (2*kin - kappa)^2 + w^2 + 4*kin*(kout + kloss) = kappa^2 + w^2.  The
    input_phase entry is the classical excess above that floor.

    With ``feedback`` = (detector, loop_filter), the radiation-pressure term
    uses the closed-loop intensity spectrum; the modulator adds no phase
    signal, so the phase channel is otherwise unchanged.  The caller is
    responsible for closing the loop only when it is stable; a marginal loop
    surfaces as DegenerateDenominator.
    """
    om = grid.omegas
    kin, kout, kloss = cavity.kappa_in, cavity.kappa_out, cavity.kappa_loss
    kappa = cavity.kappa
    lorentz = kappa**2 + om**2
    refl = (2.0 * kin - kappa) ** 2 + om**2

    if feedback is None:
        va = intracavity_amplitude_spectrum(cavity, drive, grid).total
    else:
        detector, loop_filter = feedback
        va = intracavity_amplitude_spectrum_fb(cavity, drive, detector, loop_filter, grid).total

    if mech is None:
        v_rp = np.zeros_like(om)
        v_th = np.zeros_like(om)
    else:
        v_rp = mech.transfer_at(om) * va
        v_th = mech.thermal_at(om)

    alpha2 = steady.alpha**2
    vph = drive.phase_noise_at(om)
    parts = {
        "thermal": 8.0 * kin * alpha2 * v_th / lorentz,
        "radiation_pressure": 8.0 * kin * alpha2 * v_rp / lorentz,
        "input_phase": refl * (vph - 1.0) / lorentz,
        "input_vacuum": refl / lorentz,
        "output_vacuum": 4.0 * kin * kout / lorentz,
        "loss_vacuum": 4.0 * kin * kloss / lorentz,
    }
    return _budget(grid, parts)


def compare_squeezing_vs_feedback(
    cavity: CavityParams,
    drive_base: DriveField,
    steady: SteadyState,
    mech: MechanicalResponse | None,
    grid: FrequencyGrid,
    detector: DetectorParams,
    loop_filter: LoopFilter,
    squeeze: float,
) -> SqueezeFeedbackComparison:
    """Reflected-phase budgets for feedback versus an amplitude-squeezed
    drive.

    Feedback route: the base drive with a coherent phase quadrature
    (Vph = 1) and the loop closed.  Squeezed route: open loop with a
    minimum-uncertainty squeezed drive, Vin = squeeze, Vph = 1/squeeze.
    The squeezed route buys its intensity reduction at the price of excess
    phase noise that lands directly in the readout; squeeze = 1 is the
    no-squeezing limit.
    """
    squeeze = float(squeeze)
    if not 0.0 < squeeze <= 1.0:
        raise InvalidSqueezeFactor(f"squeeze factor must lie in (0, 1], got {squeeze}")
    drive_fb = DriveField(drive_base.amplitude, drive_base.amp_noise, 1.0)
    drive_sq = DriveField(drive_base.amplitude, squeeze, 1.0 / squeeze)
    fb = reflected_phase_spectrum(
        cavity, drive_fb, steady, mech, grid, feedback=(detector, loop_filter)
    )
    sq = reflected_phase_spectrum(cavity, drive_sq, steady, mech, grid, feedback=None)
    return SqueezeFeedbackComparison(feedback=fb, squeezed=sq)
