"""Domain types: cavity rates, drive field, detector, steady state and the
mirror-response models consumed by every other module.

Conventions used throughout the package: all rates and frequencies are
angular (rad/s); noise spectra are dimensionless, normalized so vacuum
fluctuations have unit spectral density ("shot-noise units"); spectra are
single-argument functions of angular frequency and are evaluated on
nonnegative frequencies only.  Carrier amplitudes are real: the input field
in sqrt(photons/s), the intra-cavity field in sqrt(photons), so that
2*kappa*alpha**2 is a photon flux.

All types are immutable after construction and every operation is a pure
function, so instances can be shared freely across concurrent workers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    InvalidParameter,
    NegativeRate,
    NonPositiveInputCoupling,
    OutsideTabulatedRange,
    UncertaintyViolation,
)

__all__ = [
    "CavityParams",
    "ConstantSpectrum",
    "DetectorParams",
    "DriveField",
    "MechanicalResponse",
    "OscillatorTransfer",
    "RationalMagnitudeSpectrum",
    "SteadyState",
    "TabulatedSpectrum",
    "as_spectrum",
    "steady_state",
    "validate_cavity",
]


def _require_finite(name: str, value: float) -> float:
    value = float(value)
    if not math.isfinite(value):
        raise InvalidParameter(f"{name} must be finite, got {value!r}")
    return value


# ---------------------------------------------------------------------------
# Noise spectra as evaluable objects
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ConstantSpectrum:
    """Frequency-independent spectral density."""

    value: float

    def __post_init__(self):
        v = _require_finite("spectrum value", self.value)
        if v < 0.0:
            raise InvalidParameter(f"spectral density must be >= 0, got {v}")
        object.__setattr__(self, "value", v)

    @property
    def is_constant(self) -> bool:
        return True

    def at(self, omega):
        omega = np.asarray(omega, dtype=float)
        return np.full_like(omega, self.value)


@dataclass(frozen=True)
class TabulatedSpectrum:
    """Linear interpolation on a strictly increasing frequency grid.

    Evaluation outside the tabulated range raises instead of extrapolating:
    silent extrapolation hides modeling errors.
    """

    omegas: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        om = np.asarray(self.omegas, dtype=float)
        va = np.asarray(self.values, dtype=float)
        if om.ndim != 1 or om.size < 2:
            raise InvalidParameter("tabulated spectrum needs >= 2 grid points")
        if va.shape != om.shape:
            raise InvalidParameter("tabulated spectrum grid/value shape mismatch")
        if not np.all(np.isfinite(om)) or not np.all(np.isfinite(va)):
            raise InvalidParameter("tabulated spectrum entries must be finite")
        if np.any(np.diff(om) <= 0):
            raise InvalidParameter("tabulated spectrum grid must be strictly increasing")
        if np.any(om < 0):
            raise InvalidParameter("tabulated spectrum frequencies must be >= 0")
        if np.any(va < 0):
            raise InvalidParameter("tabulated spectral densities must be >= 0")
        om.setflags(write=False)
        va.setflags(write=False)
        object.__setattr__(self, "omegas", om)
        object.__setattr__(self, "values", va)

    def __eq__(self, other):
        if not isinstance(other, TabulatedSpectrum):
            return NotImplemented
        return np.array_equal(self.omegas, other.omegas) and np.array_equal(
            self.values, other.values
        )

    def __hash__(self):
        return hash((self.omegas.tobytes(), self.values.tobytes()))

    @property
    def is_constant(self) -> bool:
        return False

    def at(self, omega):
        omega = np.asarray(omega, dtype=float)
        if np.any(omega < self.omegas[0]) or np.any(omega > self.omegas[-1]):
            raise OutsideTabulatedRange(
                "requested frequency outside tabulated range "
                f"[{self.omegas[0]:g}, {self.omegas[-1]:g}] rad/s"
            )
        return np.interp(omega, self.omegas, self.values)


@dataclass(frozen=True)
class RationalMagnitudeSpectrum:
    """Magnitude-squared of a rational response: |g * prod(iw - z) / prod(iw - p)|**2.

    Nonnegative by construction for any zero/pole placement.
    """

    gain: float
    zeros: tuple = ()
    poles: tuple = ()

    def __post_init__(self):
        _require_finite("rational spectrum gain", self.gain)
        object.__setattr__(self, "zeros", tuple(complex(z) for z in self.zeros))
        object.__setattr__(self, "poles", tuple(complex(p) for p in self.poles))
        for p in self.poles:
            if p == 0:
                raise InvalidParameter("rational spectrum pole at omega=0 is singular")

    @property
    def is_constant(self) -> bool:
        return not self.zeros and not self.poles

    def at(self, omega):
        omega = np.asarray(omega, dtype=float)
        s = 1j * omega
        out = np.full(omega.shape, abs(self.gain) ** 2, dtype=float)
        for z in self.zeros:
            out *= np.abs(s - z) ** 2
        for p in self.poles:
            out /= np.abs(s - p) ** 2
        return out


@dataclass(frozen=True)
class OscillatorTransfer:
    """Damped mechanical resonance: coupling / ((wm^2 - w^2)^2 + (w*wm/Q)^2)."""

    coupling: float
    omega_m: float
    q_factor: float

    def __post_init__(self):
        c = _require_finite("oscillator coupling", self.coupling)
        wm = _require_finite("oscillator omega_m", self.omega_m)
        q = _require_finite("oscillator q_factor", self.q_factor)
        if c < 0:
            raise InvalidParameter("oscillator coupling must be >= 0")
        if wm <= 0:
            raise InvalidParameter("oscillator omega_m must be > 0")
        if q <= 0:
            raise InvalidParameter("oscillator q_factor must be > 0")

    @property
    def is_constant(self) -> bool:
        return False

    def at(self, omega):
        omega = np.asarray(omega, dtype=float)
        wm = self.omega_m
        denom = (wm**2 - omega**2) ** 2 + (omega * wm / self.q_factor) ** 2
        return self.coupling / denom


def as_spectrum(value):
    """Coerce a float into a ConstantSpectrum; pass spectra through."""
    if isinstance(
        value,
        (ConstantSpectrum, TabulatedSpectrum, RationalMagnitudeSpectrum, OscillatorTransfer),
    ):
        return value
    return ConstantSpectrum(float(value))


def _probe_omegas(*spectra) -> np.ndarray:
    """Frequencies on which pairwise invariants of the given spectra are checked.

    Tabulated spectra contribute their own grid points (restricted to the
    range every spectrum can evaluate); other spectra are spot-checked on a
    wide logarithmic probe.
    """
    lo, hi = 0.0, math.inf
    points = [np.array([0.0])]
    any_tabulated = False
    for sp in spectra:
        if isinstance(sp, TabulatedSpectrum):
            any_tabulated = True
            lo = max(lo, sp.omegas[0])
            hi = min(hi, sp.omegas[-1])
            points.append(sp.omegas)
    if not any_tabulated:
        if all(sp.is_constant for sp in spectra):
            return np.array([0.0])
        return np.concatenate([[0.0], np.logspace(-6, 6, 121)])
    om = np.unique(np.concatenate(points))
    return om[(om >= lo) & (om <= hi)]


# ---------------------------------------------------------------------------
# Cavity, drive, detector, steady state
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CavityParams:
    """The three loss rates of the cavity, all in rad/s.

    kappa_in couples the drive in through the front mirror, kappa_out the
    transmitted field out through the rear mirror, kappa_loss lumps the
    intra-cavity losses.  The total rate kappa is derived, never stored.
    """

    kappa_in: float
    kappa_out: float
    kappa_loss: float

    def __post_init__(self):
        ki = _require_finite("kappa_in", self.kappa_in)
        ko = _require_finite("kappa_out", self.kappa_out)
        kl = _require_finite("kappa_loss", self.kappa_loss)
        if ki <= 0.0:
            raise NonPositiveInputCoupling(f"kappa_in must be > 0, got {ki}")
        if ko < 0.0 or kl < 0.0:
            raise NegativeRate(f"kappa_out={ko}, kappa_loss={kl}: rates must be >= 0")
        object.__setattr__(self, "kappa_in", ki)
        object.__setattr__(self, "kappa_out", ko)
        object.__setattr__(self, "kappa_loss", kl)

    @property
    def kappa(self) -> float:
        return self.kappa_in + self.kappa_out + self.kappa_loss

    @property
    def is_impedance_matched(self) -> bool:
        return self.kappa_in == self.kappa_out and self.kappa_loss == 0.0


def validate_cavity(kappa_in: float, kappa_out: float, kappa_loss: float) -> CavityParams:
    """Validate raw loss rates and return the cavity parameter set."""
    return CavityParams(kappa_in, kappa_out, kappa_loss)


@dataclass(frozen=True)
class DetectorParams:
    """Quantum efficiency of the feedback photodetector."""

    eta: float

    def __post_init__(self):
        eta = _require_finite("eta", self.eta)
        if not 0.0 < eta <= 1.0:
            raise InvalidParameter(f"eta must lie in (0, 1], got {eta}")
        object.__setattr__(self, "eta", eta)


@dataclass(frozen=True)
class DriveField:
    """Input carrier plus its amplitude/phase quadrature noise spectra.

    amp_noise and phase_noise may be floats (constant spectra) or spectrum
    objects.  The uncertainty product amp*phase >= 1 is enforced on
    construction: on every tabulated grid point when tabulated spectra are
    involved, on a wide logarithmic probe otherwise.
    """

    amplitude: float
    amp_noise: object = field(default=1.0)
    phase_noise: object = field(default=1.0)

    def __post_init__(self):
        amp = _require_finite("drive amplitude", self.amplitude)
        if amp < 0.0:
            raise InvalidParameter(f"drive amplitude must be >= 0, got {amp}")
        vin = as_spectrum(self.amp_noise)
        vph = as_spectrum(self.phase_noise)
        object.__setattr__(self, "amplitude", amp)
        object.__setattr__(self, "amp_noise", vin)
        object.__setattr__(self, "phase_noise", vph)
        probe = _probe_omegas(vin, vph)
        product = vin.at(probe) * vph.at(probe)
        if np.any(product < 1.0 - 1e-12):
            worst = probe[np.argmin(product)]
            raise UncertaintyViolation(
                f"amp_noise * phase_noise = {product.min():.6g} < 1 at "
                f"omega = {worst:.6g} rad/s"
            )

    @classmethod
    def coherent(cls, amplitude: float) -> "DriveField":
        return cls(amplitude, 1.0, 1.0)

    def amp_noise_at(self, omega):
        return self.amp_noise.at(omega)

    def phase_noise_at(self, omega):
        return self.phase_noise.at(omega)


@dataclass(frozen=True)
class SteadyState:
    """Intra-cavity carrier amplitude of the locked, resonant cavity."""

    alpha: float

    def __post_init__(self):
        a = _require_finite("alpha", self.alpha)
        if a < 0.0:
            raise InvalidParameter(f"alpha must be >= 0, got {a}")
        object.__setattr__(self, "alpha", a)


def steady_state(cavity: CavityParams, drive: DriveField) -> SteadyState:
    """Resonant steady state: alpha = sqrt(2*kappa_in) * A_in / kappa."""
    alpha = math.sqrt(2.0 * cavity.kappa_in) * drive.amplitude / cavity.kappa
    return SteadyState(alpha)


# ---------------------------------------------------------------------------
# Mirror response: radiation-pressure transfer and thermal detuning spectrum
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MechanicalResponse:
    """Pluggable mirror response.

    ``transfer`` maps the intra-cavity intensity spectrum to the
    radiation-pressure detuning spectrum (pointwise multiplier F(omega));
    ``thermal`` is the detuning spectrum from thermally excited mechanical
    modes, a free model input.  Use the ``constant``, ``harmonic_oscillator``
    or ``tabulated`` constructors.
    """

    transfer: object
    thermal: object = field(default=0.0)

    def __post_init__(self):
        object.__setattr__(self, "transfer", as_spectrum(self.transfer))
        object.__setattr__(self, "thermal", as_spectrum(self.thermal))

    @classmethod
    def constant(cls, c: float, thermal=0.0) -> "MechanicalResponse":
        """Frequency-independent transfer F(omega) = c."""
        return cls(ConstantSpectrum(c), as_spectrum(thermal))

    @classmethod
    def harmonic_oscillator(
        cls, coupling: float, omega_m: float, q_factor: float, thermal=0.0
    ) -> "MechanicalResponse":
        """Single damped mechanical resonance, peak near omega_m of height
        ~ coupling * Q^2 / omega_m^4."""
        return cls(OscillatorTransfer(coupling, omega_m, q_factor), as_spectrum(thermal))

    @classmethod
    def tabulated(cls, omegas, transfer_values, thermal=0.0) -> "MechanicalResponse":
        """Tabulated transfer; ``thermal`` may be a constant or a
        (omegas, values) pair for a tabulated thermal spectrum."""
        tr = TabulatedSpectrum(np.asarray(omegas, float), np.asarray(transfer_values, float))
        if isinstance(thermal, tuple):
            thermal = TabulatedSpectrum(
                np.asarray(thermal[0], float), np.asarray(thermal[1], float)
            )
        return cls(tr, as_spectrum(thermal))

    def transfer_at(self, omega):
        return self.transfer.at(omega)

    def thermal_at(self, omega):
        return self.thermal.at(omega)
