"""Loop analysis: open-loop gain, closed-loop stability, margins, and the
required-gain calculator.

The open-loop transfer is defined so the closed-loop response denominator
factors as (kappa + i*w) * (1 + L(w)):

    L(w) = 2*sqrt(kin*kout*eta) * K(w) / (kappa + i*w)

Delay-free loops are judged by counting right-half-plane roots of the
closed-loop characteristic polynomial; loops with delay by the winding
number of the sampled L(i*w) locus around -1 (the open loop has no
right-half-plane poles, so any encirclement means instability).  Margins
are read off the locus in both cases.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameter, InvalidResidual, NumericalRootFailure
from .model import CavityParams, DetectorParams
from .spectra import LoopFilter

__all__ = [
    "StabilityReport",
    "is_stable",
    "open_loop_gain",
    "required_loop_gain",
]

# Nyquist sampling: log grid 1e-3*kappa .. >=1e3*kappa, >= 4096 points,
# refined until the locus angle is resolved; delays make polynomial methods
# inapplicable.
_NYQUIST_BASE_POINTS = 4096
_NYQUIST_MAX_POINTS = 1 << 18
_MAX_ANGLE_STEP = 0.2  # rad, both for arg(1+L) winding and arg(L) margins


@dataclass(frozen=True)
class StabilityReport:
    """Outcome of a closed-loop stability analysis.

    gain_margin_db is +inf when the locus never crosses the negative real
    axis; phase_margin_deg is None when there is no unity-gain crossing.
    Margins are worst-case over all crossings.
    """

    stable: bool
    gain_margin_db: float
    phase_margin_deg: float | None
    unstable_pole_count: int
    method: str

    def __post_init__(self):
        if self.stable != (self.unstable_pole_count == 0):
            raise InvalidParameter("stable flag inconsistent with unstable_pole_count")


def _loop_coupling(cavity: CavityParams, detector: DetectorParams) -> float:
    return 2.0 * math.sqrt(cavity.kappa_in * cavity.kappa_out * detector.eta)


def open_loop_gain(
    cavity: CavityParams,
    detector: DetectorParams,
    loop_filter: LoopFilter,
    omega,
):
    """L(w) = 2*sqrt(kin*kout*eta)*K(w)/(kappa + i*w); complex, vectorized."""
    omega = np.asarray(omega, dtype=float)
    coupling = _loop_coupling(cavity, detector)
    return coupling * loop_filter.response(omega) / (cavity.kappa + 1j * omega)


# ---------------------------------------------------------------------------
# Locus sampling
# ---------------------------------------------------------------------------

def _locus(cavity, detector, loop_filter):
    """Adaptively refined samples (omega, L(i*omega)) on omega >= 0.

    The grid extends until |L| is safely below 1 so the winding integral and
    margin search see the whole active part of the locus.
    """
    kappa = cavity.kappa
    coupling = _loop_coupling(cavity, detector)

    # |L| <= coupling*|gain|*prod|..|/omega for omega beyond all filter
    # features; push the upper end until that bound is < 0.01.
    hi = 1e3 * kappa
    scale = coupling * abs(loop_filter.gain)
    for z in loop_filter.zeros:
        scale *= 1.0
    if scale > 0:
        hi = max(hi, 100.0 * scale)
    corner = max(
        [abs(z) for z in loop_filter.zeros]
        + [abs(p) for p in loop_filter.poles]
        + [kappa],
    )
    hi = max(hi, 100.0 * corner)

    omegas = np.concatenate([[0.0], np.geomspace(1e-3 * kappa, hi, _NYQUIST_BASE_POINTS)])
    values = open_loop_gain(cavity, detector, loop_filter, omegas)

    # Refine wherever the angle of (1+L) or of L jumps too much between
    # neighbours, or the locus passes near -1 or near unit magnitude.
    for _ in range(40):
        if omegas.size >= _NYQUIST_MAX_POINTS:
            break
        w1 = 1.0 + values
        ang_w = np.abs(np.diff(np.unwrap(np.angle(w1))))
        ang_l = np.abs(np.diff(np.unwrap(np.angle(values + 1e-300))))
        near_crit = (np.abs(w1[:-1]) < 0.3) | (np.abs(w1[1:]) < 0.3)
        near_unit = np.abs(np.abs(values[:-1]) - 1.0) < 0.3
        need = (ang_w > _MAX_ANGLE_STEP) | (ang_l > _MAX_ANGLE_STEP) & (
            (np.abs(values[:-1]) > 0.2) | (np.abs(values[1:]) > 0.2)
        )
        need |= (near_crit | near_unit) & (
            (np.diff(omegas) > 1e-9 * np.maximum(omegas[1:], kappa))
            & ((ang_w > 0.05) | (ang_l > 0.05))
        )
        if not np.any(need):
            break
        mids = 0.5 * (omegas[:-1][need] + omegas[1:][need])
        omegas = np.sort(np.concatenate([omegas, mids]))
        values = open_loop_gain(cavity, detector, loop_filter, omegas)
    return omegas, values


def _winding_count(values: np.ndarray) -> float:
    """Windings of (1 + L) around 0 along the full imaginary axis, using the
    conjugate symmetry of the positive-frequency half."""
    phase = np.unwrap(np.angle(1.0 + values))
    return (phase[-1] - phase[0]) / math.pi


def _margins(omegas: np.ndarray, values: np.ndarray):
    """Worst-case gain/phase margins from the sampled locus."""
    mag = np.abs(values)
    phase = np.unwrap(np.angle(values + 1e-300))

    gain_margin_db = math.inf
    # Crossings of the negative real axis: unwrapped phase through -(2m+1)*pi.
    lowest = math.floor(phase.min() / math.pi)
    targets = [-(2 * m + 1) * math.pi for m in range(0, max(1, -lowest // 2 + 1))]
    for target in targets:
        diff = phase - target
        sign_change = np.where(np.diff(np.signbit(diff)))[0]
        for i in sign_change:
            f = diff[i] / (diff[i] - diff[i + 1])
            m_cross = mag[i] * (mag[i + 1] / mag[i]) ** f if mag[i] > 0 else mag[i + 1]
            if m_cross > 0:
                gain_margin_db = min(gain_margin_db, -20.0 * math.log10(m_cross))
    if abs(phase[0] - round(phase[0] / math.pi) * math.pi) < 1e-12 and values[0].real < 0:
        # locus starts on the negative real axis (negative DC loop gain)
        if mag[0] > 0:
            gain_margin_db = min(gain_margin_db, -20.0 * math.log10(mag[0]))

    phase_margin_deg = None
    diff = mag - 1.0
    sign_change = np.where(np.diff(np.signbit(diff)))[0]
    margins = []
    for i in sign_change:
        f = diff[i] / (diff[i] - diff[i + 1])
        ph_cross = phase[i] + f * (phase[i + 1] - phase[i])
        margins.append(180.0 + math.degrees(ph_cross))
    if margins:
        phase_margin_deg = min(margins)
    return gain_margin_db, phase_margin_deg


# ---------------------------------------------------------------------------
# Stability
# ---------------------------------------------------------------------------

def _polynomial_unstable_count(cavity, detector, loop_filter) -> int:
    """Right-half-plane roots of (kappa + s)*den(K) + coupling*num(K)."""
    num, den = loop_filter.rational_coefficients()
    coupling = _loop_coupling(cavity, detector)
    char = np.polyadd(np.polymul([1.0, cavity.kappa], den), coupling * num)
    char = np.trim_zeros(np.asarray(char, float), "f")
    if char.size == 0:
        raise NumericalRootFailure("characteristic polynomial is identically zero")
    if char.size == 1:
        return 0
    try:
        roots = np.roots(char)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - defensive
        raise NumericalRootFailure(f"polynomial root finding failed: {exc}") from exc
    residual = np.abs(np.polyval(char, roots))
    scale = np.linalg.norm(char) * np.maximum(1.0, np.abs(roots)) ** (char.size - 1)
    worst = float(np.max(residual / scale))
    if worst > 1e-6:
        raise NumericalRootFailure(
            f"polynomial roots did not converge (method=polynomial_roots, "
            f"max scaled residual {worst:.3e})"
        )
    # Roots on the imaginary axis are marginal; count them as unstable.
    tol = 1e-12 * np.maximum(1.0, np.abs(roots))
    return int(np.sum(roots.real > -tol))


def is_stable(
    cavity: CavityParams,
    detector: DetectorParams,
    loop_filter: LoopFilter,
    method: str | None = None,
) -> StabilityReport:
    """Closed-loop stability report.

    Delay-free filters default to the characteristic-polynomial method;
    any delay forces Nyquist sampling.  ``method`` may name either
    ("polynomial_roots" / "nyquist_sampling") to override, except that the
    polynomial method cannot represent a delay.
    """
    if method is None:
        method = "polynomial_roots" if loop_filter.delay == 0.0 else "nyquist_sampling"
    if method not in ("polynomial_roots", "nyquist_sampling"):
        raise InvalidParameter(f"unknown stability method {method!r}")
    if method == "polynomial_roots" and loop_filter.delay != 0.0:
        raise InvalidParameter("polynomial_roots cannot handle a pure delay")

    omegas, values = _locus(cavity, detector, loop_filter)
    gm, pm = _margins(omegas, values)

    if method == "polynomial_roots":
        unstable = _polynomial_unstable_count(cavity, detector, loop_filter)
    else:
        if np.any(np.abs(1.0 + values) < 1e-12):
            unstable = 1  # locus passes through -1: marginal, not stable
        else:
            winding = _winding_count(values)
            nearest = round(winding)
            if abs(winding - nearest) > 0.25:
                raise NumericalRootFailure(
                    f"Nyquist winding count {winding:.3f} is not close to an "
                    "integer (method=nyquist_sampling); locus under-resolved"
                )
            unstable = max(0, int(-nearest))
    return StabilityReport(
        stable=(unstable == 0),
        gain_margin_db=gm,
        phase_margin_deg=pm,
        unstable_pole_count=unstable,
        method=method,
    )


# ---------------------------------------------------------------------------
# Required loop gain
# ---------------------------------------------------------------------------

def required_loop_gain(classical_noise_db: float, residual_fraction: float) -> float:
    """Flat in-band loop gain |L| in dB (20*log10 amplitude convention) that
    pushes the classical drive-noise contribution of the closed loop down to
    ``residual_fraction`` of the high-gain quantum floor.

    Because |L| enters the intensity spectrum squared, the amplitude-dB
    requirement equals the power-dB classical excess plus the power-dB
    residual headroom:

        gain_db = classical_noise_db + 10*log10(1/residual_fraction)

    calibrated for the impedance-matched, near-unit-efficiency regime (an
    exact evaluation for any parameter set is a one-line call into the
    spectra module; the tests cross-check this formula against it).
    """
    classical_noise_db = float(classical_noise_db)
    if not math.isfinite(classical_noise_db) or classical_noise_db < 0.0:
        raise InvalidParameter(
            f"classical_noise_db must be finite and >= 0, got {classical_noise_db}"
        )
    residual_fraction = float(residual_fraction)
    if not 0.0 < residual_fraction <= 1.0:
        raise InvalidResidual(
            f"residual_fraction must lie in (0, 1], got {residual_fraction}"
        )
    return classical_noise_db + 10.0 * math.log10(1.0 / residual_fraction)
