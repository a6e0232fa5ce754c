"""Independent time-domain validation of the closed-form spectra.

The linearized quadrature equations of motion are integrated with
unit-spectral-density white-noise drives standing in for the vacuum inputs
(a semiclassical substitution that is exact for the spectra of this linear
system), the feedback realized as a state-space filter plus an optional
interpolating delay line.  Welch-averaged periodograms of the resulting
series are compared against the analytic budgets.

Scheme: the continuous system sdot = A s + B w is advanced by the explicit
trapezoidal (Heun) one-step map

    s[k+1] = M s[k] + G w[k],   M = I + hA + (hA)^2/2,   G = (I + hA/2) h B

with the noise held constant over each step at w[k] = xi[k]/sqrt(h).  For
delay-free loops the map is evaluated exactly as per-input discrete transfer
functions through scipy's lfilter, streamed in fixed-size chunks so long
runs stay in bounded memory and a given seed always reproduces the same
series.  Loops with a pure delay fall back to an explicit stepped loop with
a linearly interpolating delay line (slower; intended for short runs).

Amplitude and phase quadratures decouple: radiation pressure maps the
amplitude channel into the phase channel with no back-action here, so the
phase channel is integrated in a second pass driven by the recorded
amplitude series.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy import signal as _signal

from . import control as _control
from .errors import (
    DivergenceDetected,
    InsufficientData,
    InvalidParameter,
    NoBandOverlap,
    UnstableLoop,
)
from .model import (
    CavityParams,
    ConstantSpectrum,
    DetectorParams,
    DriveField,
    MechanicalResponse,
    SteadyState,
)
from .spectra import FrequencyGrid, LoopFilter, NoiseBudget

__all__ = [
    "ComparisonReport",
    "PsdEstimate",
    "SimulationConfig",
    "TimeSeries",
    "compare_to_analytic",
    "dump_timeseries",
    "estimate_psd",
    "simulate",
]

logger = logging.getLogger(__name__)

# Fixed internal block sizes.  They are part of the algorithm: a given
# (scenario, seed) pair reproduces the same sample stream bit for bit.
_CHUNK = 1 << 20
_SEGMENTS_PER_CHUNK = 64
_DIVERGENCE_BOUND = 1e12


@dataclass(frozen=True)
class SimulationConfig:
    """Integration step, length, seeding and spectral-estimation windowing.

    dt must also resolve the cavity pole (dt <= 0.01/kappa) and burn_in must
    cover the transient (burn_in >= 10/kappa); both are checked at
    ``simulate`` where kappa is known.
    """

    dt: float
    duration: float
    seed: int = 0
    burn_in: float = 0.0
    welch_segment: int = 4096
    welch_overlap: float = 0.5

    def __post_init__(self):
        if not (math.isfinite(self.dt) and self.dt > 0):
            raise InvalidParameter(f"dt must be > 0, got {self.dt}")
        if not (math.isfinite(self.duration) and self.duration >= self.dt):
            raise InvalidParameter("duration must cover at least one step")
        if not (math.isfinite(self.burn_in) and self.burn_in >= 0):
            raise InvalidParameter("burn_in must be >= 0")
        if int(self.welch_segment) < 16:
            raise InvalidParameter("welch_segment must be >= 16 samples")
        object.__setattr__(self, "welch_segment", int(self.welch_segment))
        if not 0.0 <= self.welch_overlap <= 0.9:
            raise InvalidParameter("welch_overlap must lie in [0, 0.9]")
        if self.duration < 50 * self.welch_segment * self.dt:
            raise InvalidParameter(
                "duration must be >= 50 * welch_segment * dt for enough "
                "spectral averages"
            )
        object.__setattr__(self, "seed", int(self.seed))


@dataclass(frozen=True, eq=False)
class TimeSeries:
    """Named, equal-length sample arrays at a common step."""

    dt: float
    channels: dict

    def __post_init__(self):
        if not self.channels:
            raise InvalidParameter("time series needs at least one channel")
        lengths = {name: np.asarray(arr).size for name, arr in self.channels.items()}
        if len(set(lengths.values())) != 1:
            raise InvalidParameter(f"channel lengths differ: {lengths}")
        for name, arr in self.channels.items():
            arr = np.asarray(arr, dtype=float)
            if not np.all(np.isfinite(arr)):
                bad = int(np.flatnonzero(~np.isfinite(arr))[0])
                raise DivergenceDetected(
                    f"channel {name!r} is not finite at sample {bad}", step_index=bad
                )
        object.__setattr__(self, "channels", dict(self.channels))

    @property
    def n_samples(self) -> int:
        return int(next(iter(self.channels.values())).size)


@dataclass(frozen=True, eq=False)
class PsdEstimate:
    """Welch estimate restricted to the bias-safe interior band."""

    grid: FrequencyGrid
    values: np.ndarray
    n_segments: int


@dataclass(frozen=True)
class ComparisonReport:
    """Deviation of an estimated spectrum from an analytic budget."""

    max_rel_dev: float
    rms_rel_dev: float
    band: tuple
    n_points: int
    n_segments: int

    def passes(self, tolerance: float) -> bool:
        return self.rms_rel_dev <= tolerance


# ---------------------------------------------------------------------------
# System assembly
# ---------------------------------------------------------------------------

class _Channel:
    """One white-noise input: physics coefficients plus its spectral model.

    ``b_direct`` drives the state without the feedback feedthrough (used by
    the stepped delayed loop, where that path goes through the delay line),
    ``b_closed`` includes it (delay-free streaming), ``y_coeff`` is the
    channel's weight in the detected signal.
    """

    __slots__ = ("name", "spectrum", "b_direct", "b_closed", "y_coeff")

    def __init__(self, name, spectrum, b_direct, b_closed, y_coeff):
        self.name = name
        self.spectrum = spectrum  # None means unit vacuum
        self.b_direct = b_direct
        self.b_closed = b_closed
        self.y_coeff = y_coeff


class _AmplitudeSystem:
    __slots__ = (
        "n", "nf", "a_closed", "a_direct", "e_u", "channels",
        "cf", "df", "y_x",
    )


def _filter_state_space(loop_filter: LoopFilter):
    num, den = loop_filter.rational_coefficients()
    if len(loop_filter.poles) == 0:
        return np.zeros((0, 0)), np.zeros((0,)), np.zeros((0,)), float(loop_filter.gain)
    af, bf, cf, df = _signal.tf2ss(num, den)
    return (
        np.asarray(af, float),
        np.asarray(bf, float).ravel(),
        np.asarray(cf, float).ravel(),
        float(np.asarray(df, float).ravel()[0]),
    )


def _assemble_amplitude(cavity, drive, detector, loop_filter, correlated):
    kin, kout, kloss = cavity.kappa_in, cavity.kappa_out, cavity.kappa_loss
    kappa = cavity.kappa
    sys = _AmplitudeSystem()

    if loop_filter is not None:
        af, bf, cf, df = _filter_state_space(loop_filter)
        eta = detector.eta
        y_x = math.sqrt(2.0 * eta * kout)
    else:
        af = np.zeros((0, 0))
        bf = cf = np.zeros((0,))
        df = 0.0
        eta = 1.0
        y_x = 0.0
    nf = af.shape[0]
    n = 1 + nf

    a_direct = np.zeros((n, n))
    a_direct[0, 0] = -kappa
    if nf:
        a_direct[1:, 1:] = af
        a_direct[1:, 0] = bf * y_x
    e_u = np.zeros(n)
    e_u[0] = -math.sqrt(2.0 * kin)
    closing_row = np.zeros(n)
    closing_row[0] = df * y_x
    if nf:
        closing_row[1:] = cf
    a_closed = a_direct + np.outer(e_u, closing_row)

    def channel(name, spectrum, cavity_coeff, y_coeff):
        b_dir = np.zeros(n)
        b_dir[0] = cavity_coeff
        if nf and y_coeff != 0.0:
            b_dir[1:] = bf * y_coeff
        b_clo = b_dir + e_u * (df * y_coeff)
        return _Channel(name, spectrum, b_dir, b_clo, y_coeff)

    channels = [channel("input", drive.amp_noise, math.sqrt(2.0 * kin), 0.0)]
    if loop_filter is not None and correlated:
        channels.append(channel("output", None, math.sqrt(2.0 * kout), -math.sqrt(eta)))
    else:
        if kout > 0.0:
            channels.append(channel("output", None, math.sqrt(2.0 * kout), 0.0))
        if loop_filter is not None:
            channels.append(channel("output_detector", None, 0.0, -math.sqrt(eta)))
    if kloss > 0.0:
        channels.append(channel("loss", None, math.sqrt(2.0 * kloss), 0.0))
    if loop_filter is not None and eta < 1.0:
        channels.append(channel("detector", None, 0.0, -math.sqrt(1.0 - eta)))

    sys.n, sys.nf = n, nf
    sys.a_closed, sys.a_direct, sys.e_u = a_closed, a_direct, e_u
    sys.channels = channels
    sys.cf, sys.df, sys.y_x = cf, df, y_x
    return sys


def _discretize(a_mat, b_cols, dt):
    n = a_mat.shape[0]
    ha = dt * a_mat
    m = np.eye(n) + ha + 0.5 * (ha @ ha)
    g = (np.eye(n) + 0.5 * ha) @ (dt * b_cols)
    return m, g


# ---------------------------------------------------------------------------
# Noise generation
# ---------------------------------------------------------------------------

def _shaped_noise(rng, spectrum, n, dt):
    """Gaussian noise with spectral density spectrum(omega), via one-shot
    frequency-domain shaping of a white sequence."""
    white = rng.standard_normal(n)
    z = np.fft.rfft(white)
    omegas = 2.0 * math.pi * np.fft.rfftfreq(n, d=dt)
    z *= np.sqrt(spectrum.at(omegas))
    return np.fft.irfft(z, n) / math.sqrt(dt)


def _channel_scale(spectrum) -> float:
    """Per-sample multiplier for flat spectra (unit vacuum when None)."""
    if spectrum is None:
        return 1.0
    return math.sqrt(spectrum.value)


def _is_flat(spectrum) -> bool:
    return spectrum is None or isinstance(spectrum, ConstantSpectrum)


# ---------------------------------------------------------------------------
# Integration backends
# ---------------------------------------------------------------------------

def _per_channel_tf(m, g):
    n = m.shape[0]
    c = np.zeros((1, n))
    c[0, 0] = 1.0
    tfs = []
    for j in range(g.shape[1]):
        num, den = _signal.ss2tf(m, g[:, j : j + 1], c, np.zeros((1, 1)))
        tfs.append((np.asarray(num[0], float), np.asarray(den, float)))
    return tfs


def _check_discrete_stability(m, dt):
    eigs = np.linalg.eigvals(m) if m.size else np.array([])
    if eigs.size and np.max(np.abs(eigs)) >= 1.0:
        logger.warning(
            "one-step map has spectral radius %.3f >= 1: dt=%g does not "
            "resolve the closed-loop bandwidth; expect divergence",
            float(np.max(np.abs(eigs))), dt,
        )


def _stream_noise_response(rng, m, g, channels, n_total, dt):
    """Sum of per-channel lfilter responses, chunked; returns the first
    state component over all samples."""
    tfs = _per_channel_tf(m, g)
    inv_sqrt_dt = 1.0 / math.sqrt(dt)

    shaped = {}
    for ch in channels:
        if not _is_flat(ch.spectrum):
            shaped[ch.name] = _shaped_noise(rng, ch.spectrum, n_total, dt)

    out = np.empty(n_total)
    zis = [np.zeros(len(tf[1]) - 1) for tf in tfs]
    pos = 0
    while pos < n_total:
        mlen = min(_CHUNK, n_total - pos)
        acc = np.zeros(mlen)
        for j, ch in enumerate(channels):
            if ch.name in shaped:
                w = shaped[ch.name][pos : pos + mlen]
            else:
                w = rng.standard_normal(mlen)
                w *= _channel_scale(ch.spectrum) * inv_sqrt_dt
            num, den = tfs[j]
            y, zis[j] = _signal.lfilter(num, den, w, zi=zis[j])
            acc += y
        peak = float(np.max(np.abs(acc))) if mlen else 0.0
        if not math.isfinite(peak) or peak > _DIVERGENCE_BOUND:
            bad = pos + int(np.argmax(np.abs(acc)))
            raise DivergenceDetected(
                f"amplitude channel exceeded {_DIVERGENCE_BOUND:g} at step {bad}",
                step_index=bad,
            )
        out[pos : pos + mlen] = acc
        pos += mlen
    return out


def _homogeneous_response(m, s0, n_total):
    """First component of s[k] = M^k s0, vectorized over k."""
    if m.shape[0] == 1:
        lam = float(m[0, 0])
        return float(s0[0]) * lam ** np.arange(n_total)
    lam, vecs = np.linalg.eig(m)
    coeff = vecs[0, :] * np.linalg.solve(vecs, s0.astype(complex))
    out = np.zeros(n_total)
    k = np.arange(n_total)
    for lj, cj in zip(lam, coeff):
        if cj != 0:
            out += np.real(cj * lj**k)
    return out


def _stepped_delayed(rng, sys, loop_filter, cfg, n_total, x0):
    """Explicit Heun loop with an interpolating delay line on the filter
    output.  Slow (per-step Python); intended for short delayed runs."""
    dt = cfg.dt
    tau = loop_filter.delay
    lag = tau / dt
    if lag < 1.0 - 1e-9:
        raise InvalidParameter(
            f"delay {tau:g} s is shorter than one step dt={dt:g}; use delay=0 "
            "or increase the delay/reduce dt"
        )
    n = sys.n
    a0, e_u = sys.a_direct, sys.e_u
    cf, df, y_x = sys.cf, sys.df, sys.y_x
    channels = sys.channels
    inv_sqrt_dt = 1.0 / math.sqrt(dt)

    shaped = {}
    noise = []
    for ch in channels:
        if _is_flat(ch.spectrum):
            noise.append(rng.standard_normal(n_total) * (_channel_scale(ch.spectrum) * inv_sqrt_dt))
        else:
            noise.append(_shaped_noise(rng, ch.spectrum, n_total, dt))
        shaped[ch.name] = noise[-1]
    b_dir = np.stack([ch.b_direct for ch in channels], axis=1)
    y_w = np.array([ch.y_coeff for ch in channels])

    v_hist = np.zeros(n_total + 1)
    out = np.empty(n_total)
    s = np.zeros(n)
    s[0] = x0

    def u_at(idx_float):
        if idx_float < 0.0:
            return 0.0
        lo = int(idx_float)
        frac = idx_float - lo
        if frac == 0.0:
            return v_hist[lo]
        return (1.0 - frac) * v_hist[lo] + frac * v_hist[lo + 1]

    for k in range(n_total):
        out[k] = s[0]
        w_k = np.array([noise[j][k] for j in range(len(channels))])
        y_k = y_x * s[0] + float(y_w @ w_k)
        v_hist[k] = (cf @ s[1:] if sys.nf else 0.0) + df * y_k
        u_now = u_at(k - lag)
        u_next = u_at(k + 1.0 - lag)
        base = b_dir @ w_k
        f1 = a0 @ s + base + e_u * u_now
        s_pred = s + dt * f1
        f2 = a0 @ s_pred + base + e_u * u_next
        s = s + 0.5 * dt * (f1 + f2)
        if not math.isfinite(s[0]) or abs(s[0]) > _DIVERGENCE_BOUND:
            raise DivergenceDetected(
                f"amplitude channel exceeded {_DIVERGENCE_BOUND:g} at step {k}",
                step_index=k,
            )
    return out


# ---------------------------------------------------------------------------
# Simulation
# ---------------------------------------------------------------------------

def simulate(
    cavity: CavityParams,
    drive: DriveField,
    steady: SteadyState,
    mech: MechanicalResponse | None = None,
    detector: DetectorParams | None = None,
    loop_filter: LoopFilter | None = None,
    cfg: SimulationConfig | None = None,
    *,
    include_noise: bool = True,
    initial_amplitude: float = 0.0,
    initial_phase: float = 0.0,
    correlated_detector_vacuum: bool = True,
    include_phase: bool | None = None,
) -> TimeSeries:
    """Integrate the linearized quadrature dynamics and return the sampled
    channels (post burn-in).

    Channels: ``amplitude`` always; ``phase`` and ``reflected_phase`` when a
    mechanical response is supplied (or ``include_phase=True``).  The same
    rear-mirror vacuum realization feeds both the cavity and the feedback
    detector; ``correlated_detector_vacuum=False`` deliberately breaks that
    correlation (negative control for the closed-loop cross term).

    ``include_noise=False`` integrates the homogeneous response from the
    given initial quadratures with every drive off; burn-in does not apply
    there (it exists to reach stationarity of the stochastic run).
    """
    if cfg is None:
        raise InvalidParameter("simulate requires a SimulationConfig")
    kappa = cavity.kappa
    if cfg.dt > 0.01 / kappa * (1 + 1e-9):
        raise InvalidParameter(
            f"dt={cfg.dt:g} does not resolve the cavity pole; need dt <= 0.01/kappa = "
            f"{0.01 / kappa:g}"
        )
    if include_noise and cfg.burn_in < 10.0 / kappa:
        raise InvalidParameter(
            f"burn_in={cfg.burn_in:g} too short; need >= 10/kappa = {10.0 / kappa:g}"
        )
    if loop_filter is not None:
        if detector is None:
            raise InvalidParameter("a loop filter requires detector parameters")
        report = _control.is_stable(cavity, detector, loop_filter)
        if not report.stable:
            raise UnstableLoop(
                f"loop is unstable ({report.unstable_pole_count} unstable poles, "
                f"method={report.method}); refusing to integrate"
            )

    n_total = int(round(cfg.duration / cfg.dt))
    n_burn = int(round(cfg.burn_in / cfg.dt)) if include_noise else 0
    if n_total <= n_burn:
        raise InvalidParameter("duration does not extend past the burn-in")

    rng = np.random.default_rng(cfg.seed)
    sys = _assemble_amplitude(
        cavity, drive, detector, loop_filter, correlated_detector_vacuum
    )

    delayed = loop_filter is not None and loop_filter.delay > 0.0
    if delayed:
        if include_noise:
            x_a = _stepped_delayed(rng, sys, loop_filter, cfg, n_total, initial_amplitude)
        else:
            x_a = _stepped_noiseless_delayed(sys, loop_filter, cfg, n_total, initial_amplitude)
    else:
        m, g = _discretize(sys.a_closed, np.stack([c.b_closed for c in sys.channels], axis=1), cfg.dt)
        _check_discrete_stability(m, cfg.dt)
        if include_noise:
            x_a = _stream_noise_response(rng, m, g, sys.channels, n_total, cfg.dt)
        else:
            x_a = np.zeros(n_total)
        if initial_amplitude != 0.0:
            s0 = np.zeros(sys.n)
            s0[0] = initial_amplitude
            x_a = x_a + _homogeneous_response(m, s0, n_total)

    channels = {"amplitude": x_a[n_burn:].copy()}

    if include_phase is None:
        include_phase = mech is not None
    if include_phase:
        phase, refl = _phase_pass(
            rng, cavity, drive, steady, mech, cfg, n_total, x_a,
            include_noise, initial_phase,
        )
        channels["phase"] = phase[n_burn:].copy()
        channels["reflected_phase"] = refl[n_burn:].copy()

    return TimeSeries(dt=cfg.dt, channels=channels)


def _stepped_noiseless_delayed(sys, loop_filter, cfg, n_total, x0):
    """Homogeneous response of the delayed loop (all drives off)."""
    rng = np.random.default_rng(0)
    silent = [_Channel(c.name, ConstantSpectrum(0.0), c.b_direct, c.b_closed, c.y_coeff)
              for c in sys.channels]
    saved_channels = sys.channels
    sys.channels = silent
    try:
        return _stepped_delayed(rng, sys, loop_filter, cfg, n_total, x0)
    finally:
        sys.channels = saved_channels


def _phase_pass(rng, cavity, drive, steady, mech, cfg, n_total, x_a,
                include_noise, initial_phase):
    """Second pass: the phase quadrature driven by detuning noise and the
    phase-quadrature vacua, plus the reflected-field readout.

    All phase-pass inputs are materialized, so phase-channel runs should be
    sized in the tens of millions of samples, not billions.
    """
    dt = cfg.dt
    kin, kout, kloss = cavity.kappa_in, cavity.kappa_out, cavity.kappa_loss
    kappa = cavity.kappa
    alpha = steady.alpha
    inv_sqrt_dt = 1.0 / math.sqrt(dt)

    m = 1.0 - kappa * dt + 0.5 * (kappa * dt) ** 2
    gamma = (1.0 - 0.5 * kappa * dt) * dt
    num = np.array([0.0, gamma])
    den = np.array([1.0, -m])

    forcing = np.zeros(n_total)
    w_in_phase = np.zeros(n_total)
    if include_noise:
        if _is_flat(drive.phase_noise):
            w_in_phase = rng.standard_normal(n_total) * (
                math.sqrt(drive.phase_noise.value) * inv_sqrt_dt
            )
        else:
            w_in_phase = _shaped_noise(rng, drive.phase_noise, n_total, dt)
        forcing += math.sqrt(2.0 * kin) * w_in_phase
        if kout > 0.0:
            forcing += math.sqrt(2.0 * kout) * rng.standard_normal(n_total) * inv_sqrt_dt
        if kloss > 0.0:
            forcing += math.sqrt(2.0 * kloss) * rng.standard_normal(n_total) * inv_sqrt_dt
        if mech is not None:
            detuning = np.zeros(n_total)
            thermal = mech.thermal
            if isinstance(thermal, ConstantSpectrum):
                if thermal.value > 0.0:
                    detuning += rng.standard_normal(n_total) * (
                        math.sqrt(thermal.value) * inv_sqrt_dt
                    )
            else:
                detuning += _shaped_noise(rng, thermal, n_total, dt)
            transfer = mech.transfer
            if isinstance(transfer, ConstantSpectrum):
                if transfer.value > 0.0:
                    detuning += math.sqrt(transfer.value) * x_a
            else:
                detuning += _magnitude_filtered(x_a, transfer, dt)
            forcing += 2.0 * alpha * detuning

    x_phase = _signal.lfilter(num, den, forcing)
    if initial_phase != 0.0:
        x_phase = x_phase + initial_phase * m ** np.arange(n_total)
    peak = float(np.max(np.abs(x_phase))) if n_total else 0.0
    if not math.isfinite(peak) or peak > _DIVERGENCE_BOUND:
        bad = int(np.argmax(np.abs(x_phase)))
        raise DivergenceDetected(
            f"phase channel exceeded {_DIVERGENCE_BOUND:g} at step {bad}", step_index=bad
        )
    reflected = math.sqrt(2.0 * kin) * x_phase - w_in_phase
    return x_phase, reflected


def _magnitude_filtered(x, spectrum, dt):
    """Filter x so its spectral density is multiplied by spectrum(omega).

    Zero-phase magnitude filtering: only |H|^2 enters any spectrum here, the
    transfer's phase is not part of the model.
    """
    z = np.fft.rfft(x)
    omegas = 2.0 * math.pi * np.fft.rfftfreq(x.size, d=dt)
    z *= np.sqrt(spectrum.at(omegas))
    return np.fft.irfft(z, x.size)


# ---------------------------------------------------------------------------
# Spectral estimation and comparison
# ---------------------------------------------------------------------------

def estimate_psd(ts: TimeSeries, channel: str, cfg: SimulationConfig) -> PsdEstimate:
    """Welch-averaged spectral density in shot-noise units on an angular
    frequency grid.

    Normalized so a unit-spectral-density white-noise channel estimates 1;
    the reported band is clipped to [4 * (2*pi / (segment*dt)), 0.4 * pi/dt]
    to stay clear of window and discretization edge bias.  Processes the
    series in fixed blocks of segments, which reproduces a single whole-series
    Welch average exactly while keeping memory bounded.
    """
    if channel not in ts.channels:
        raise InvalidParameter(f"no channel {channel!r} in time series")
    x = np.asarray(ts.channels[channel], dtype=float)
    nper = cfg.welch_segment
    nov = int(round(cfg.welch_overlap * nper))
    step = nper - nov
    if x.size < nper:
        raise InsufficientData(
            f"need at least one segment of {nper} samples, have {x.size}"
        )
    fs = 1.0 / ts.dt

    acc = None
    n_segments = 0
    start = 0
    while x.size - start >= nper:
        count = min((x.size - start - nov) // step, _SEGMENTS_PER_CHUNK)
        stop = start + nov + count * step
        freqs, pxx = _signal.welch(
            x[start:stop],
            fs=fs,
            window="hann",
            nperseg=nper,
            noverlap=nov,
            detrend="constant",
            return_onesided=True,
            scaling="density",
        )
        acc = pxx * count if acc is None else acc + pxx * count
        n_segments += count
        start += count * step

    psd = acc / n_segments / 2.0  # one-sided density -> symmetric two-sided
    omegas = 2.0 * math.pi * freqs
    lo = 4.0 * 2.0 * math.pi / (nper * ts.dt)
    hi = 0.8 * 0.5 * math.pi / ts.dt
    mask = (omegas >= lo) & (omegas <= hi)
    if not np.any(mask):
        raise InsufficientData("no spectral bins inside the usable band")
    return PsdEstimate(FrequencyGrid(omegas[mask]), psd[mask], n_segments)


def compare_to_analytic(
    ts: TimeSeries,
    channel: str,
    budget: NoiseBudget,
    cfg: SimulationConfig,
    band: tuple | None = None,
    psd: PsdEstimate | None = None,
) -> ComparisonReport:
    """Interpolate the analytic budget onto the estimator grid and report the
    maximum and RMS relative deviations over the overlapping band."""
    if psd is None:
        psd = estimate_psd(ts, channel, cfg)
    om_e = psd.grid.omegas
    om_a = budget.grid.omegas
    lo = max(om_e[0], om_a[0])
    hi = min(om_e[-1], om_a[-1])
    if band is not None:
        lo = max(lo, band[0])
        hi = min(hi, band[1])
    mask = (om_e >= lo) & (om_e <= hi)
    if hi <= lo or not np.any(mask):
        raise NoBandOverlap(
            f"no overlap between estimator band [{om_e[0]:g}, {om_e[-1]:g}] and "
            f"analytic band [{om_a[0]:g}, {om_a[-1]:g}]"
            + (f" within requested band {band}" if band is not None else "")
        )
    analytic = np.interp(om_e[mask], om_a, budget.total)
    if np.any(analytic <= 0):
        raise NoBandOverlap("analytic spectrum vanishes inside the comparison band")
    rel = (psd.values[mask] - analytic) / analytic
    return ComparisonReport(
        max_rel_dev=float(np.max(np.abs(rel))),
        rms_rel_dev=float(np.sqrt(np.mean(rel**2))),
        band=(float(lo), float(hi)),
        n_points=int(np.sum(mask)),
        n_segments=psd.n_segments,
    )


def dump_timeseries(ts: TimeSeries, path) -> None:
    """Plain-text dump: one header line declaring the columns, one row per
    sample, comma-delimited."""
    names = sorted(ts.channels)
    cols = [np.arange(ts.n_samples) * ts.dt] + [ts.channels[n] for n in names]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(["time_s"] + names) + "\n")
        for row in zip(*cols):
            fh.write(",".join(f"{v:.12g}" for v in row) + "\n")
