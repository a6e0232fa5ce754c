"""Command-line front end: INI scenario configs in, CSV curves and summary
lines out.

Commands: ``spectrum`` (noise budgets and headline numbers), ``sweep``
(DC closed-loop noise and suppression against one parameter), ``stability``
(loop report), ``oracle`` (time-domain cross-check against the analytic
budget), ``compare`` (feedback versus squeezed-input phase readout).

Exit codes: 0 success, 1 validation/configuration error, 2 numerical or
stability failure, 3 oracle-comparison failure.

Loop-gain decibels: the required-gain rule and all loop-gain printouts use
the amplitude convention 20*log10|L|; because |L| enters the intensity
spectrum squared, suppressing a classical excess of X power-dB down to a
fraction r of the quantum floor needs roughly X + 10*log10(1/r) in that
convention.  The power convention 10*log10|L| is printed alongside, labeled.
"""

from __future__ import annotations

import argparse
import configparser
import math
import os
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .control import is_stable, open_loop_gain
from .errors import (
    CavNoiseError,
    ComparisonFailure,
    ConfigError,
    MissingFilter,
    NumericalError,
    UnknownParameter,
    ValidationError,
)
from .model import (
    CavityParams,
    ConstantSpectrum,
    DetectorParams,
    DriveField,
    MechanicalResponse,
    TabulatedSpectrum,
    steady_state,
    validate_cavity,
)
from .oracle import SimulationConfig, compare_to_analytic, estimate_psd, simulate
from .spectra import (
    SOURCE_LABELS,
    FrequencyGrid,
    LoopFilter,
    NoiseBudget,
    coherent_limit,
    compare_squeezing_vs_feedback,
    highgain_limit,
    intracavity_amplitude_spectrum,
    intracavity_amplitude_spectrum_fb,
    reflected_phase_spectrum,
    suppression_ratio,
)

OUTDIR_ENV = "CAVNOISE_OUTDIR"

# Comparisons against the continuous-model budget are capped where the
# one-step integrator still tracks it: omega*dt <= 0.3.
_ORACLE_BAND_CAP = 0.3


# ---------------------------------------------------------------------------
# Scenario configuration
# ---------------------------------------------------------------------------

_SECTION_KEYS = {
    "cavity": ("kappa_in", "kappa_out", "kappa_loss"),
    "drive": ("amplitude", "amp_noise", "phase_noise"),
    "detector": ("eta",),
    "filter": ("gain", "zeros", "poles", "delay"),
    "mechanical": ("model", "coupling", "omega_m", "q_factor", "transfer", "thermal"),
    "grid": ("omega_min", "omega_max", "points", "spacing"),
    "simulation": ("dt", "duration", "seed", "burn_in", "welch_segment", "welch_overlap"),
}
_REQUIRED_SECTIONS = ("cavity", "drive", "detector")


@dataclass(frozen=True)
class ScenarioConfig:
    cavity: CavityParams
    drive: DriveField
    detector: DetectorParams
    loop_filter: LoopFilter | None
    mechanical: MechanicalResponse | None
    grid: FrequencyGrid
    simulation: SimulationConfig | None
    grid_spec: tuple  # (omega_min, omega_max, points, spacing)


def _parse_float(section, key, raw):
    try:
        return float(raw)
    except ValueError as exc:
        raise ConfigError(f"[{section}] {key} = {raw!r} is not a number") from exc


def _parse_noise_model(section, key, raw):
    """Constant spectra as bare numbers, tabulated as 'omega:value, ...'."""
    raw = raw.strip()
    if ":" not in raw:
        return ConstantSpectrum(_parse_float(section, key, raw))
    pairs = []
    for token in raw.split(","):
        token = token.strip()
        if not token:
            continue
        try:
            om, val = token.split(":")
            pairs.append((float(om), float(val)))
        except ValueError as exc:
            raise ConfigError(
                f"[{section}] {key}: bad tabulated entry {token!r}, "
                "expected 'omega:value'"
            ) from exc
    if len(pairs) < 2:
        raise ConfigError(f"[{section}] {key}: tabulated spectrum needs >= 2 points")
    om, val = zip(*pairs)
    return TabulatedSpectrum(np.asarray(om), np.asarray(val))


def _parse_complex_list(section, key, raw):
    out = []
    for token in raw.split(","):
        token = token.strip()
        if not token:
            continue
        try:
            out.append(complex(token))
        except ValueError as exc:
            raise ConfigError(
                f"[{section}] {key}: {token!r} is not a complex number"
            ) from exc
    return tuple(out)


def parse_config(path) -> ScenarioConfig:
    """Parse and validate an INI scenario file into domain objects.

    Unknown sections or keys are errors (typo protection); section contents
    validate through the same constructors the library uses.
    """
    parser = configparser.ConfigParser(interpolation=None)
    try:
        with open(path, "r", encoding="utf-8") as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except configparser.Error as exc:
        raise ConfigError(f"config parse error in {path}: {exc}") from exc

    for section in parser.sections():
        if section not in _SECTION_KEYS:
            raise ConfigError(f"unknown config section [{section}]")
        for key in parser.options(section):
            if key not in _SECTION_KEYS[section]:
                raise ConfigError(f"unknown key {key!r} in section [{section}]")
    for section in _REQUIRED_SECTIONS:
        if not parser.has_section(section):
            raise ConfigError(f"missing required config section [{section}]")

    def get(section, key, default=None):
        if parser.has_option(section, key):
            return parser.get(section, key)
        return default

    cavity = validate_cavity(
        _parse_float("cavity", "kappa_in", get("cavity", "kappa_in", "nan")),
        _parse_float("cavity", "kappa_out", get("cavity", "kappa_out", "0")),
        _parse_float("cavity", "kappa_loss", get("cavity", "kappa_loss", "0")),
    )
    drive = DriveField(
        _parse_float("drive", "amplitude", get("drive", "amplitude", "nan")),
        _parse_noise_model("drive", "amp_noise", get("drive", "amp_noise", "1")),
        _parse_noise_model("drive", "phase_noise", get("drive", "phase_noise", "1")),
    )
    detector = DetectorParams(_parse_float("detector", "eta", get("detector", "eta", "nan")))

    loop_filter = None
    if parser.has_section("filter"):
        loop_filter = LoopFilter(
            gain=_parse_float("filter", "gain", get("filter", "gain", "nan")),
            zeros=_parse_complex_list("filter", "zeros", get("filter", "zeros", "")),
            poles=_parse_complex_list("filter", "poles", get("filter", "poles", "")),
            delay=_parse_float("filter", "delay", get("filter", "delay", "0")),
        )

    mechanical = None
    if parser.has_section("mechanical"):
        model = (get("mechanical", "model", "constant") or "constant").strip()
        thermal = _parse_noise_model("mechanical", "thermal", get("mechanical", "thermal", "0"))
        if model == "constant":
            mechanical = MechanicalResponse.constant(
                _parse_float("mechanical", "coupling", get("mechanical", "coupling", "0")),
                thermal=thermal,
            )
        elif model == "harmonic_oscillator":
            mechanical = MechanicalResponse.harmonic_oscillator(
                _parse_float("mechanical", "coupling", get("mechanical", "coupling", "nan")),
                _parse_float("mechanical", "omega_m", get("mechanical", "omega_m", "nan")),
                _parse_float("mechanical", "q_factor", get("mechanical", "q_factor", "nan")),
                thermal=thermal,
            )
        elif model == "tabulated":
            transfer = _parse_noise_model(
                "mechanical", "transfer", get("mechanical", "transfer", "")
            )
            if not isinstance(transfer, TabulatedSpectrum):
                raise ConfigError(
                    "[mechanical] transfer must be a tabulated 'omega:value' list"
                )
            mechanical = MechanicalResponse(transfer, thermal)
        else:
            raise ConfigError(f"[mechanical] unknown model {model!r}")

    kappa = cavity.kappa
    omega_min = _parse_float("grid", "omega_min", get("grid", "omega_min", repr(1e-3 * kappa)))
    omega_max = _parse_float("grid", "omega_max", get("grid", "omega_max", repr(10.0 * kappa)))
    points = int(_parse_float("grid", "points", get("grid", "points", "400")))
    spacing = (get("grid", "spacing", "log") or "log").strip()
    if spacing == "log":
        grid = FrequencyGrid.logarithmic(omega_min, omega_max, points)
    elif spacing == "linear":
        grid = FrequencyGrid.linear(omega_min, omega_max, points)
    else:
        raise ConfigError(f"[grid] spacing must be 'log' or 'linear', got {spacing!r}")

    simulation = None
    if parser.has_section("simulation"):
        simulation = SimulationConfig(
            dt=_parse_float("simulation", "dt", get("simulation", "dt", "nan")),
            duration=_parse_float("simulation", "duration", get("simulation", "duration", "nan")),
            seed=int(_parse_float("simulation", "seed", get("simulation", "seed", "0"))),
            burn_in=_parse_float("simulation", "burn_in", get("simulation", "burn_in", "0")),
            welch_segment=int(
                _parse_float("simulation", "welch_segment", get("simulation", "welch_segment", "4096"))
            ),
            welch_overlap=_parse_float(
                "simulation", "welch_overlap", get("simulation", "welch_overlap", "0.5")
            ),
        )

    return ScenarioConfig(
        cavity=cavity,
        drive=drive,
        detector=detector,
        loop_filter=loop_filter,
        mechanical=mechanical,
        grid=grid,
        simulation=simulation,
        grid_spec=(omega_min, omega_max, points, spacing),
    )


def _spectrum_to_ini(sp) -> str:
    if isinstance(sp, ConstantSpectrum):
        return repr(sp.value)
    if isinstance(sp, TabulatedSpectrum):
        return ", ".join(f"{float(o)!r}:{float(v)!r}" for o, v in zip(sp.omegas, sp.values))
    raise ConfigError(f"cannot serialize spectrum {type(sp).__name__} to config text")


def dump_config(cfg: ScenarioConfig) -> str:
    """Canonical INI text for a scenario; re-parsing reproduces it exactly."""
    lines = []
    lines.append("[cavity]")
    lines.append(f"kappa_in = {cfg.cavity.kappa_in!r}")
    lines.append(f"kappa_out = {cfg.cavity.kappa_out!r}")
    lines.append(f"kappa_loss = {cfg.cavity.kappa_loss!r}")
    lines.append("")
    lines.append("[drive]")
    lines.append(f"amplitude = {cfg.drive.amplitude!r}")
    lines.append(f"amp_noise = {_spectrum_to_ini(cfg.drive.amp_noise)}")
    lines.append(f"phase_noise = {_spectrum_to_ini(cfg.drive.phase_noise)}")
    lines.append("")
    lines.append("[detector]")
    lines.append(f"eta = {cfg.detector.eta!r}")
    if cfg.loop_filter is not None:
        lf = cfg.loop_filter
        lines.append("")
        lines.append("[filter]")
        lines.append(f"gain = {lf.gain!r}")
        lines.append("zeros = " + ", ".join(str(z) for z in lf.zeros))
        lines.append("poles = " + ", ".join(str(p) for p in lf.poles))
        lines.append(f"delay = {lf.delay!r}")
    if cfg.mechanical is not None:
        mech = cfg.mechanical
        lines.append("")
        lines.append("[mechanical]")
        tr = mech.transfer
        if isinstance(tr, ConstantSpectrum):
            lines.append("model = constant")
            lines.append(f"coupling = {tr.value!r}")
        elif isinstance(tr, TabulatedSpectrum):
            lines.append("model = tabulated")
            lines.append(f"transfer = {_spectrum_to_ini(tr)}")
        else:  # OscillatorTransfer
            lines.append("model = harmonic_oscillator")
            lines.append(f"coupling = {tr.coupling!r}")
            lines.append(f"omega_m = {tr.omega_m!r}")
            lines.append(f"q_factor = {tr.q_factor!r}")
        lines.append(f"thermal = {_spectrum_to_ini(mech.thermal)}")
    lines.append("")
    lines.append("[grid]")
    omega_min, omega_max, points, spacing = cfg.grid_spec
    lines.append(f"omega_min = {omega_min!r}")
    lines.append(f"omega_max = {omega_max!r}")
    lines.append(f"points = {points}")
    lines.append(f"spacing = {spacing}")
    if cfg.simulation is not None:
        sim = cfg.simulation
        lines.append("")
        lines.append("[simulation]")
        lines.append(f"dt = {sim.dt!r}")
        lines.append(f"duration = {sim.duration!r}")
        lines.append(f"seed = {sim.seed}")
        lines.append(f"burn_in = {sim.burn_in!r}")
        lines.append(f"welch_segment = {sim.welch_segment}")
        lines.append(f"welch_overlap = {sim.welch_overlap!r}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# CSV output
# ---------------------------------------------------------------------------

def format_number(x: float) -> str:
    """Decimal point, scientific notation only outside [1e-3, 1e4)."""
    if x == 0.0:
        return "0"
    ax = abs(x)
    if ax < 1e-3 or ax >= 1e4:
        return f"{x:.10e}"
    return f"{x:.10g}"


def _resolve_output(explicit, default_name: str) -> Path:
    if explicit:
        return Path(explicit)
    outdir = os.environ.get(OUTDIR_ENV, ".")
    return Path(outdir) / default_name


def write_csv(path: Path, header: list, columns: list) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(header) + "\n")
        for row in zip(*columns):
            fh.write(",".join(format_number(v) for v in row) + "\n")


def _budget_csv(path: Path, budget: NoiseBudget, omega_scale: float, omega_name: str):
    labels = [l for l in SOURCE_LABELS if l in budget.contributions]
    header = [omega_name, "total"] + labels
    columns = [budget.grid.omegas * omega_scale, budget.total]
    columns += [budget.contribution(l) for l in labels]
    write_csv(path, header, columns)


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def _dc_budget(cfg: ScenarioConfig, with_feedback: bool) -> float:
    dc_grid = FrequencyGrid(np.array([0.0]))
    if with_feedback and cfg.loop_filter is not None:
        b = intracavity_amplitude_spectrum_fb(
            cfg.cavity, cfg.drive, cfg.detector, cfg.loop_filter, dc_grid
        )
    else:
        b = intracavity_amplitude_spectrum(cfg.cavity, cfg.drive, dc_grid)
    return float(b.total[0])


def _print_spectrum_summary(cfg: ScenarioConfig, dc_value: float) -> None:
    print(f"dc_total: {format_number(dc_value)}")
    print(f"coherent_limit: {format_number(coherent_limit(cfg.cavity))}")
    if cfg.cavity.kappa_out > 0:
        print(f"highgain_limit: {format_number(highgain_limit(cfg.cavity, cfg.detector))}")
        ratio = suppression_ratio(cfg.cavity, cfg.detector)
        print(f"suppression: {ratio.linear:.4f} ({ratio.db:.2f} dB)")
    else:
        print("highgain_limit: undefined (kappa_out = 0)")
        print("suppression: undefined (kappa_out = 0)")


def cmd_spectrum(args) -> int:
    cfg = parse_config(args.config)
    if args.dump_config:
        sys.stdout.write(dump_config(cfg))
        return 0
    with_feedback = args.feedback == "on"
    if with_feedback:
        if cfg.loop_filter is None:
            raise MissingFilter("--feedback on requires a [filter] section")
        report = is_stable(cfg.cavity, cfg.detector, cfg.loop_filter)
        if not report.stable:
            raise NumericalError(
                f"loop unstable ({report.unstable_pole_count} unstable poles); "
                "no closed-loop spectrum"
            )
        budget = intracavity_amplitude_spectrum_fb(
            cfg.cavity, cfg.drive, cfg.detector, cfg.loop_filter, cfg.grid
        )
    else:
        budget = intracavity_amplitude_spectrum(cfg.cavity, cfg.drive, cfg.grid)

    scale = 1.0 / cfg.cavity.kappa if args.kappa_normalized else 1.0
    name = "omega_per_kappa" if args.kappa_normalized else "omega_rad_s"
    out = _resolve_output(args.output, "spectrum.csv")
    _budget_csv(out, budget, scale, name)
    _print_spectrum_summary(cfg, _dc_budget(cfg, with_feedback))
    print(f"wrote: {out}")
    return 0


_SWEEPABLE = ("eta", "kappa_out", "kappa_loss", "filter.gain")


def cmd_sweep(args) -> int:
    cfg = parse_config(args.config)
    if args.dump_config:
        sys.stdout.write(dump_config(cfg))
        return 0
    if args.param not in _SWEEPABLE:
        raise UnknownParameter(
            f"cannot sweep {args.param!r}; supported: {', '.join(_SWEEPABLE)}"
        )
    if args.param == "filter.gain" and cfg.loop_filter is None:
        raise MissingFilter("sweeping filter.gain requires a [filter] section")
    if args.points < 2:
        raise ConfigError("--points must be >= 2")
    if args.spacing == "log":
        if args.start <= 0 or args.stop <= 0:
            raise ConfigError("log spacing requires positive --from/--to")
        values = np.geomspace(args.start, args.stop, args.points)
    else:
        values = np.linspace(args.start, args.stop, args.points)

    dc = np.empty(args.points)
    supp_db = np.empty(args.points)
    for i, v in enumerate(values):
        cavity, detector, lf = cfg.cavity, cfg.detector, cfg.loop_filter
        if args.param == "eta":
            detector = DetectorParams(v)
        elif args.param == "kappa_out":
            cavity = validate_cavity(cavity.kappa_in, v, cavity.kappa_loss)
        elif args.param == "kappa_loss":
            cavity = validate_cavity(cavity.kappa_in, cavity.kappa_out, v)
        else:
            lf = LoopFilter(gain=v, zeros=lf.zeros, poles=lf.poles, delay=lf.delay)
        dc_grid = FrequencyGrid(np.array([0.0]))
        if lf is not None:
            budget = intracavity_amplitude_spectrum_fb(cavity, cfg.drive, detector, lf, dc_grid)
        else:
            budget = intracavity_amplitude_spectrum(cavity, cfg.drive, dc_grid)
        dc[i] = budget.total[0]
        supp_db[i] = suppression_ratio(cavity, detector).db

    out = _resolve_output(args.output, "sweep.csv")
    write_csv(out, [args.param, "dc_va_fb", "suppression_db"], [values, dc, supp_db])
    print(f"swept {args.param} over [{args.start:g}, {args.stop:g}] in {args.points} points")
    print(f"wrote: {out}")
    return 0


def cmd_stability(args) -> int:
    cfg = parse_config(args.config)
    if args.dump_config:
        sys.stdout.write(dump_config(cfg))
        return 0
    if cfg.loop_filter is None:
        raise MissingFilter("stability analysis requires a [filter] section")
    report = is_stable(cfg.cavity, cfg.detector, cfg.loop_filter)
    print(f"stable: {'true' if report.stable else 'false'}")
    gm = "inf" if math.isinf(report.gain_margin_db) else f"{report.gain_margin_db:.4f}"
    print(f"gain_margin_db: {gm}")
    pm = "undefined" if report.phase_margin_deg is None else f"{report.phase_margin_deg:.4f}"
    print(f"phase_margin_deg: {pm}")
    print(f"unstable_pole_count: {report.unstable_pole_count}")
    print(f"method: {report.method}")
    l0 = abs(open_loop_gain(cfg.cavity, cfg.detector, cfg.loop_filter, 0.0))
    if l0 > 0:
        print(f"dc_loop_gain_db_amplitude: {20.0 * math.log10(l0):.4f}")
        print(f"dc_loop_gain_db_power: {10.0 * math.log10(l0):.4f}")
    return 0 if report.stable else 2


def cmd_oracle(args) -> int:
    cfg = parse_config(args.config)
    if args.dump_config:
        sys.stdout.write(dump_config(cfg))
        return 0
    if cfg.simulation is None:
        raise ConfigError("the oracle command requires a [simulation] section")
    sim_detector = cfg.detector
    if args.negative_control:
        if cfg.loop_filter is None:
            raise MissingFilter("--negative-control requires a [filter] section")
        sim_detector = DetectorParams(cfg.detector.eta * 0.5)

    steady = steady_state(cfg.cavity, cfg.drive)
    ts = simulate(
        cfg.cavity,
        cfg.drive,
        steady,
        cfg.mechanical,
        sim_detector if cfg.loop_filter is not None else None,
        cfg.loop_filter,
        cfg.simulation,
    )

    band_cap = _ORACLE_BAND_CAP / cfg.simulation.dt
    failures = []
    out = _resolve_output(args.output, "oracle.csv")
    scale = 1.0 / cfg.cavity.kappa if args.kappa_normalized else 1.0
    omega_name = "omega_per_kappa" if args.kappa_normalized else "omega_rad_s"

    def check(channel, budget_fn, path):
        psd = estimate_psd(ts, channel, cfg.simulation)
        budget = budget_fn(psd.grid)
        report = compare_to_analytic(
            ts, channel, budget, cfg.simulation, band=(0.0, band_cap), psd=psd
        )
        write_csv(
            path,
            [omega_name, "estimated", "analytic"],
            [psd.grid.omegas * scale, psd.values, budget.total],
        )
        status = "pass" if report.passes(args.tolerance) else "FAIL"
        print(
            f"{channel}: rms_dev {report.rms_rel_dev:.4f} max_dev {report.max_rel_dev:.4f} "
            f"segments {report.n_segments} band [{report.band[0]:.4g}, {report.band[1]:.4g}] "
            f"rad/s -> {status}"
        )
        if status == "FAIL":
            failures.append(channel)

    if cfg.loop_filter is not None:
        check(
            "amplitude",
            lambda g: intracavity_amplitude_spectrum_fb(
                cfg.cavity, cfg.drive, cfg.detector, cfg.loop_filter, g
            ),
            out,
        )
    else:
        check(
            "amplitude",
            lambda g: intracavity_amplitude_spectrum(cfg.cavity, cfg.drive, g),
            out,
        )
    if cfg.mechanical is not None:
        feedback = (
            (cfg.detector, cfg.loop_filter) if cfg.loop_filter is not None else None
        )
        phase_path = out.with_name(out.stem + "_phase" + (out.suffix or ".csv"))
        check(
            "reflected_phase",
            lambda g: reflected_phase_spectrum(
                cfg.cavity, cfg.drive, steady, cfg.mechanical, g, feedback=feedback
            ),
            phase_path,
        )
    print(f"wrote: {out}")
    if failures:
        raise ComparisonFailure(
            f"oracle deviation exceeded tolerance {args.tolerance:g} on: "
            + ", ".join(failures)
        )
    return 0


def cmd_compare(args) -> int:
    cfg = parse_config(args.config)
    if args.dump_config:
        sys.stdout.write(dump_config(cfg))
        return 0
    if cfg.loop_filter is None:
        raise MissingFilter("compare requires a [filter] section for the feedback route")
    steady = steady_state(cfg.cavity, cfg.drive)
    pair = compare_squeezing_vs_feedback(
        cfg.cavity,
        cfg.drive,
        steady,
        cfg.mechanical,
        cfg.grid,
        cfg.detector,
        cfg.loop_filter,
        args.squeeze,
    )
    out = _resolve_output(args.output, "compare.csv")
    stem = out.with_suffix("")
    suffix = out.suffix or ".csv"
    fb_path = Path(str(stem) + "_feedback" + suffix)
    sq_path = Path(str(stem) + "_squeezed" + suffix)
    scale = 1.0 / cfg.cavity.kappa if args.kappa_normalized else 1.0
    name = "omega_per_kappa" if args.kappa_normalized else "omega_rad_s"
    _budget_csv(fb_path, pair.feedback, scale, name)
    _budget_csv(sq_path, pair.squeezed, scale, name)

    om = cfg.grid.omegas
    idx = int(np.argmin(np.abs(om - cfg.cavity.kappa)))
    print(f"squeeze: {args.squeeze:g}")
    print(
        f"input_phase at omega={om[idx]:.4g} rad/s: feedback "
        f"{format_number(pair.feedback.contribution('input_phase')[idx])}, squeezed "
        f"{format_number(pair.squeezed.contribution('input_phase')[idx])}"
    )
    delta = pair.feedback.total - pair.squeezed.total
    print(
        f"total delta (feedback - squeezed): min {format_number(float(delta.min()))}, "
        f"max {format_number(float(delta.max()))}"
    )
    print(f"wrote: {fb_path}, {sq_path}")
    return 0


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cavnoise",
        description=(
            "Intensity and phase noise of a driven optical cavity with "
            "electro-optic intensity feedback."
        ),
        epilog=(
            "Exit codes: 0 success, 1 validation error, 2 numerical/stability "
            "failure, 3 oracle-comparison failure. Loop-gain dB: printed in "
            "both the amplitude (20*log10|L|) and power (10*log10|L|) "
            "conventions, labeled."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("config", help="scenario config file (INI)")
    common.add_argument(
        "--dump-config",
        action="store_true",
        help="print the canonical config for this scenario and exit",
    )

    p = sub.add_parser("spectrum", parents=[common], help="noise budget CSV + summary")
    p.add_argument("--feedback", choices=("on", "off"), default="off")
    p.add_argument("--output", help="CSV path (default $CAVNOISE_OUTDIR/spectrum.csv)")
    p.add_argument(
        "--kappa-normalized",
        action="store_true",
        help="emit frequencies in units of kappa",
    )
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("sweep", parents=[common], help="DC noise + suppression vs one parameter")
    p.add_argument("--param", required=True, help=f"one of: {', '.join(_SWEEPABLE)}")
    p.add_argument("--from", dest="start", type=float, required=True)
    p.add_argument("--to", dest="stop", type=float, required=True)
    p.add_argument("--points", type=int, required=True)
    p.add_argument("--spacing", choices=("linear", "log"), default="linear")
    p.add_argument("--output", help="CSV path (default $CAVNOISE_OUTDIR/sweep.csv)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("stability", parents=[common], help="closed-loop stability report")
    p.set_defaults(func=cmd_stability)

    p = sub.add_parser("oracle", parents=[common], help="time-domain cross-check")
    p.add_argument("--tolerance", type=float, default=0.05, help="RMS deviation bound")
    p.add_argument("--output", help="CSV path (default $CAVNOISE_OUTDIR/oracle.csv)")
    p.add_argument(
        "--negative-control",
        action="store_true",
        help=(
            "simulate with detector efficiency halved while comparing against "
            "the configured analytic budget; the comparison must fail"
        ),
    )
    p.add_argument(
        "--kappa-normalized",
        action="store_true",
        help="emit frequencies in units of kappa",
    )
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("compare", parents=[common], help="feedback vs squeezed-input phase readout")
    p.add_argument("--squeeze", type=float, required=True, help="amplitude squeeze factor in (0, 1]")
    p.add_argument("--output", help="CSV stem (default $CAVNOISE_OUTDIR/compare.csv)")
    p.add_argument(
        "--kappa-normalized",
        action="store_true",
        help="emit frequencies in units of kappa",
    )
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ComparisonFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except NumericalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except CavNoiseError as exc:  # pragma: no cover - defensive
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
