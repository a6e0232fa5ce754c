import math

import numpy as np
import pytest

from cavnoise.cli import dump_config, format_number, main, parse_config
from cavnoise.errors import ConfigError
from cavnoise.model import TabulatedSpectrum

BASE = """
[cavity]
kappa_in = 4.9
kappa_out = 4.9
kappa_loss = 1.0

[drive]
amplitude = 1.0
amp_noise = 1e6
phase_noise = 1.0

[detector]
eta = 0.91

[filter]
gain = 1e4
zeros =
poles =
delay = 0.0

[grid]
omega_min = 0.0108
omega_max = 108.0
points = 50
spacing = log
"""

MATCHED = """
[cavity]
kappa_in = 0.5
kappa_out = 0.5
kappa_loss = 0.0

[drive]
amplitude = 5.0
amp_noise = 1.0
phase_noise = 1.0

[detector]
eta = 1.0

[filter]
gain = 100.0
zeros =
poles =
delay = 0.0

[mechanical]
model = constant
coupling = 0.5
thermal = 0.3

[grid]
omega_min = 1e-3
omega_max = 10.0
points = 60
spacing = log
"""

ORACLE = """
[cavity]
kappa_in = 0.5
kappa_out = 0.5
kappa_loss = 0.0

[drive]
amplitude = 1.0
amp_noise = 1.0
phase_noise = 1.0

[detector]
eta = 1.0

[grid]
omega_min = 1e-3
omega_max = 10.0
points = 50
spacing = log

[simulation]
dt = 0.01
duration = 22000.0
seed = 20240811
burn_in = 20.0
welch_segment = 4096
welch_overlap = 0.75
"""

ORACLE_FB = """
[cavity]
kappa_in = 0.5
kappa_out = 0.5
kappa_loss = 0.0

[drive]
amplitude = 1.0
amp_noise = 1.0
phase_noise = 1.0

[detector]
eta = 1.0

[filter]
gain = 20.0
zeros =
poles =
delay = 0.0

[grid]
omega_min = 1e-3
omega_max = 10.0
points = 50
spacing = log

[simulation]
dt = 0.002
duration = 4500.0
seed = 7
burn_in = 20.0
welch_segment = 2048
welch_overlap = 0.75
"""


@pytest.fixture
def write(tmp_path):
    def _write(text, name="scenario.ini"):
        path = tmp_path / name
        path.write_text(text)
        return str(path)

    return _write


class TestConfigParsing:
    def test_unknown_key_named_in_error(self, write):
        path = write("[cavity]\nkapa_in = 1.0\n")
        with pytest.raises(ConfigError, match="kapa_in"):
            parse_config(path)

    def test_unknown_section_rejected(self, write):
        path = write(BASE + "\n[extras]\nfoo = 1\n")
        with pytest.raises(ConfigError, match="extras"):
            parse_config(path)

    def test_missing_required_section(self, write):
        path = write("[cavity]\nkappa_in = 1.0\n")
        with pytest.raises(ConfigError, match="drive"):
            parse_config(path)

    def test_tabulated_noise_model(self, write):
        path = write(BASE.replace("amp_noise = 1e6", "amp_noise = 0:2.0, 5:1.5, 200:1.0"))
        cfg = parse_config(path)
        assert isinstance(cfg.drive.amp_noise, TabulatedSpectrum)
        assert cfg.drive.amp_noise_at(np.array([0.0]))[0] == 2.0

    def test_default_grid_spans_kappa_decades(self, write):
        text = BASE.split("[grid]")[0]
        cfg = parse_config(write(text))
        assert len(cfg.grid) == 400
        assert cfg.grid.omegas[0] == pytest.approx(1e-3 * 10.8)
        assert cfg.grid.omegas[-1] == pytest.approx(10.0 * 10.8)

    def test_roundtrip_through_dump(self, write, tmp_path):
        for text in (BASE, MATCHED, ORACLE_FB):
            cfg = parse_config(write(text))
            dumped = tmp_path / "dumped.ini"
            dumped.write_text(dump_config(cfg))
            again = parse_config(str(dumped))
            assert again.cavity == cfg.cavity
            assert again.drive == cfg.drive
            assert again.detector == cfg.detector
            assert again.loop_filter == cfg.loop_filter
            assert again.mechanical == cfg.mechanical
            assert again.grid == cfg.grid
            assert again.simulation == cfg.simulation

    def test_roundtrip_with_tabulated_everything(self, write, tmp_path):
        text = MATCHED.replace("amp_noise = 1.0", "amp_noise = 0:2.0, 30:1.5").replace(
            "model = constant\ncoupling = 0.5", "model = tabulated\ntransfer = 0:1.0, 30:0.5"
        )
        cfg = parse_config(write(text))
        dumped = tmp_path / "dumped.ini"
        dumped.write_text(dump_config(cfg))
        again = parse_config(str(dumped))
        assert again.drive == cfg.drive
        assert again.mechanical == cfg.mechanical


class TestNumberFormat:
    def test_plain_inside_window(self):
        assert format_number(0.001) == "0.001"
        assert format_number(9999.5) == "9999.5"
        assert format_number(0) == "0"

    def test_scientific_outside_window(self):
        assert "e" in format_number(0.0009)
        assert "e" in format_number(10000.0)
        assert float(format_number(12345.678)) == pytest.approx(12345.678)


class TestSpectrumCommand:
    def test_summary_and_csv(self, write, tmp_path, capsys):
        out = tmp_path / "s.csv"
        code = main(["spectrum", write(BASE), "--feedback", "on", "--output", str(out)])
        assert code == 0
        text = capsys.readouterr().out
        assert "suppression: 0.6055 (-2.18 dB)" in text
        assert "coherent_limit: 0.1851851852" in text
        lines = out.read_text().splitlines()
        assert lines[0] == "omega_rad_s,total,input_amplitude,output_vacuum,loss_vacuum,detector_vacuum"
        assert len(lines) == 51

    def test_open_loop_dc_matches_coherent_floor(self, write, tmp_path, capsys):
        text = BASE.replace("amp_noise = 1e6", "amp_noise = 1.0")
        code = main(["spectrum", write(text), "--output", str(tmp_path / "o.csv")])
        assert code == 0
        printed = capsys.readouterr().out
        dc = float(printed.split("dc_total: ")[1].splitlines()[0])
        assert dc == pytest.approx(2.0 / 10.8, rel=1e-9)

    def test_feedback_without_filter_fails(self, write, tmp_path):
        # drop the filter section entirely
        text = "\n".join(
            line for line in BASE.splitlines()
            if line.strip() not in ("[filter]", "gain = 1e4", "zeros =", "poles =", "delay = 0.0")
        )
        code = main(["spectrum", write(text), "--feedback", "on"])
        assert code == 1

    def test_kappa_normalized_grid(self, write, tmp_path):
        out = tmp_path / "n.csv"
        code = main([
            "spectrum", write(BASE), "--output", str(out), "--kappa-normalized",
        ])
        assert code == 0
        lines = out.read_text().splitlines()
        assert lines[0].startswith("omega_per_kappa,")
        first = float(lines[1].split(",")[0])
        assert first == pytest.approx(0.0108 / 10.8, rel=1e-9)

    def test_unknown_key_exits_one(self, write, tmp_path, capsys):
        code = main(["spectrum", write("[cavity]\nkapa_in = 1\n")])
        assert code == 1
        assert "kapa_in" in capsys.readouterr().err

    def test_dump_config_roundtrip_via_cli(self, write, capsys):
        code = main(["spectrum", write(BASE), "--dump-config"])
        assert code == 0
        dumped = capsys.readouterr().out
        assert "[cavity]" in dumped and "kappa_in = 4.9" in dumped


class TestSweepCommand:
    def test_eta_sweep_spans_suppression_range(self, write, tmp_path):
        out = tmp_path / "sweep.csv"
        code = main([
            "sweep", write(MATCHED), "--param", "eta",
            "--from", "0.5", "--to", "1.0", "--points", "6", "--output", str(out),
        ])
        assert code == 0
        rows = np.loadtxt(out, delimiter=",", skiprows=1)
        assert rows[0, 2] == pytest.approx(0.0, abs=1e-9)
        assert rows[-1, 2] == pytest.approx(-3.0103, abs=1e-3)

    def test_gain_sweep_monotone_toward_floor(self, write, tmp_path):
        out = tmp_path / "gain.csv"
        code = main([
            "sweep", write(MATCHED), "--param", "filter.gain",
            "--from", "10", "--to", "1e5", "--points", "5",
            "--spacing", "log", "--output", str(out),
        ])
        assert code == 0
        rows = np.loadtxt(out, delimiter=",", skiprows=1)
        dc = rows[:, 1]
        assert np.all(np.diff(dc) < 0)
        assert dc[-1] == pytest.approx(1.0, rel=1e-3)  # 1/(2*eta*kappa_out)

    def test_unknown_parameter(self, write, capsys):
        code = main([
            "sweep", write(MATCHED), "--param", "kappa_in",
            "--from", "0.1", "--to", "1.0", "--points", "3",
        ])
        assert code == 1
        assert "kappa_in" in capsys.readouterr().err

    def test_gain_sweep_needs_filter(self, write):
        code = main([
            "sweep", write(ORACLE), "--param", "filter.gain",
            "--from", "1", "--to", "10", "--points", "3",
        ])
        assert code == 1


class TestStabilityCommand:
    def test_stable_loop_reports_and_exits_zero(self, write, capsys):
        code = main(["stability", write(BASE)])
        assert code == 0
        out = capsys.readouterr().out
        assert "stable: true" in out
        assert "gain_margin_db: inf" in out
        assert "method: polynomial_roots" in out
        assert "dc_loop_gain_db_amplitude" in out
        assert "dc_loop_gain_db_power" in out

    def test_unstable_loop_exits_two(self, write, capsys):
        text = MATCHED.replace("gain = 100.0", "gain = 5.0").replace(
            "delay = 0.0", "delay = 2.0"
        )
        code = main(["stability", write(text)])
        assert code == 2
        out = capsys.readouterr().out
        assert "stable: false" in out
        assert "unstable_pole_count" in out

    def test_missing_filter(self, write):
        code = main(["stability", write(ORACLE)])
        assert code == 1


class TestOracleCommand:
    def test_open_loop_passes(self, write, tmp_path, capsys):
        out = tmp_path / "oracle.csv"
        code = main(["oracle", write(ORACLE), "--tolerance", "0.08", "--output", str(out)])
        assert code == 0
        printed = capsys.readouterr().out
        assert "amplitude:" in printed and "pass" in printed
        lines = out.read_text().splitlines()
        assert lines[0] == "omega_rad_s,estimated,analytic"
        assert len(lines) > 10

    def test_phase_channel_written_when_mechanics_present(self, write, tmp_path):
        text = ORACLE.replace(
            "[simulation]",
            "[mechanical]\nmodel = constant\ncoupling = 0.3\nthermal = 0.2\n\n[simulation]",
        ).replace("amplitude = 1.0", "amplitude = 4.0")
        out = tmp_path / "oracle.csv"
        code = main(["oracle", write(text), "--tolerance", "0.1", "--output", str(out)])
        assert code == 0
        assert (tmp_path / "oracle_phase.csv").exists()

    def test_negative_control_fails_with_exit_three(self, write, tmp_path, capsys):
        out = tmp_path / "neg.csv"
        code = main([
            "oracle", write(ORACLE_FB), "--tolerance", "0.05",
            "--output", str(out), "--negative-control",
        ])
        assert code == 3
        assert "FAIL" in capsys.readouterr().out

    def test_feedback_scenario_passes(self, write, tmp_path):
        code = main([
            "oracle", write(ORACLE_FB), "--tolerance", "0.08",
            "--output", str(tmp_path / "fb.csv"),
        ])
        assert code == 0

    def test_requires_simulation_section(self, write):
        code = main(["oracle", write(BASE)])
        assert code == 1

    def test_negative_control_requires_filter(self, write):
        code = main(["oracle", write(ORACLE), "--negative-control"])
        assert code == 1


class TestCompareCommand:
    def test_writes_pair_and_summary(self, write, tmp_path, capsys):
        out = tmp_path / "cmp.csv"
        code = main(["compare", write(MATCHED), "--squeeze", "0.5", "--output", str(out)])
        assert code == 0
        assert (tmp_path / "cmp_feedback.csv").exists()
        assert (tmp_path / "cmp_squeezed.csv").exists()
        printed = capsys.readouterr().out
        assert "squeeze: 0.5" in printed
        assert "input_phase" in printed

    def test_invalid_squeeze_exits_one(self, write):
        assert main(["compare", write(MATCHED), "--squeeze", "1.5"]) == 1
        assert main(["compare", write(MATCHED), "--squeeze", "0"]) == 1

    def test_requires_filter(self, write):
        code = main(["compare", write(ORACLE), "--squeeze", "0.5"])
        assert code == 1


class TestOutputDirectoryEnv:
    def test_default_output_goes_to_env_dir(self, write, tmp_path, monkeypatch):
        outdir = tmp_path / "results"
        monkeypatch.setenv("CAVNOISE_OUTDIR", str(outdir))
        code = main(["spectrum", write(BASE)])
        assert code == 0
        assert (outdir / "spectrum.csv").exists()
