"""Config loading/round-trips, CLI subcommands, exit codes, determinism."""

import json
import os

import numpy as np
import pytest
import yaml

from scrapsim.cli import main
from scrapsim.config import (dump_config, load_config, load_config_text,
                             parse_quantity, resolve_config)
from scrapsim.errors import (ConfigParseError, ConfigValidationError,
                             UnknownUnit)

MINIMAL_LEVELS = """
protocol: levels
circuit:
  critical_current: 8.351 uA
  junction_capacitance: 1.2 pF
  loop_inductance: 168 pH
  inductance_ratio: 81
  dc_bias: 923.7 uA
"""

FIG_INVERSION = """
protocol: inversion
schedule:
  pump: {kind: gaussian, amplitude: 2.98 nA, center: 0 ns, width: 2.5 ns}
  stark: {kind: gaussian, amplitude: 5 nA, center: 0 ns, width: 5 ns}
  window: [-10 ns, 10 ns]
"""


class TestQuantityParsing:
    def test_bare_number_uses_internal_unit(self):
        assert parse_quantity(5, "current", "x") == 5.0

    def test_unit_conversion(self):
        assert parse_quantity("8.351 uA", "current", "x") == pytest.approx(8351.0)
        assert parse_quantity("2.5 ns", "time", "x") == 2.5
        assert parse_quantity("1.5 GHz", "frequency", "x") == pytest.approx(
            3.0 * np.pi)

    def test_unknown_unit(self):
        with pytest.raises(UnknownUnit):
            parse_quantity("5 furlongs", "current", "x")

    def test_malformed_quantity(self):
        with pytest.raises(ConfigValidationError):
            parse_quantity("fast pA extra", "current", "x")


class TestLoadConfig:
    def test_minimal_levels_config_fills_defaults(self):
        cfg = load_config_text(MINIMAL_LEVELS)
        assert cfg.data["numerics"]["grid_points"] == 4096
        assert cfg.data["numerics"]["n_levels"] == 4
        assert cfg.data["circuit"]["critical_current_na"] == pytest.approx(8351.0)
        params = cfg.circuit_params()
        assert params.critical_current_ua == pytest.approx(8.351)

    def test_zero_width_gaussian_rejected(self):
        text = FIG_INVERSION.replace("width: 2.5 ns", "width: 0 ns")
        with pytest.raises(ConfigValidationError) as err:
            load_config_text(text)
        assert "width" in str(err.value)

    def test_unknown_protocol_rejected(self):
        with pytest.raises(ConfigValidationError):
            load_config_text("protocol: teleport\n")

    def test_unknown_field_rejected(self):
        with pytest.raises(ConfigValidationError):
            load_config_text("protocol: levels\nbogus: 3\n")

    def test_round_trip_is_identical(self):
        cfg = load_config_text(FIG_INVERSION)
        text = dump_config(cfg)
        again = load_config_text(text)
        assert again == cfg
        assert dump_config(again) == text

    def test_parse_error_carries_position(self, tmp_path):
        path = tmp_path / "broken.yaml"
        path.write_text("protocol: levels\n  bad indent: [\n")
        with pytest.raises(ConfigParseError) as err:
            load_config(str(path))
        assert err.value.line is not None

    def test_missing_file(self):
        with pytest.raises(ConfigParseError):
            load_config("/does/not/exist.yaml")

    def test_sweep_path_must_resolve(self):
        cfg = load_config_text(MINIMAL_LEVELS)
        with pytest.raises(ConfigValidationError):
            cfg.copy_with("circuit/nonexistent", 1.0)

    def test_sweep_requires_section(self):
        with pytest.raises(ConfigValidationError):
            load_config_text("protocol: sweep\n")


def _write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def _run_cli(args):
    return main(args)


class TestCliLevels:
    def test_levels_run_and_report(self, tmp_path, capsys):
        cfg = _write(tmp_path, "levels.yaml", MINIMAL_LEVELS)
        out = str(tmp_path / "out")
        assert _run_cli(["levels", "--config", cfg, "--out", out]) == 0
        text = capsys.readouterr().out
        assert "f10_ghz" in text
        payload = json.loads(open(os.path.join(out, "report.json")).read())
        assert payload["metrics"]["f10_ghz"] == pytest.approx(10.981, rel=0.01)
        assert os.path.exists(os.path.join(out, "levels.csv"))
        assert _run_cli(["report", "--out", out]) == 0

    def test_determinism_byte_identical(self, tmp_path):
        cfg = _write(tmp_path, "levels.yaml", MINIMAL_LEVELS)
        out_a, out_b = str(tmp_path / "a"), str(tmp_path / "b")
        assert _run_cli(["levels", "--config", cfg, "--out", out_a]) == 0
        assert _run_cli(["levels", "--config", cfg, "--out", out_b]) == 0
        with open(os.path.join(out_a, "levels.csv"), "rb") as fh:
            bytes_a = fh.read()
        with open(os.path.join(out_b, "levels.csv"), "rb") as fh:
            bytes_b = fh.read()
        assert bytes_a == bytes_b

    def test_config_error_exit_code(self, tmp_path):
        cfg = _write(tmp_path, "bad.yaml", "protocol: nope\n")
        assert _run_cli(["simulate", "--config", cfg,
                         "--out", str(tmp_path / "out")]) == 2

    def test_numerical_failure_exit_code_and_record(self, tmp_path):
        cfg = _write(tmp_path, "iswap.yaml", (
            "protocol: iswap\n"
            "two_qubit:\n"
            "  window: [-30 ns, 30 ns]\n"))
        out = str(tmp_path / "out")
        assert _run_cli(["simulate", "--config", cfg, "--out", out]) == 3
        record = json.loads(open(os.path.join(out, "error.json")).read())
        assert record["error"] == "WindowTooShort"


class TestCliPiPulse:
    def test_pi_pulse_protocol(self, tmp_path):
        cfg = _write(tmp_path, "pi.yaml", "protocol: pi-pulse\n")
        out = str(tmp_path / "out")
        assert _run_cli(["simulate", "--config", cfg, "--out", out,
                         "--dt", "0.002"]) == 0
        payload = json.loads(open(os.path.join(out, "report.json")).read())
        assert payload["metrics"]["max_abs_error"] <= 1e-6


class TestCliPhaseGate:
    def test_phase_gate_thresholds(self, tmp_path):
        cfg = _write(tmp_path, "pg.yaml", "protocol: phase-gate\n")
        out = str(tmp_path / "out")
        assert _run_cli(["simulate", "--config", cfg, "--out", out,
                         "--dt", "0.002"]) == 0
        payload = json.loads(open(os.path.join(out, "report.json")).read())
        assert payload["checks"]["phase"] is True
        assert payload["checks"]["populations_conserved"] is True

    def test_failed_threshold_gives_exit_one(self, tmp_path):
        cfg = _write(tmp_path, "pg.yaml", (
            "protocol: phase-gate\n"
            "thresholds: {phase_tolerance: 1.0e-30}\n"))
        out = str(tmp_path / "out")
        assert _run_cli(["simulate", "--config", cfg, "--out", out,
                         "--dt", "0.002"]) == 1


class TestCliInversionAndPlots:
    def test_inversion_with_plots(self, tmp_path):
        cfg = _write(tmp_path, "inv.yaml", FIG_INVERSION)
        out = str(tmp_path / "out")
        assert _run_cli(["simulate", "--config", cfg, "--out", out,
                         "--dt", "0.004", "--plots"]) == 0
        assert os.path.exists(os.path.join(out, "trajectory.csv"))
        assert os.path.exists(os.path.join(out,
                                           "trajectory_populations.svg"))
        with open(os.path.join(out, "trajectory.csv")) as fh:
            header = fh.readline().strip().split(",")
        assert header[0] == "t_ns"
        assert "p0" in header and "adiabatic_p0" in header
        assert "mu0_rad_per_ns" in header and "norm" in header


class TestCliSweep:
    def test_empty_sweep_is_exit_zero(self, tmp_path):
        cfg = _write(tmp_path, "sweep.yaml", (
            "protocol: sweep\n"
            "sweep:\n"
            "  protocol: levels\n"
            "  path: circuit/dc_bias_na\n"
            "  values: []\n"))
        out = str(tmp_path / "out")
        assert _run_cli(["sweep", "--config", cfg, "--out", out]) == 0
        with open(os.path.join(out, "sweep.csv")) as fh:
            lines = fh.read().strip().splitlines()
        assert len(lines) == 1  # header only

    def test_bias_sweep_rows_ordered(self, tmp_path):
        cfg = _write(tmp_path, "sweep.yaml", (
            "protocol: sweep\n"
            "numerics: {check_convergence: false}\n"
            "sweep:\n"
            "  protocol: levels\n"
            "  path: circuit/dc_bias_na\n"
            "  values: [923000, 923700, 924000]\n"
            "workers: 2\n"))
        out = str(tmp_path / "out")
        assert _run_cli(["sweep", "--config", cfg, "--out", out]) == 0
        data = np.genfromtxt(os.path.join(out, "sweep.csv"), delimiter=",",
                             names=True)
        assert list(data["value"]) == [923000.0, 923700.0, 924000.0]
        # stronger bias tilts the well shallower: f10 decreases monotonically
        assert data["f10_ghz"][0] > data["f10_ghz"][1] > data["f10_ghz"][2]


class TestCliAdiabaticity:
    def test_reference_schedule_is_reported_nonadiabatic(self, tmp_path):
        cfg = _write(tmp_path, "ad.yaml", FIG_INVERSION)
        out = str(tmp_path / "out")
        assert _run_cli(["adiabaticity", "--config", cfg, "--out", out,
                         "--dt", "0.01"]) == 0
        payload = json.loads(open(os.path.join(out, "report.json")).read())
        assert payload["metrics"]["adiabatic"] is False

    def test_chirped_schedule_is_adiabatic(self, tmp_path):
        cfg = _write(tmp_path, "ad.yaml", (
            "protocol: adiabaticity\n"
            "schedule:\n"
            "  variant: chirped\n"))
        out = str(tmp_path / "out")
        assert _run_cli(["adiabaticity", "--config", cfg, "--out", out,
                         "--dt", "0.01"]) == 0
        payload = json.loads(open(os.path.join(out, "report.json")).read())
        assert payload["metrics"]["adiabatic"] is True
        assert payload["metrics"]["max_margin"] <= 0.1


CONFIGS_DIR = os.path.join(os.path.dirname(__file__), "..", "configs")


def _preset(name):
    return os.path.join(CONFIGS_DIR, name)


class TestShippedPresets:
    def test_all_presets_resolve(self):
        import glob
        presets = sorted(glob.glob(os.path.join(CONFIGS_DIR, "*.yaml")))
        assert len(presets) >= 12
        for preset in presets:
            load_config(preset)

    def test_not_gate_preset(self, tmp_path):
        out = str(tmp_path / "out")
        assert _run_cli(["simulate", "--config", _preset("not_gate.yaml"),
                         "--out", out, "--dt", "0.004"]) == 0
        payload = json.loads(open(os.path.join(out, "report.json")).read())
        assert payload["metrics"]["process_fidelity"] >= 0.98

    def test_stark_shift_preset(self, tmp_path):
        out = str(tmp_path / "out")
        assert _run_cli(["simulate", "--config", _preset("stark_shift.yaml"),
                         "--out", out]) == 0
        payload = json.loads(open(os.path.join(out, "report.json")).read())
        assert all(payload["checks"].values())


class TestSweepTrends:
    def test_amplitude_sweeps_flat_versus_curved(self, tmp_path):
        out_fig = str(tmp_path / "fig")
        out_chirp = str(tmp_path / "chirp")
        assert _run_cli(["sweep", "--config",
                         _preset("sweep_figure_amplitude.yaml"),
                         "--out", out_fig, "--dt", "0.008"]) == 0
        assert _run_cli(["sweep", "--config",
                         _preset("sweep_chirped_amplitude.yaml"),
                         "--out", out_chirp, "--dt", "0.008"]) == 0
        fig = np.genfromtxt(os.path.join(out_fig, "sweep.csv"),
                            delimiter=",", names=True)
        chirp = np.genfromtxt(os.path.join(out_chirp, "sweep.csv"),
                              delimiter=",", names=True)
        assert chirp["transfer"].max() - chirp["transfer"].min() < 0.02
        assert fig["transfer"].max() - fig["transfer"].min() > 0.05

    def test_chirp_rate_sweep_monotone_infidelity(self, tmp_path):
        cfg = _write(tmp_path, "gamma.yaml", (
            "protocol: sweep\n"
            "numerics: {dt: 0.02 ns}\n"
            "two_qubit: {window: [-165 ns, 165 ns]}\n"
            "thresholds: {min_swap_fidelity: 0.0, min_spectator: 0.0,\n"
            "             max_leakage: 1.0}\n"
            "sweep:\n"
            "  protocol: iswap\n"
            "  path: two_qubit/chirp_rate_na_per_ns\n"
            "  values: [4, 8, 16]\n"))
        out = str(tmp_path / "out")
        assert _run_cli(["sweep", "--config", cfg, "--out", out]) == 0
        data = np.genfromtxt(os.path.join(out, "sweep.csv"), delimiter=",",
                             names=True)
        infid = 1.0 - data["swap_fidelity"]
        assert infid[0] < infid[1] < infid[2]

    def test_dt_sweep_second_order(self, tmp_path):
        cfg = _write(tmp_path, "dt.yaml", (
            "protocol: sweep\n"
            "schedule: {auto_calibrate: false}\n"
            "thresholds: {min_transfer: 0.0, max_leakage: 1.0}\n"
            "sweep:\n"
            "  protocol: inversion\n"
            "  path: numerics/dt_ns\n"
            "  values: [0.064, 0.032, 0.016]\n"))
        out = str(tmp_path / "out")
        assert _run_cli(["sweep", "--config", cfg, "--out", out]) == 0
        data = np.genfromtxt(os.path.join(out, "sweep.csv"), delimiter=",",
                             names=True)
        f = data["transfer"]
        d1, d2 = abs(f[0] - f[1]), abs(f[1] - f[2])
        assert d1 / d2 >= 4.0
