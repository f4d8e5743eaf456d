"""Tests for scenario parsing, the run/converge/compare drivers, and the CLI."""

import json
import math

import numpy as np
import pytest

from mpsolve.cli import main as cli_main
from mpsolve.scenario import (
    ScenarioError,
    bundled_scenario_path,
    compare_dirac_scenario,
    converge_scenario,
    parse_scenario,
    run_scenario,
)


def write_scenario(tmp_path, doc, name="scenario.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return str(path)


def quench_doc(eta=0.25, truncation=64, slices=4, t1=2.0, points=1024):
    return {
        "grid": {"x_min": -12.0, "x_max": 12.0, "points": points},
        "potential": {
            "kind": "scaled_harmonic",
            "k": 1.0,
            "scale": {"kind": "step", "eta": eta, "t_on": 0.0},
        },
        "schedule": {"t0": 0.0, "t1": t1, "slices": slices,
                     "averaging": "integral"},
        "basis": {"truncation": truncation},
        "initial_state": {"eigenstate": 0},
        "outputs": {"directory": "out", "emit": ["energy", "summary"]},
    }


class TestParse:
    def test_bundled_quench(self):
        cfg = parse_scenario(bundled_scenario_path("quench_eta025"))
        assert cfg.profile(1.0) == 0.25
        assert cfg.slices == 4
        assert cfg.truncation == 64
        assert cfg.dirac is not None and cfg.dirac["states"] == 16

    def test_all_bundled_scenarios_validate(self):
        for name in ("quench_eta025", "quench_eta081", "quench_eta121",
                     "pulse_eta4", "pulse_eta081", "stationary",
                     "smooth_ramp", "dirac_weak"):
            parse_scenario(bundled_scenario_path(name))

    def test_negative_eta_rejected(self, tmp_path):
        doc = quench_doc()
        doc["potential"]["scale"]["eta"] = -1.0
        with pytest.raises(ScenarioError, match="eta"):
            parse_scenario(write_scenario(tmp_path, doc))

    def test_ambiguous_initial_state(self, tmp_path):
        doc = quench_doc()
        doc["initial_state"] = {"eigenstate": 0, "amplitude_file": "x.csv"}
        with pytest.raises(ScenarioError, match="ambiguous initial state"):
            parse_scenario(write_scenario(tmp_path, doc))

    def test_unknown_key_rejected(self, tmp_path):
        doc = quench_doc()
        doc["extra_section"] = {}
        doc["schedule"]["dt"] = 0.1
        with pytest.raises(ScenarioError) as excinfo:
            parse_scenario(write_scenario(tmp_path, doc))
        # both violations reported at once
        assert any("extra_section" in v for v in excinfo.value.violations)
        assert any("schedule" in v and "dt" in v for v in excinfo.value.violations)

    def test_missing_amplitude_file(self, tmp_path):
        doc = quench_doc()
        doc["initial_state"] = {"amplitude_file": "missing.csv"}
        with pytest.raises(ScenarioError, match="file not found"):
            parse_scenario(write_scenario(tmp_path, doc))

    def test_malformed_json(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{not json")
        with pytest.raises(ScenarioError, match="not valid JSON"):
            parse_scenario(str(path))


class TestRun:
    def test_quench_energy_ratio(self, tmp_path):
        cfg = parse_scenario(write_scenario(tmp_path, quench_doc()))
        summary = run_scenario(cfg, str(tmp_path / "out"))
        # E / E0 -> (1 + eta) / 2 = 0.625 for the sudden quench
        assert summary.final_energy_ratio == pytest.approx(0.625, abs=1e-3)
        assert summary.final_norm == pytest.approx(1.0, abs=1e-9)

    def test_quench_truncated_to_seven_states(self, tmp_path):
        cfg = parse_scenario(write_scenario(tmp_path, quench_doc(truncation=7)))
        summary = run_scenario(cfg, str(tmp_path / "out"))
        assert summary.final_energy_ratio == pytest.approx(0.6246, abs=5e-4)

    def test_stationary_run(self, tmp_path):
        cfg = parse_scenario(bundled_scenario_path("stationary"))
        summary = run_scenario(cfg, str(tmp_path / "out"))
        energy = np.loadtxt(tmp_path / "out" / "energy.csv",
                            delimiter=",", skiprows=1)
        assert np.abs(energy[:, 2] - 1.0).max() < 1e-9
        assert np.ptp(energy[:, 1]) < 1e-9
        assert summary.final_norm == pytest.approx(1.0, abs=1e-9)

    def test_pulse_revival_phase(self, tmp_path):
        cfg = parse_scenario(bundled_scenario_path("pulse_eta4"))
        summary = run_scenario(cfg, str(tmp_path / "out"))
        # predicted relative phase 2*pi/sqrt(4) = pi, compared circularly
        wrapped = abs(abs(summary.phase_vs_reference) - math.pi)
        assert wrapped < 1e-2
        assert summary.final_norm == pytest.approx(1.0, abs=1e-6)

    def test_pulse_eta081_phase(self, tmp_path):
        cfg = parse_scenario(bundled_scenario_path("pulse_eta081"))
        summary = run_scenario(cfg, str(tmp_path / "out"))
        predicted = 2.0 * math.pi / 0.9 - 2.0 * math.pi  # reduced to (-pi, pi]
        assert summary.phase_vs_reference == pytest.approx(predicted, abs=1e-2)

    def test_byte_identical_reruns(self, tmp_path):
        cfg = parse_scenario(write_scenario(tmp_path, quench_doc()))
        run_scenario(cfg, str(tmp_path / "a"))
        run_scenario(cfg, str(tmp_path / "b"))
        for name in ("energy.csv", "summary.json"):
            first = (tmp_path / "a" / name).read_bytes()
            second = (tmp_path / "b" / name).read_bytes()
            # summary.json differs only in wall_time_s
            if name == "summary.json":
                a = json.loads(first)
                b = json.loads(second)
                a.pop("wall_time_s")
                b.pop("wall_time_s")
                assert a == b
            else:
                assert first == second

    def test_summary_matches_files(self, tmp_path):
        doc = quench_doc()
        doc["outputs"]["emit"] = ["energy", "coefficients", "summary"]
        cfg = parse_scenario(write_scenario(tmp_path, doc))
        summary = run_scenario(cfg, str(tmp_path / "out"))
        doc_out = json.loads((tmp_path / "out" / "summary.json").read_text())
        assert doc_out["scenario_hash"] == cfg.scenario_hash
        assert doc_out["final_norm"] == pytest.approx(summary.final_norm, rel=1e-15)
        coeffs = np.array([row[1] + 1j * row[2]
                           for row in doc_out["final_coefficients"]])
        assert np.abs(coeffs - summary.final_coefficients).max() < 1e-12


class TestConverge:
    def test_doublings_validated(self, tmp_path):
        cfg = parse_scenario(write_scenario(tmp_path, quench_doc()))
        with pytest.raises(ScenarioError, match="doublings"):
            converge_scenario(cfg, 1, str(tmp_path / "out"))

    def test_step_profile_is_flat(self, tmp_path):
        # piecewise-constant profiles are integrated exactly at any slicing
        cfg = parse_scenario(write_scenario(tmp_path, quench_doc(points=512)))
        rungs = converge_scenario(cfg, 2, str(tmp_path / "out"))
        assert all(err < 1e-9 for _, err in rungs)

    def test_smooth_ramp_second_order(self, tmp_path):
        cfg = parse_scenario(bundled_scenario_path("smooth_ramp"))
        rungs = converge_scenario(cfg, 3, str(tmp_path / "out"))
        errors = [err for _, err in rungs]
        assert all(e2 < e1 for e1, e2 in zip(errors, errors[1:]))
        order = math.log2(errors[-2] / errors[-1])
        assert order == pytest.approx(2.0, abs=0.5)
        rows = (tmp_path / "out" / "convergence.csv").read_text().splitlines()
        assert rows[0] == "slices,l2_error,observed_order"
        assert len(rows) == len(rungs) + 1


class TestCompareDirac:
    def test_requires_dirac_section(self, tmp_path):
        cfg = parse_scenario(write_scenario(tmp_path, quench_doc()))
        with pytest.raises(ScenarioError, match="dirac"):
            compare_dirac_scenario(cfg, str(tmp_path / "out"))

    def test_weak_pulse_three_way_agreement(self, tmp_path):
        cfg = parse_scenario(bundled_scenario_path("dirac_weak"))
        report = compare_dirac_scenario(cfg, str(tmp_path / "out"))
        assert report.max_norm == pytest.approx(1.0, abs=1e-6)
        rows = np.loadtxt(tmp_path / "out" / "dirac_compare.csv",
                          delimiter=",", skiprows=1, ndmin=2)
        m, a_mp, a_rk, a_fo = rows[0][:4]
        assert int(m) == 2
        assert abs(a_mp - a_rk) / a_rk < 0.05
        assert abs(a_mp - a_fo) / a_fo < 0.05

    def test_strong_quench_reports_divergence(self, tmp_path):
        cfg = parse_scenario(bundled_scenario_path("quench_eta025"))
        report = compare_dirac_scenario(cfg, str(tmp_path / "out"))
        assert report.max_norm > 1e6
        assert report.first_exceedance_time is not None
        doc = json.loads((tmp_path / "out" / "divergence_report.json").read_text())
        assert doc["max_norm"] == report.max_norm


class TestCli:
    def test_validate_ok(self, capsys):
        assert cli_main(["validate", bundled_scenario_path("quench_eta025")]) == 0
        assert capsys.readouterr().out.strip() == "OK"

    def test_validate_failure_exit_code(self, tmp_path, capsys):
        doc = quench_doc()
        doc["schedule"]["slices"] = 0
        path = write_scenario(tmp_path, doc)
        assert cli_main(["validate", path]) == 1
        assert "slices" in capsys.readouterr().err

    def test_run_exit_code_and_output(self, tmp_path, capsys):
        path = write_scenario(tmp_path, quench_doc(points=256))
        assert cli_main(["run", path, "--out", str(tmp_path / "out")]) == 0
        assert "final energy ratio" in capsys.readouterr().out
        assert (tmp_path / "out" / "energy.csv").exists()

    def test_converge_requires_two_doublings(self, tmp_path, capsys):
        path = write_scenario(tmp_path, quench_doc(points=256))
        code = cli_main(["converge", path, "--doublings", "1",
                         "--out", str(tmp_path / "out")])
        assert code == 1
        assert "doublings >= 2" in capsys.readouterr().err

    def test_missing_file_exit_code(self, capsys):
        assert cli_main(["validate", "/nonexistent/scn.json"]) == 1
