#!/usr/bin/env python3
"""
End-to-end tests for the delaylab command line front end.

Project: delaylab
Version: 1.0.0
License: MIT
"""

import csv
import io
import json

import numpy as np
import pytest

from delaylab.cli import (
    EXIT_INVALID, EXIT_NUMERICAL, EXIT_OK, EXIT_VIOLATION, SWEEP_COLUMNS, args_to_overrides, build_parser, main
)
from delaylab.config_models import ConfigurationError


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def csv_rows(text):
    return list(csv.reader(io.StringIO(text)))


class TestOverrides:
    def parse(self, *argv):
        return args_to_overrides(build_parser().parse_args(list(argv)))

    def test_single_orbit_flags(self):
        overrides = self.parse("simulate", "--p", "0.3", "--m", "2", "--init", "1,1.5,2", "--steps", "10")
        assert overrides['p'] == 0.3
        assert overrides['A'] is None and overrides['B'] is None
        assert overrides['m'] == 2
        assert overrides['init'] == {'values': [1.0, 1.5, 2.0], 'random': None}
        assert overrides['steps'] == 10
        assert 'sweep' not in overrides

    def test_random_init(self):
        overrides = self.parse("simulate", "--p", "0.3", "--m", "1", "--init-random", "--init-low", "1",
                               "--seed", "11")
        assert overrides['init'] == {'values': None, 'random': {'low': 1.0}, 'seed': 11}

    def test_sweep_flags_go_to_grid(self):
        overrides = self.parse("sweep", "--p-min", "0.1", "--p-max", "0.2", "--m", "1,3", "--seed", "4",
                               "--steps", "100", "--init-high", "3")
        assert overrides['sweep'] == {'m_values': [1, 3], 'p_min': 0.1, 'p_max': 0.2, 'seed': 4, 'steps': 100,
                                      'init': {'high': 3.0}}
        assert 'steps' not in overrides

    def test_sections_only_when_given(self):
        overrides = self.parse("roots", "--p", "0.3", "--m", "1")
        assert set(overrides) == {'mode', 'p', 'A', 'B', 'm'}

    def test_logging_and_output(self):
        overrides = self.parse("roots", "--p", "0.3", "--m", "1", "--log-level", "debug", "--no-color",
                               "--out", "roots.json", "--format", "json")
        assert overrides['logging'] == {'level': 'debug', 'color': False}
        assert overrides['output'] == {'path': 'roots.json', 'format': 'json'}

    @pytest.mark.parametrize("argv", [
        ("simulate", "--p", "0.3", "--A", "1", "--B", "0.3", "--m", "1"),
        ("simulate", "--p", "0.3", "--m", "1", "--init", "1,1", "--init-random"),
        ("simulate", "--p", "0.3", "--m", "1,2"),
    ])
    def test_contradictions_rejected(self, argv):
        with pytest.raises(ConfigurationError):
            self.parse(*argv)


class TestSimulate:
    def test_trajectory_csv(self, capsys):
        code, out, _ = run_cli(capsys, "simulate", "--p", "0.3", "--m", "2", "--init", "1,1,1", "--steps", "100")
        assert code == EXIT_OK
        rows = csv_rows(out)
        assert rows[0] == ['n', 'y']
        assert len(rows) == 1 + 103
        assert [row[0] for row in rows[1:4]] == ['-2', '-1', '0']
        assert float(rows[4][1]) == pytest.approx(1.3)

    def test_unnormalized_form_writes_both_coordinates(self, capsys):
        code, out, _ = run_cli(capsys, "simulate", "--A", "2", "--B", "2", "--m", "1", "--init", "2,2",
                               "--steps", "5")
        assert code == EXIT_OK
        rows = csv_rows(out)
        assert rows[0] == ['n', 'x', 'y']
        assert len(rows) == 1 + 7
        # x = 2, p = 1/2: x_1 = 2 + 2 * 2 / 4 = 3
        assert float(rows[3][1]) == pytest.approx(3.0)
        assert float(rows[3][2]) == pytest.approx(1.5)

    def test_json_output_and_report(self, capsys, tmp_path):
        report = tmp_path / "summary.json"
        out_file = tmp_path / "orbit.json"
        code, out, _ = run_cli(capsys, "simulate", "--p", "0.3", "--m", "1", "--init", "1,2", "--steps", "20",
                               "--format", "json", "--out", str(out_file), "--report", str(report))
        assert code == EXIT_OK
        assert out == ""
        orbit = json.loads(out_file.read_text(encoding="utf-8"))
        assert orbit['indices'][0] == -1
        assert len(orbit['values']) == 22
        summary = json.loads(report.read_text(encoding="utf-8"))
        assert summary['config']['schema'] == 1
        assert summary['trajectory']['status'] == "completed"

    def test_guard_trip_exits_two(self, capsys):
        code, out, _ = run_cli(capsys, "simulate", "--p", "1e6", "--m", "1", "--init", "0.001,0.001",
                               "--steps", "10", "--overflow-bound", "1e8")
        assert code == EXIT_NUMERICAL
        assert csv_rows(out)[0] == ['n', 'y']

    def test_seeded_random_init_reproducible(self, capsys):
        argv = ("simulate", "--p", "0.4", "--m", "3", "--init-random", "--seed", "8", "--steps", "50")
        first = run_cli(capsys, *argv)
        second = run_cli(capsys, *argv)
        assert first[0] == EXIT_OK
        assert first[1] == second[1]

    def test_log_file(self, capsys, tmp_path):
        code, _, _ = run_cli(capsys, "simulate", "--p", "0.3", "--m", "1", "--init", "1,1", "--steps", "5",
                             "--log-dir", str(tmp_path), "--no-color")
        assert code == EXIT_OK
        assert (tmp_path / "delaylab.log").exists()


class TestInvalidInput:
    @pytest.mark.parametrize("argv", [
        ("dance",),
        ("simulate", "--p", "0.3", "--m", "1"),
        ("simulate", "--p", "0.3", "--m", "2", "--init", "1,1"),
        ("simulate", "--p", "-1", "--m", "1", "--init", "1,1"),
        ("simulate", "--p", "0.3", "--A", "1", "--B", "1", "--m", "1", "--init", "1,1"),
        ("envelope", "--p", "1.5", "--m", "1", "--init", "1,1"),
        # y_0 < 1 needs y_1..y_{m+1} to match the envelope, two steps give only y_1, y_2
        ("envelope", "--p", "0.5", "--m", "2", "--init", "2,2,0.5", "--steps", "2"),
        ("sweep", "--p-min", "0.1", "--p-max", "0.2"),
        ("roots", "--p", "0.3", "--m", "1", "--log-level", "LOUD"),
    ])
    def test_exit_one(self, capsys, argv):
        code, out, _ = run_cli(capsys, *argv)
        assert code == EXIT_INVALID
        assert out == ""

    def test_missing_run_file(self, capsys, tmp_path):
        code, _, _ = run_cli(capsys, "roots", "--config", str(tmp_path / "missing.yaml"))
        assert code == EXIT_INVALID


class TestRoots:
    def test_json_report(self, capsys):
        code, out, _ = run_cli(capsys, "roots", "--p", "0.3", "--m", "1")
        assert code == EXIT_OK
        report = json.loads(out)
        assert report['classification'] == "locally_stable"
        assert report['clark_holds'] is True
        assert len(report['roots']) == 2
        assert report['companion_spectral_radius'] == pytest.approx(report['spectral_radius'], abs=1e-6)
        assert report['polynomial'][0] == 1.0
        assert report['companion_method'] == "orthogonal_iteration"

    def test_unstable(self, capsys):
        code, out, _ = run_cli(capsys, "roots", "--p", "6", "--m", "1")
        assert code == EXIT_OK
        report = json.loads(out)
        assert report['classification'] == "unstable"
        assert report['clark_sum'] == pytest.approx(2.0)

    def test_clark_boundary_is_marginal(self, capsys):
        code, out, _ = run_cli(capsys, "roots", "--p", "0.75", "--m", "1")
        assert code == EXIT_OK
        report = json.loads(out)
        assert report['classification'] == "marginal"
        assert report['clark_sum'] == pytest.approx(1.0, abs=1e-12)
        assert report['clark_holds'] is False
        assert report['spectral_radius'] == pytest.approx(1.0, abs=1e-9)
        assert len(report['roots']) == 2

    def test_nearly_tied_moduli(self, capsys):
        code, out, _ = run_cli(capsys, "roots", "--p", "1e-6", "--m", "8")
        assert code == EXIT_OK
        report = json.loads(out)
        assert report['classification'] == "locally_stable"
        assert len(report['roots']) == 9
        assert report['companion_method'] == "eigvals"
        assert report['companion_spectral_radius'] == pytest.approx(report['spectral_radius'], abs=1e-9)

    def test_csv_roots(self, capsys):
        code, out, _ = run_cli(capsys, "roots", "--p", "0.5", "--m", "3", "--format", "csv")
        assert code == EXIT_OK
        rows = csv_rows(out)
        assert rows[0] == ['re', 'im', 'modulus', 'residual']
        assert len(rows) == 1 + 4

    def test_run_file(self, capsys, tmp_path):
        run_file = tmp_path / "roots.yaml"
        run_file.write_text("schema: 1\nmode: roots\np: 0.3\nm: 2\n", encoding="utf-8")
        code, out, _ = run_cli(capsys, "roots", "--config", str(run_file), "--m", "1")
        assert code == EXIT_OK
        report = json.loads(out)
        assert report['m'] == 1
        assert report['config']['p'] == 0.3


class TestOrbitAnalyses:
    def test_envelope_csv(self, capsys):
        code, out, _ = run_cli(capsys, "envelope", "--p", "0.5", "--m", "1", "--init", "1.2,3", "--steps", "60")
        assert code == EXIT_OK
        rows = csv_rows(out)
        assert rows[0] == ['n', 'y', 'u', 'u_closed']
        for row in rows[1:]:
            y, u, u_closed = (float(v) for v in row[1:])
            assert 1.0 < y <= u * (1 + 1e-12)
            assert u == pytest.approx(u_closed, abs=1e-9)

    def test_analyze_report_has_no_violations(self, capsys):
        code, out, _ = run_cli(capsys, "analyze", "--p", "0.3", "--m", "1", "--init", "1.5,2.5",
                               "--steps", "400")
        assert code == EXIT_OK
        report = json.loads(out)
        assert report['violations'] == []
        assert report['semicycles']['holds'] is True
        assert report['alternation']['applicable'] is True
        assert report['envelope']['holds'] is True
        assert report['error_identity_max_residual'] <= 1e-12
        assert report['period']['period'] == 1

    def test_broken_identity_exits_three(self, capsys, monkeypatch):
        monkeypatch.setattr("delaylab.cli.error_recurrence_residuals", lambda *args, **kwargs: np.array([1e-6]))
        code, out, _ = run_cli(capsys, "analyze", "--p", "0.3", "--m", "1", "--init", "1.5,2.5",
                               "--steps", "400")
        assert code == EXIT_VIOLATION
        report = json.loads(out)
        assert report['error_identity_max_residual'] == 1e-6
        assert len(report['violations']) == 1
        assert report['violations'][0].startswith("Error identity residual")

    def test_analyze_reports_rate_method(self, capsys):
        code, out, _ = run_cli(capsys, "analyze", "--p", "0.3", "--m", "2", "--init", "1,2,3", "--steps", "400")
        assert code == EXIT_OK
        rate = json.loads(out)['rate']
        assert rate['method'] == "envelope_fit"
        assert rate['nth_root_estimate'] == rate['fitted_rate']
        assert rate['nth_root_estimate'] == pytest.approx(rate['dominant_modulus'], abs=1e-2)

    def test_analyze_even_delay_skips_alternation(self, capsys):
        code, out, _ = run_cli(capsys, "analyze", "--p", "0.4", "--m", "2", "--init", "1,2,3", "--steps", "300")
        assert code == EXIT_OK
        report = json.loads(out)
        assert report['alternation'] == {'applicable': False}
        assert report['two_cycle']['odd_system'] is False


class TestSweep:
    ARGV = ("sweep", "--p-min", "0.1", "--p-max", "0.3", "--p-steps", "2", "--m", "1,2", "--trials", "3",
            "--seed", "5", "--steps", "1000")

    def test_sweep_csv(self, capsys):
        code, out, _ = run_cli(capsys, *self.ARGV)
        assert code == EXIT_OK
        rows = csv_rows(out)
        assert rows[0] == SWEEP_COLUMNS
        assert [(float(row[0]), int(row[1])) for row in rows[1:]] == [(0.1, 1), (0.1, 2), (0.3, 1), (0.3, 2)]
        assert all(row[2] == '3' for row in rows[1:])

    def test_rerun_is_byte_identical(self, capsys):
        first = run_cli(capsys, *self.ARGV)
        second = run_cli(capsys, *self.ARGV)
        assert first[1] == second[1]

    def test_conjecture_records_without_asserting(self, capsys):
        code, out, _ = run_cli(capsys, "conjecture", "--seed", "1", "--trials", "2", "--steps", "500",
                               "--m", "1", "--format", "json")
        assert code == EXIT_OK
        cells = json.loads(out)['cells']
        assert [cell['p'] for cell in cells] == pytest.approx([0.50, 0.55, 0.60, 0.65, 0.70])
