"""CLI harness: config parsing, artifacts, exit codes, determinism."""

import json

import pytest

from fxtsopt.cli import EXIT_CONFIG, EXIT_FAIL, EXIT_PASS, main

FAST_SPHERE = """
[scenario]
name = sphere

[gains]
alpha = 5
beta = 5
p = 0.5
q = 1.5

[integration]
step = 1e-3
t_end = 2.0
"""


def write_cfg(tmp_path, text, name="run.cfg"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


class TestConfigErrors:
    def test_missing_file(self, tmp_path, capsys):
        assert main(["run", "--config", str(tmp_path / "nope.cfg")]) == EXIT_CONFIG
        assert "configuration error" in capsys.readouterr().err

    def test_unknown_gain_key(self, tmp_path, capsys):
        cfg = write_cfg(tmp_path, FAST_SPHERE + "alfa = 5\n")
        assert main(["run", "--config", cfg]) == EXIT_CONFIG
        assert "alfa" in capsys.readouterr().err

    def test_unknown_section(self, tmp_path):
        cfg = write_cfg(tmp_path, FAST_SPHERE + "\n[solver]\nkind = rk4\n")
        assert main(["run", "--config", cfg]) == EXIT_CONFIG

    def test_unknown_scenario(self, tmp_path):
        cfg = write_cfg(tmp_path, "[scenario]\nname = rosenbrock\n")
        assert main(["run", "--config", cfg]) == EXIT_CONFIG

    def test_missing_scenario_section(self, tmp_path):
        cfg = write_cfg(tmp_path, "[gains]\nalpha = 5\n")
        assert main(["run", "--config", cfg]) == EXIT_CONFIG

    def test_usage_error_exit_code(self):
        with pytest.raises(SystemExit) as exc:
            main(["frobnicate", "--config", "x"])
        assert exc.value.code == 2


class TestRun:
    def test_artifacts_and_exit(self, tmp_path, capsys):
        cfg = write_cfg(tmp_path, FAST_SPHERE)
        out = tmp_path / "out"
        assert main(["run", "--config", cfg, "--out", str(out)]) == EXIT_PASS
        assert (out / "trace.csv").exists()
        report = json.loads((out / "report.json").read_text())
        assert report["passed"] is True
        assert report["scenario"] == "sphere"
        assert "pass" in capsys.readouterr().out

    def test_bounds_recomputed_from_gains(self, tmp_path):
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        cfg_a = write_cfg(tmp_path, FAST_SPHERE, "a.cfg")
        cfg_b = write_cfg(tmp_path, FAST_SPHERE.replace("alpha = 5", "alpha = 10"), "b.cfg")
        main(["run", "--config", cfg_a, "--out", str(out_a)])
        main(["run", "--config", cfg_b, "--out", str(out_b)])
        t_a = json.loads((out_a / "report.json").read_text())["bounds"]["T_c"]
        t_b = json.loads((out_b / "report.json").read_text())["bounds"]["T_c"]
        assert t_a == pytest.approx(1.6)
        assert t_b == pytest.approx(0.8 + 2.0 / (10.0 * 0.5))

    def test_step_override(self, tmp_path):
        cfg = write_cfg(tmp_path, FAST_SPHERE)
        out = tmp_path / "out"
        main(["run", "--config", cfg, "--out", str(out), "--step", "5e-3"])
        trace = (out / "trace.csv").read_text().splitlines()
        t1 = float(trace[2].split(",")[0]) - float(trace[1].split(",")[0])
        assert t1 == pytest.approx(5e-2)  # step * default record_stride 10

    def test_trace_determinism(self, tmp_path):
        cfg = write_cfg(tmp_path, FAST_SPHERE)
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        main(["run", "--config", cfg, "--out", str(out_a)])
        main(["run", "--config", cfg, "--out", str(out_b)])
        assert (out_a / "trace.csv").read_bytes() == (out_b / "trace.csv").read_bytes()

    def test_plot_flag_writes_figures(self, tmp_path):
        cfg = write_cfg(tmp_path, FAST_SPHERE)
        out = tmp_path / "out"
        main(["run", "--config", cfg, "--out", str(out), "--plot"])
        assert (out / "residuals.png").exists()
        assert (out / "objective.png").exists()


class TestSweep:
    def test_sweep_artifacts(self, tmp_path):
        cfg = write_cfg(tmp_path, FAST_SPHERE)
        out = tmp_path / "out"
        code = main(["sweep", "--config", cfg, "--out", str(out),
                     "--count", "6", "--seed", "3"])
        assert code == EXIT_PASS
        assert (out / "sweep.csv").exists()
        report = json.loads((out / "report.json").read_text())
        assert report["count"] == 6
        assert report["max_reach_time"] <= report["bounds"]["T_c"]

    def test_sweep_deterministic_for_seed(self, tmp_path):
        cfg = write_cfg(tmp_path, FAST_SPHERE)
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        for out in (out_a, out_b):
            main(["sweep", "--config", cfg, "--out", str(out), "--count", "4", "--seed", "9"])
        assert (out_a / "sweep.csv").read_bytes() == (out_b / "sweep.csv").read_bytes()


class TestCompare:
    def test_compare_artifacts(self, tmp_path):
        cfg = write_cfg(tmp_path, FAST_SPHERE)
        out = tmp_path / "out"
        code = main(["compare", "--config", cfg, "--out", str(out)])
        assert code in (EXIT_PASS, EXIT_FAIL)
        header = (out / "compare.csv").read_text().splitlines()[0]
        assert header == "t,fxts_feas,fxts_stat,pgf_feas,pgf_stat"
        report = json.loads((out / "report.json").read_text())
        assert "fxts" in report and "pgf" in report


class TestAudit:
    def test_audit_passes_on_sphere(self, tmp_path):
        cfg = write_cfg(tmp_path, FAST_SPHERE)
        out = tmp_path / "out"
        assert main(["audit", "--config", cfg, "--out", str(out), "--count", "5"]) == EXIT_PASS
        lines = (out / "audit.csv").read_text().splitlines()
        assert lines[0] == "sample,grad_error,jac_error"
        assert len(lines) == 6
