"""Config parsing, experiment drivers, and the command-line interface."""

import subprocess
import sys

import numpy as np
import pytest

from enskog import cli
from enskog.config import (
    ConfigError,
    parse_config,
    serialize_config,
)
from enskog.experiments import read_keyvals

BASE = """
[run]
n = 40
t_end = 0.4
seed = 3 4
checkpoints = 0 0.2 0.4

[kernel]
form = maxwellian
theta_min = 0.2
rho = 5.0

[initial]
law = gaussian
position_scale = 0.8

[experiment]
ps = 2 4
"""


def write_config(tmp_path, text=BASE, name="config.ini"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


class TestParsing:
    def test_round_trip_identity(self):
        cfg = parse_config(BASE)
        text = serialize_config(cfg)
        cfg2 = parse_config(text)
        assert cfg2 == cfg
        assert serialize_config(cfg2) == text

    def test_gamma_out_of_range_names_constraint(self):
        bad = BASE.replace("form = maxwellian", "form = power-law\ngamma = 3")
        with pytest.raises(ConfigError) as err:
            parse_config(bad)
        assert any("(-1, 2]" in v for v in err.value.violations)

    def test_missing_seed_lists_key(self):
        bad = BASE.replace("seed = 3 4\n", "")
        with pytest.raises(ConfigError) as err:
            parse_config(bad)
        assert any("run.seed" in v for v in err.value.violations)

    def test_all_violations_reported_at_once(self):
        bad = "\n".join(
            [
                "[run]",
                "n = 0",
                "t_end = -1",
                "[kernel]",
                "form = power-law",
                "gamma = 3",
                "nu = 5",
                "[experiment]",
                "kind = nonsense",
            ]
        )
        with pytest.raises(ConfigError) as err:
            parse_config(bad)
        text = "\n".join(err.value.violations)
        for frag in ["run.n", "run.t_end", "run.seed", "kernel.gamma",
                     "kernel.nu", "experiment.kind"]:
            assert frag in text, frag
        assert len(err.value.violations) >= 6

    def test_unparseable_not_a_number(self):
        bad = BASE.replace("t_end = 0.4", "t_end = soon")
        with pytest.raises(ConfigError) as err:
            parse_config(bad)
        assert any("run.t_end" in v and "float" in v for v in err.value.violations)

    def test_checkpoints_must_fit_horizon(self):
        bad = BASE.replace("checkpoints = 0 0.2 0.4", "checkpoints = 0 2.0")
        with pytest.raises(ConfigError) as err:
            parse_config(bad)
        assert any("checkpoints" in v for v in err.value.violations)

    def test_envelope_requires_regime(self):
        bad = BASE.replace("ps = 2 4", "kind = envelope\nps = 4")
        with pytest.raises(ConfigError) as err:
            parse_config(bad)
        assert any("regime" in v for v in err.value.violations)

    def test_env_overrides_file(self):
        cfg = parse_config(BASE, env={"ENSKOG_RUN_N": "77",
                                      "ENSKOG_KERNEL_THETA_MIN": "0.3",
                                      "UNRELATED": "1"})
        assert cfg.n == 77
        assert cfg.kernels.angular.theta_min == 0.3

    def test_env_values_are_validated(self):
        with pytest.raises(ConfigError):
            parse_config(BASE, env={"ENSKOG_KERNEL_GAMMA": "7"})

    def test_sim_config_expansion(self):
        cfg = parse_config(BASE)
        sim = cfg.sim_config(n=99, seed=12)
        assert sim.n == 99 and sim.seed == 12
        assert sim.checkpoints == (0.0, 0.2, 0.4)
        default = cfg.sim_config()
        assert default.n == 40 and default.seed == 3


class TestRunDirectory:
    def run_once(self, tmp_path, out="out"):
        path = write_config(tmp_path)
        code = cli.main(["run", "--config", path, "--out", str(tmp_path / out)])
        return code, tmp_path / out

    def test_exit_zero_and_files(self, tmp_path):
        code, out = self.run_once(tmp_path)
        assert code == 0
        for name in ["config.ini", "manifest.txt", "events.tsv",
                     "moments.tsv", "audit.txt"]:
            assert (out / name).exists(), name
        snaps = sorted(out.glob("snapshot_*.tsv"))
        assert len(snaps) == 3

    def test_event_log_format(self, tmp_path):
        _, out = self.run_once(tmp_path)
        lines = (out / "events.tsv").read_text().splitlines()
        assert lines[0] == "time\tk\tj\ttheta\tz\taccepted"
        first = lines[1].split("\t")
        assert len(first) == 6
        float(first[0]), int(first[1]), int(first[2])
        assert first[5] in {"0", "1"}
        times = [float(ln.split("\t")[0]) for ln in lines[1:]]
        assert times == sorted(times)

    def test_snapshot_header_names_d_and_n(self, tmp_path):
        _, out = self.run_once(tmp_path)
        lines = (out / "snapshot_000.tsv").read_text().splitlines()
        assert "d = 3" in lines[0] and "n = 40" in lines[0]
        assert lines[1].split("\t") == ["r0", "r1", "r2", "v0", "v1", "v2"]
        assert len(lines) == 2 + 40
        row = np.array([float(x) for x in lines[2].split("\t")])
        assert row.shape == (6,)

    def test_moments_long_format(self, tmp_path):
        _, out = self.run_once(tmp_path)
        lines = (out / "moments.tsv").read_text().splitlines()
        assert lines[0] == "t\tp\tvalue"
        body = [ln.split("\t") for ln in lines[1:]]
        assert len(body) == 2 * 3
        ps = sorted({float(b[1]) for b in body})
        assert ps == [2.0, 4.0]

    def test_residual_series_per_run(self, tmp_path):
        _, out = self.run_once(tmp_path)
        lines = (out / "residual_series.tsv").read_text().splitlines()
        assert lines[0] == "t\tpsi\tvalue"
        body = [ln.split("\t") for ln in lines[1:]]
        assert len(body) == 3
        assert body[0][1] == "bump"
        assert float(body[0][2]) == 0.0
        assert all(abs(float(b[2])) < 1.0 for b in body)

    def test_manifest_contents(self, tmp_path):
        _, out = self.run_once(tmp_path)
        vals = read_keyvals(out / "manifest.txt")
        assert set(vals) == {"config_sha256", "code_version", "n", "seed"}
        assert len(vals["config_sha256"]) == 64
        assert vals["n"] == "40" and vals["seed"] == "3"

    def test_rerun_is_byte_identical(self, tmp_path):
        _, out1 = self.run_once(tmp_path, out="first")
        path = write_config(tmp_path)
        cli.main(["run", "--config", path, "--out", str(tmp_path / "first2")])
        a = sorted(p for p in (tmp_path / "first").iterdir())
        b = sorted(p for p in (tmp_path / "first2").iterdir())
        assert [p.name for p in a] == [p.name for p in b]
        for pa, pb in zip(a, b):
            assert pa.read_bytes() == pb.read_bytes(), pa.name

    def test_seed_flag_overrides_config(self, tmp_path):
        path = write_config(tmp_path)
        cli.main(["run", "--config", path, "--seed", "11",
                  "--out", str(tmp_path / "s")])
        vals = read_keyvals(tmp_path / "s" / "manifest.txt")
        assert vals["seed"] == "11"

    def test_bad_config_exits_two(self, tmp_path, capsys):
        path = write_config(tmp_path, BASE.replace("seed = 3 4\n", ""))
        code = cli.main(["run", "--config", path, "--out", str(tmp_path / "x")])
        assert code == 2
        assert "run.seed" in capsys.readouterr().err

    def test_missing_config_exits_two(self, tmp_path, capsys):
        code = cli.main(["run", "--config", str(tmp_path / "nope.ini")])
        assert code == 2


class TestSweepAndDiagnostics:
    def test_sweep_grid_directories(self, tmp_path):
        text = BASE.replace("[experiment]", "[experiment]\nns = 20 40")
        path = write_config(tmp_path, text)
        out = tmp_path / "sw"
        code = cli.main(["sweep", "--config", path, "--out", str(out)])
        assert code == 0
        cells = sorted(p.name for p in out.iterdir() if p.is_dir())
        assert cells == ["n20-seed3", "n20-seed4", "n40-seed3", "n40-seed4"]
        for cell in cells:
            assert (out / cell / "audit.txt").exists()

    def test_sweep_jobs_matches_serial(self, tmp_path):
        text = BASE.replace("[experiment]", "[experiment]\nns = 20 40")
        path = write_config(tmp_path, text)
        cli.main(["sweep", "--config", path, "--out", str(tmp_path / "s1")])
        cli.main(["sweep", "--config", path, "--out", str(tmp_path / "s2"),
                  "--jobs", "2"])
        for cell in ["n20-seed3", "n40-seed4"]:
            a = (tmp_path / "s1" / cell / "events.tsv").read_bytes()
            b = (tmp_path / "s2" / cell / "events.tsv").read_bytes()
            assert a == b

    def test_residual_outputs(self, tmp_path):
        text = BASE.replace("[experiment]", "[experiment]\nns = 20 30 40")
        path = write_config(tmp_path, text)
        out = tmp_path / "res"
        code = cli.main(["residual", "--config", path, "--out", str(out)])
        assert code == 0
        rows = (out / "residuals.tsv").read_text().splitlines()
        assert rows[0] == "n\tseed\tresidual"
        assert len(rows) == 1 + 3 * 2
        vals = read_keyvals(out / "residual_summary.txt")
        assert "slope" in vals and "var_n20" in vals

    def test_chaos_outputs(self, tmp_path):
        text = BASE.replace("[experiment]", "[experiment]\nns = 20 60")
        path = write_config(tmp_path, text)
        out = tmp_path / "ch"
        code = cli.main(["chaos", "--config", path, "--out", str(out)])
        assert code == 0
        vals = read_keyvals(out / "chaos_summary.txt")
        assert "mean_n20" in vals and "mean_n60" in vals
        assert vals["monotone"] in {"0", "1"}

    def test_povzner_outputs(self, tmp_path):
        text = BASE.replace("ps = 2 4", "ps = 2 3\nsamples = 500")
        path = write_config(tmp_path, text)
        out = tmp_path / "pov"
        code = cli.main(["povzner", "--config", path, "--out", str(out)])
        assert code == 0
        assert (out / "povzner_p2.txt").exists()
        assert (out / "povzner_p3.txt").exists()
        vals = read_keyvals(out / "povzner_summary.txt")
        assert vals["all_ok"] == "1"

    def test_envelope_outputs(self, tmp_path):
        text = BASE.replace(
            "[experiment]\nps = 2 4",
            "[experiment]\nkind = envelope\nps = 4\nregime = soft-exponential",
        ).replace("seed = 3 4", "seed = 3 4 5 6")
        path = write_config(tmp_path, text)
        out = tmp_path / "env"
        code = cli.main(["envelope", "--config", path, "--out", str(out)])
        assert code == 0
        vals = read_keyvals(out / "envelope_summary.txt")
        assert vals["total_violations"] == "0"
        body = (out / "envelope.tsv").read_text().splitlines()
        assert body[0] == "p\tseed\trole\tt\tmoment\tbound"
        roles = {ln.split("\t")[2] for ln in body[1:]}
        assert roles == {"calibration", "validation"}


class TestReport:
    def test_report_aggregates_and_passes(self, tmp_path, capsys):
        path = write_config(tmp_path)
        cli.main(["run", "--config", path, "--out", str(tmp_path / "r1")])
        code = cli.main(["report", str(tmp_path)])
        out = capsys.readouterr().out
        assert code == 0
        assert "PASS conservation" in out
        assert "hard_invariants = PASS" in out
        assert (tmp_path / "report.txt").exists()

    def test_report_flags_failed_audit(self, tmp_path, capsys):
        path = write_config(tmp_path)
        cli.main(["run", "--config", path, "--out", str(tmp_path / "r1")])
        audit = tmp_path / "r1" / "audit.txt"
        audit.write_text(audit.read_text().replace("status = PASS",
                                                   "status = FAIL"))
        code = cli.main(["report", str(tmp_path)])
        out = capsys.readouterr().out
        assert code == 1
        assert "FAIL conservation" in out
        assert "hard_invariants = FAIL" in out

    def test_report_flags_breach_marker(self, tmp_path, capsys):
        (tmp_path / "bad").mkdir()
        (tmp_path / "bad" / "breach.txt").write_text(
            "status = FAIL\nreason = rate majorant exceeded\n"
        )
        code = cli.main(["report", str(tmp_path)])
        assert code == 1
        assert "FAIL majorant" in capsys.readouterr().out

    def test_report_empty_directory_fails(self, tmp_path, capsys):
        code = cli.main(["report", str(tmp_path)])
        assert code == 1
        assert "no run artifacts" in capsys.readouterr().out

    def test_report_missing_directory_is_usage_error(self, tmp_path, capsys):
        code = cli.main(["report", str(tmp_path / "nope")])
        assert code == 2
        assert "nope" in capsys.readouterr().err


class TestEntryPoint:
    def test_module_help(self):
        proc = subprocess.run(
            [sys.executable, "-m", "enskog.cli", "--help"],
            capture_output=True, text=True,
        )
        assert proc.returncode == 0
        for name in ["run", "sweep", "residual", "povzner", "chaos",
                     "envelope", "report"]:
            assert name in proc.stdout
