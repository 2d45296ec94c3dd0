import csv
import json
import subprocess
import sys
from pathlib import Path

import pytest

from fockdyn.cli import EXIT_COMPUTE, EXIT_CONFIG, EXIT_OK, main
from fockdyn.config import ConfigError, ExperimentConfig, parse_config


def write(tmp_path: Path, body: str, name="exp.ini") -> Path:
    path = tmp_path / name
    path.write_text("[experiment]\nschema_version = 1\n" + body, encoding="utf-8")
    return path


def rows(path: Path) -> list[dict]:
    with path.open(newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def run(tmp_path, body, command, *extra, out="out"):
    cfg = write(tmp_path, body)
    code = main([command, "--config", str(cfg), "--out", str(tmp_path / out), *extra])
    return code, tmp_path / out


class TestConfig:
    def test_parse(self):
        cfg = parse_config("[experiment]\nschema_version = 1\noperator = V:0,0.3\np = 2, inf\nalpha = 0.5,1\nm = 1\nprobes = orbit, gelfand\n")
        assert cfg.p == (2.0, float("inf")) and cfg.alpha == (0.5, 1.0)
        assert cfg.probes == ("orbit", "gelfand")
        assert len(cfg.grid()) == 4

    @pytest.mark.parametrize(
        "text",
        [
            "[experiment]\np = 2\nalpha = 1\nm = 1\n",
            "[experiment]\nschema_version = 2\np = 2\nalpha = 1\nm = 1\n",
            "[experiment]\nschema_version = 1\np = 2\nalpha = 1\n",
            "[experiment]\nschema_version = 1\np = 2\nalpha = 1\nm = 1\ncolour = red\n",
            "[experiment]\nschema_version = 1\np = 2\nalpha = 1\nm = 1\nprobes = orbit, magic\n",
            "[experiment]\nschema_version = 1\np = 2\nalpha = -1\nm = 1\n",
            "[experiment]\nschema_version = 1\np = 2\nalpha = 1\nm = 1\noperator = Q\n",
            "[experiment]\nschema_version = 1\np = 2\nalpha = x\nm = 1\n",
            "[other]\nschema_version = 1\n",
            "no section here",
        ],
    )
    def test_errors(self, text):
        with pytest.raises(ConfigError):
            parse_config(text)

    def test_overrides(self):
        cfg = ExperimentConfig(p=(2.0,), alpha=(1.0,), m=(1.0,))
        assert cfg.with_overrides(nmax=7).norms_nmax == 7
        with pytest.raises(ConfigError):
            cfg.with_overrides(tol=0)


class TestExitCodes:
    def test_empty_grid(self, tmp_path, capsys):
        code, _ = run(tmp_path, "p =\nalpha = 1\nm = 1\n", "norms")
        assert code == EXIT_CONFIG
        assert "empty parameter grid" in capsys.readouterr().err

    def test_missing_config(self, tmp_path):
        assert main(["classify", "--config", str(tmp_path / "none.ini"), "--out", str(tmp_path)]) == EXIT_CONFIG

    def test_report_without_runs(self, tmp_path):
        assert main(["report", "--out", str(tmp_path)]) == EXIT_CONFIG

    def test_quadrature_failure(self, tmp_path):
        code, out = run(tmp_path, "p = 2\nalpha = 0.5\nm = 2\nnorms_nmax = 3\n", "norms", "--tol", "1e-300")
        assert code == EXIT_COMPUTE
        assert json.loads((out / "norms_summary.json").read_text())["status"] == "computational-failure"


class TestNorms:
    def test_classical_grid(self, tmp_path):
        code, out = run(tmp_path, "p = 2\nalpha = 0.5\nm = 2\nnorms_nmax = 60\n", "norms")
        assert code == EXIT_OK
        table = rows(out / "norms.csv")
        assert len(table) == 61
        assert max(float(r["rel_error"]) for r in table) < 1e-8
        assert all(r["certified"] == "true" for r in table)

    def test_sup_route(self, tmp_path):
        code, out = run(tmp_path, "p = inf\nalpha = 1\nm = 1\nnorms_nmax = 20\n", "norms")
        assert code == EXIT_OK
        table = rows(out / "norms.csv")
        assert {r["route"] for r in table} == {"grid-sup"}
        assert max(float(r["rel_error"]) for r in table) < 1e-4


class TestClassify:
    def test_differentiation_records(self, tmp_path):
        code, out = run(tmp_path, "operator = D\np = 2\nalpha = 0.5, 1, 1.5\nm = 1\n", "classify")
        assert code == EXIT_OK
        table = rows(out / "classify.csv")
        assert [r["hypercyclic"] for r in table] == ["false", "false", "true"]
        assert [r["power_bounded"] for r in table] == ["true", "not-covered", "false"]
        assert all(r["citations"] for r in table)

    def test_hardy_constant(self, tmp_path):
        code, out = run(tmp_path, "operator = H\np = 1, 2, 4\nalpha = 0.5, 2\nm = 0.5, 2\n", "classify")
        assert code == EXIT_OK
        table = rows(out / "classify.csv")
        assert len(table) == 12
        assert len({tuple(v for k, v in r.items() if k not in ("cell", "p", "alpha", "m")) for r in table}) == 1

    def test_unbounded_volterra(self, tmp_path):
        code, out = run(tmp_path, "operator = V:0,0,1\np = 2\nalpha = 1\nm = 1\n", "classify")
        r = rows(out / "classify.csv")[0]
        assert code == EXIT_OK and r["bounded"] == "false"
        assert all(r[k] == "not-covered" for k in ("hypercyclic", "cyclic", "power_bounded", "uniformly_mean_ergodic", "ritt"))


class TestProbe:
    def test_volterra_gelfand(self, tmp_path):
        code, out = run(tmp_path, "operator = V:0,0.3\np = 2\nalpha = 1\nm = 1\nprobes = gelfand\nnmax = 100\n", "probe")
        assert code == EXIT_OK
        summary = json.loads((out / "probe_summary.json").read_text())
        radius = summary["cells"][0]["probes"]["gelfand"]["extrapolated_radius"]
        assert 0.285 <= radius <= 0.315

    def test_hardy_ritt(self, tmp_path):
        code, out = run(tmp_path, "operator = H\np = 2\nalpha = 1\nm = 1\nprobes = ritt\nnmax = 50\n", "probe")
        assert code == EXIT_OK
        table = [r for r in rows(out / "probe_ritt.csv") if r["series"] == "ritt"]
        assert table and max(float(r["value"]) for r in table) <= 0.25
        summary = json.loads((out / "probe_summary.json").read_text())
        assert summary["cells"][0]["probes"]["ritt"]["verdict"] == "true"

    def test_differentiation_orbit_growing(self, tmp_path):
        code, out = run(tmp_path, "operator = D\np = 2\nalpha = 1.2\nm = 1\nprobes = orbit\nnmax = 50\n", "probe")
        assert code == EXIT_OK
        summary = json.loads((out / "probe_summary.json").read_text())
        assert summary["cells"][0]["probes"]["orbit"]["verdict"] == "growing"

    def test_crosscheck_and_report(self, tmp_path):
        body = "operator = D\np = 2\nalpha = 0.8\nm = 1\nprobes = orbit, crosscheck\nnmax = 40\n"
        code, out = run(tmp_path, body, "probe")
        assert code == EXIT_OK
        assert {r["status"] for r in rows(out / "probe_crosscheck.csv")} == {"AGREE"}
        assert main(["report", "--out", str(out)]) == EXIT_OK
        report = json.loads((out / "report.json").read_text())
        assert report["disagreements"] == 0 and report["commands"] == ["probe"]

    def test_skipped_probes_recorded(self, tmp_path):
        body = "operator = K:1,0.5,1\np = 2\nalpha = 1\nm = 1\nprobes = orbit, kbound\nnmax = 10\n"
        code, out = run(tmp_path, body, "probe")
        assert code == EXIT_OK
        probes = json.loads((out / "probe_summary.json").read_text())["cells"][0]["probes"]
        assert "skipped" in probes["orbit"] and "skipped" in probes["kbound"]

    def test_kbound(self, tmp_path):
        body = "operator = K:1,0.5,1\np = inf\nalpha = 1\nm = 1\nprobes = kbound\nsamples = 5\n"
        code, out = run(tmp_path, body, "probe")
        assert code == EXIT_OK
        probe = json.loads((out / "probe_summary.json").read_text())["cells"][0]["probes"]["kbound"]
        assert probe["within_bound"] and len(rows(out / "probe_kbound.csv")) == 5

    def test_every_row_has_certified_flag(self, tmp_path):
        body = "operator = J\np = 2\nalpha = 1\nm = 1, 2\nprobes = orbit, gelfand, cesaro, ritt, hypercyclicity\nnmax = 20\n"
        code, out = run(tmp_path, body, "probe")
        assert code == EXIT_OK
        for name in ("orbit", "gelfand", "cesaro", "ritt", "hypercyclicity"):
            table = rows(out / f"probe_{name}.csv")
            assert table and all(r["certified"] in ("true", "false") for r in table)


class TestDeterminism:
    BODY = "operator = V:0,1,1\np = 2\nalpha = 1, 1.5\nm = 2\nprobes = orbit, gelfand, cesaro, ritt, crosscheck\nnmax = 30\n"

    def test_repeat_and_jobs(self, tmp_path):
        assert run(tmp_path, self.BODY, "probe", out="a")[0] == EXIT_OK
        assert run(tmp_path, self.BODY, "probe", out="b")[0] == EXIT_OK
        assert run(tmp_path, self.BODY, "probe", "--jobs", "2", out="c")[0] == EXIT_OK
        names = sorted(p.name for p in (tmp_path / "a").iterdir())
        assert names == sorted(p.name for p in (tmp_path / "c").iterdir())
        for name in names:
            a = (tmp_path / "a" / name).read_bytes()
            assert a == (tmp_path / "b" / name).read_bytes() == (tmp_path / "c" / name).read_bytes()

    def test_module_entry_point(self, tmp_path):
        cfg = write(tmp_path, "operator = H\np = 2\nalpha = 1\nm = 1\n")
        proc = subprocess.run(
            [sys.executable, "-m", "fockdyn", "classify", "--config", str(cfg), "--out", str(tmp_path / "o")],
            capture_output=True,
            text=True,
        )
        assert proc.returncode == 0 and (tmp_path / "o" / "classify.csv").exists()
