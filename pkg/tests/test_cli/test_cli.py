import json

import pytest
from typer.testing import CliRunner

from twistred import __version__
from twistred.cli import app

runner = CliRunner()


@pytest.mark.unit
class TestBasic:
    def test_version(self):
        result = runner.invoke(app, ["--version"])
        assert result.exit_code == 0, result.output
        assert __version__ in result.output

    def test_no_command_prints_help(self):
        result = runner.invoke(app, [])
        assert result.exit_code == 0, result.output
        assert "run" in result.output

    def test_bad_config(self, tmp_path):
        result = runner.invoke(app, ["--config", str(tmp_path / "absent.toml"), "list", "-q"])
        assert result.exit_code == 1, result.output

    def test_env_file(self, tmp_path):
        path = tmp_path / ".env"
        path.write_text("TWISTRED_THREADS=2\n")
        result = runner.invoke(app, ["--env-file", str(path), "list", "-q"])
        assert result.exit_code == 0, result.output


@pytest.mark.unit
class TestScenarios:
    def test_list(self):
        result = runner.invoke(app, ["list"])
        assert result.exit_code == 0, result.output
        assert "cp3" in result.output

    def test_list_quiet(self):
        result = runner.invoke(app, ["list", "-q"])
        assert result.exit_code == 0, result.output
        names = result.output.split()
        assert names == sorted(names)
        assert {"cp3", "cp7", "hirzebruch-m1", "veronese-2"} <= set(names)

    def test_show(self):
        result = runner.invoke(app, ["show", "cp3-llt"])
        assert result.exit_code == 0, result.output
        assert "cp3-llt" in result.output

    def test_show_unknown(self):
        result = runner.invoke(app, ["show", "nowhere"])
        assert result.exit_code == 1, result.output

    def test_run_unknown(self):
        result = runner.invoke(app, ["run", "nowhere"])
        assert result.exit_code == 1, result.output

    def test_run_invalid_file(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text('{"name": "broken", "N": 3}')
        result = runner.invoke(app, ["run", str(path)])
        assert result.exit_code == 1, result.output

    def test_run_irregular_level(self, tmp_path):
        path = tmp_path / "wall.json"
        scenario = {
            "name": "wall",
            "N": 6,
            "charges": [[1, 1, 1, 0, 0, 1], [0, 0, 1, 1, 0, -2], [0, 0, 0, 0, 1, 1]],
            "level": [2.0, 0.0, 1.0],
            "twist": {"type": "hirzebruch", "n": 1},
        }
        path.write_text(json.dumps(scenario))
        result = runner.invoke(app, ["run", str(path)])
        assert result.exit_code == 2, result.output
        assert "level: stopped" in result.output


@pytest.mark.slow
class TestRun:
    def test_cp3_passes(self, tmp_path):
        out = tmp_path / "reports" / "cp3.json"
        log = tmp_path / "cp3.log"
        result = runner.invoke(
            app, ["run", "cp3", "--points", "5", "--out", str(out), "--log-file", str(log)]
        )
        assert result.exit_code == 0, result.output
        report = json.loads(out.read_text())
        assert report["passed"] is True
        assert "wall_time" not in report
        assert report["environment"]["seed"] == 0
        assert "Running scenario cp3" in log.read_text()

    def test_report_is_reproducible(self, tmp_path):
        first, second = tmp_path / "a.json", tmp_path / "b.json"
        for out in (first, second):
            result = runner.invoke(app, ["run", "hirzebruch-0", "--points", "3", "--out", str(out)])
            assert result.exit_code == 0, result.output
        assert first.read_text() == second.read_text()

    def test_singular_matrix_fails(self):
        result = runner.invoke(app, ["run", "cp3-singular"])
        assert result.exit_code == 2, result.output

    def test_bad_charge_fails(self, tmp_path):
        out = tmp_path / "bad.json"
        result = runner.invoke(app, ["run", "cp7-bad-charge", "--out", str(out)])
        assert result.exit_code == 2, result.output
        report = json.loads(out.read_text())
        failing = [e["name"] for e in report["entries"] if e["kind"] == "check" and not e["passed"]]
        assert "charge-sum precondition" in failing

    def test_audit(self):
        result = runner.invoke(app, ["audit", "cp7", "--seed", "3"])
        assert result.exit_code == 0, result.output
        assert '"passed": true' in result.output
