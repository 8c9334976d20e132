import json
import math

import pytest
from pydantic import ValidationError

from twistred import __version__
from twistred.report_models import CheckEntry, EnvironmentStamp, VerificationReport

pytestmark = [pytest.mark.unit]


def make_report(*entries, wall_time=None) -> VerificationReport:
    return VerificationReport(
        scenario={"name": "demo"},
        entries=list(entries),
        environment=EnvironmentStamp(seed=7),
        wall_time=wall_time,
    )


class TestCheckEntry:
    def test_verdict(self):
        assert CheckEntry.check("a", 1e-12, 1e-10).passed
        assert not CheckEntry.check("a", 1e-9, 1e-10).passed

    def test_boundary_passes(self):
        assert CheckEntry.check("a", 1e-10, 1e-10).passed

    def test_nan_fails(self):
        assert not CheckEntry.check("a", math.nan, 1.0).passed

    def test_boolean(self):
        holds = CheckEntry.boolean("b", True, extra=1)
        assert holds.passed and holds.residual == 0.0
        assert holds.detail == {"extra": 1}
        assert not CheckEntry.boolean("b", False).passed

    def test_measure_has_no_verdict(self):
        m = CheckEntry.measure("m", 3.0, points=5, note="x")
        assert m.kind == "measure"
        assert m.passed is None
        assert m.residual == 3.0 and m.points == 5

    def test_check_needs_tolerance(self):
        with pytest.raises(ValidationError):
            CheckEntry(name="c", residual=0.1)


class TestVerificationReport:
    def test_passed_ignores_measures(self):
        report = make_report(CheckEntry.check("a", 0.0, 1e-10), CheckEntry.measure("m", 1e9))
        assert report.passed
        assert report.first_failure() is None

    def test_first_failure(self):
        report = make_report(
            CheckEntry.check("a", 0.0, 1e-10),
            CheckEntry.check("b", 1.0, 1e-10),
            CheckEntry.boolean("c", False),
        )
        assert not report.passed
        assert report.first_failure().name == "b"
        assert [e.name for e in report.failures()] == ["b", "c"]

    def test_add_and_get(self):
        report = make_report()
        report.add(CheckEntry.boolean("x", True))
        report.extend([CheckEntry.measure("y", 2.0)])
        assert report.get("y").residual == 2.0
        with pytest.raises(KeyError):
            report.get("z")

    def test_json_without_wall_time(self):
        data = json.loads(make_report(CheckEntry.check("a", 0.0, 1e-10)).to_json())
        assert "wall_time" not in data
        assert data["passed"] is True
        assert data["environment"]["version"] == __version__
        assert data["environment"]["precision"] == "complex128"

    def test_json_with_wall_time(self):
        data = json.loads(make_report(wall_time=1.5).to_json())
        assert data["wall_time"] == 1.5

    def test_json_is_deterministic(self):
        entry = CheckEntry.check("a", 1e-13, 1e-10, points=3, detail_b=1, detail_a=2)
        assert make_report(entry).to_json() == make_report(entry).to_json()

    def test_rejects_bad_version(self):
        with pytest.raises(ValidationError):
            EnvironmentStamp(seed=0, version="not a version")
