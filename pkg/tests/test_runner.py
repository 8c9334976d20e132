import pytest

from twistred.core.config import VerifierConfig
from twistred.runner import ScenarioRunner, run_audit, run_scenario
from twistred.scenario import parse_scenario, resolve_scenario

pytestmark = [pytest.mark.slow]


def failing(report):
    return [e.name for e in report.failures()]


class TestScenarios:
    def test_hirzebruch(self):
        report = run_scenario(resolve_scenario("hirzebruch-m1"), points=3)
        assert report.passed, failing(report)
        names = [e.name for e in report.entries]
        assert "charge-sum precondition" in names

    def test_cp3_lt(self):
        report = run_scenario(resolve_scenario("cp3-lt"), points=3)
        assert report.passed, failing(report)
        iff = report.get("lt: M* M = mu I iff W3 = W4 = W5 = 0")
        assert iff.detail["matrix_lt"] is True

    def test_cp7_collinearity_and_probe(self):
        report = run_scenario(resolve_scenario("cp7"), points=3)
        assert report.passed, failing(report)
        assert report.get("probe: limits differ").passed

    def test_nonorthogonal_fails_on_orthogonality(self):
        report = run_scenario(resolve_scenario("cp7-nonorthogonal"))
        assert not report.passed
        assert not report.get("orthogonality precondition").passed

    def test_singular_matrix_stops_invertibility(self):
        report = run_scenario(resolve_scenario("cp3-singular"))
        assert not report.get("invertibility precondition (matrix 0)").passed


WALL_SCENARIO = (
    '{"name": "hirzebruch-wall", "N": 6, "level": [2.0, 0.0, 1.0],'
    ' "charges": [[1, 1, 1, 0, 0, 1], [0, 0, 1, 1, 0, -2], [0, 0, 0, 0, 1, 1]],'
    ' "twist": {"type": "hirzebruch", "n": 1}}'
)


class TestFiniteDifferences:
    @pytest.mark.parametrize(
        "name, fields",
        [
            ("cp3", ["alpha", "dalpha", "omega", "Omega"]),
            ("hirzebruch-1", ["alpha", "dalpha", "omega", "Omega"]),
            ("cp7", ["beta0", "dbeta0", "beta1", "dbeta1", "omega", "Omega"]),
        ],
    )
    def test_every_scenario_field(self, name, fields):
        report = run_scenario(resolve_scenario(name), points=2)
        assert report.passed, failing(report)
        entries = [e for e in report.entries if e.name.startswith("finite differences: ")]
        assert [e.name.split(": ")[1] for e in entries] == fields
        for e in entries:
            assert e.tolerance == 1e-6
            assert e.points == 10
            assert e.detail["terms"] > 0


class TestIrregularLevel:
    def test_level_stage_stops(self):
        report = run_scenario(parse_scenario(WALL_SCENARIO))
        assert failing(report) == ["level: stopped"]
        assert "not a regular value" in report.get("level: stopped").detail["error"]
        assert not any(e.name.startswith("su:") for e in report.entries)

    def test_audit_stops_at_the_level(self):
        report = run_audit(parse_scenario(WALL_SCENARIO))
        assert failing(report) == ["level: stopped"]


class TestReproducibility:
    def test_same_seed_same_report(self):
        sc = resolve_scenario("hirzebruch-2")
        assert run_scenario(sc, points=2).to_json() == run_scenario(sc, points=2).to_json()

    def test_threads_do_not_change_report(self):
        sc = resolve_scenario("cp3-llt")
        serial = run_scenario(sc, points=3, threads=1).model_dump(exclude={"environment"})
        threaded = run_scenario(sc, points=3, threads=4).model_dump(exclude={"environment"})
        assert serial == threaded

    def test_timing_is_opt_in(self):
        sc = resolve_scenario("hirzebruch-1")
        assert run_scenario(sc, points=2).wall_time is None
        assert run_scenario(sc, points=2, timing=True).wall_time > 0


class TestRunner:
    def test_tolerance_defaults(self):
        config = VerifierConfig()
        assert ScenarioRunner(resolve_scenario("cp3"), config=config).tol == config.tol_single
        assert ScenarioRunner(resolve_scenario("cp7"), config=config).tol == config.tol_double
        assert ScenarioRunner(resolve_scenario("veronese-2"), config=config).tol == config.tol_veronese

    def test_overrides_are_stamped(self):
        config = VerifierConfig(tol_single=1e-9)
        runner = ScenarioRunner(resolve_scenario("cp3"), seed=5, config=config)
        assert runner.report.environment.tolerance_overrides == {"tol_single": 1e-9}
        assert runner.report.environment.seed == 5

    def test_precondition_stops_stage_only(self):
        sc = parse_scenario(
            '{"name": "wrong-hirzebruch", "N": 6, "level": [3.0, 2.0, 1.0],'
            ' "charges": [[1, 1, 0, 0, 0, 2], [0, 0, 1, 1, 0, -2], [0, 0, 0, 0, 1, 1]],'
            ' "twist": {"type": "hirzebruch", "n": 1}}'
        )
        report = run_scenario(sc)
        assert failing(report) == ["twist: stopped"]
        assert "n = 1" in report.get("twist: stopped").detail["error"]

    def test_audit_only(self):
        report = run_audit(resolve_scenario("cp7"))
        assert report.passed, failing(report)
        assert report.get("audit: unique passing convention").passed
        assert not any(e.name.startswith("su:") for e in report.entries)
