"""
Scenario execution: builds the structure a scenario describes and runs the
check chain in a fixed order

    action and ambient -> level -> preconditions -> twist axioms
    -> intermediate chain -> convention audit -> SU(n) equations -> basicness
    -> finite differences -> extras -> torsion

collecting every result as a report entry. Failed preconditions are recorded
and the chain continues on the inadmissible input, so the downstream detectors
show what goes wrong.
"""

import contextlib
import time
from math import comb
from typing import Callable, Dict, Iterator, List, NamedTuple, Optional

import numpy as np

from twistred.calc.exterior import Form
from twistred.calc.fields import finite_difference_check
from twistred.core.config import VerifierConfig, get_verifier_config
from twistred.core.exceptions import (
    ConventionAuditError,
    IrregularLevelError,
    PreconditionError,
    SingularMatrixError,
)
from twistred.core.logging import logger, verbose_print
from twistred.geometry.reduction import (
    AmbientStructure,
    ReducedStructure,
    basis_change_check,
    check_charge_sum,
    convention_audit,
    intermediate_identities,
    pipeline_equivalence,
    reduce,
    verify_basic,
    verify_su_equations,
)
from twistred.geometry.skew import (
    CollinearityReport,
    SkewMatrix,
    collinearity_locus,
    pfaffian_square_residual,
    random_generic_pair,
    singular_limit_probe,
)
from twistred.geometry.torsion import TorsionData, lt_check, verify_torsion_equations
from twistred.geometry.torus import MomentLevel, SingularLocus, TorusAction, sample_level, verify_action
from twistred.geometry.twist import (
    TwistForm,
    alpha_from_skew,
    alpha_norm_identity_residual,
    gram_schmidt,
    hirzebruch_parts,
    hirzebruch_twist,
    norm_identity_residual,
    orthogonality_residual,
    verify_subtori,
    verify_twist,
    veronese_pullback,
)
from twistred.geometry.zeros import common_root_search, horizontal_space_dim, koszul_tuple
from twistred.report_models import CheckEntry, EnvironmentStamp, VerificationReport
from twistred.scenario import (
    GramSchmidtTwist,
    HirzebruchTwist,
    MatrixSpec,
    Scenario,
    SkewTwist,
    VeroneseTwist,
)
from twistred.utils import complex_pairs, rng_for

# errors that turn into failing entries instead of aborting the run
STAGE_ERRORS = (
    PreconditionError,
    SingularMatrixError,
    ConventionAuditError,
    IrregularLevelError,
)

PFAFFIAN_TOL = 1e-10
ZERO_BOUND_TOL = 1e-8
PROBE_TOL = 1e-4
KOSZUL_ROOT_TOL = 1e-6
KOSZUL_TUPLES = 10
FD_TOL = 1e-6
FD_POINTS = 10


class Twists(NamedTuple):
    twists: List[TwistForm]
    raw: List[TwistForm]  # before orthogonalization
    matrices: List[SkewMatrix]
    collinearity: Optional[CollinearityReport] = None


class ScenarioRunner:
    def __init__(
        self,
        scenario: Scenario,
        seed: Optional[int] = None,
        threads: Optional[int] = None,
        points: Optional[int] = None,
        config: Optional[VerifierConfig] = None,
    ):
        if points is not None:
            scenario = scenario.model_copy(update={"points": points})
        self.scenario = scenario
        self.config = config or get_verifier_config()
        self.seed = scenario.seed if seed is None else seed
        self.threads = threads or self.config.threads
        self.tol = scenario.tolerance or self._default_tolerance()
        self.floor = self.config.frame_floor
        self.report = VerificationReport(
            scenario=scenario.model_dump(mode="json", exclude_none=True),
            environment=EnvironmentStamp(
                seed=self.seed,
                precision=scenario.precision,
                threads=self.threads,
                tolerance_overrides=self.config.overrides(),
            ),
        )
        self.action: Optional[TorusAction] = None
        self.ambient: Optional[AmbientStructure] = None
        self.level: Optional[MomentLevel] = None
        self.built: Optional[Twists] = None
        self.rs: Optional[ReducedStructure] = None

    def _default_tolerance(self) -> float:
        twist = self.scenario.twist
        if isinstance(twist, VeroneseTwist):
            return self.config.tol_veronese
        if isinstance(twist, (GramSchmidtTwist, HirzebruchTwist)):
            return self.config.tol_double
        return self.config.tol_single

    def _add(self, entries: List[CheckEntry]):
        for e in entries:
            self.report.add(e)
            if e.kind == "check":
                mark = "[green]ok[/green]" if e.passed else "[bold red]FAIL[/bold red]"
                verbose_print(f"  {mark} {e.name}: {e.residual:.3g} (tol {e.tolerance:.1g})")

    @contextlib.contextmanager
    def _stage(self, name: str) -> Iterator[None]:
        verbose_print(f"[bold]{name}[/bold]")
        logger.debug(f"Stage {name} of {self.scenario.name}")
        try:
            yield
        except STAGE_ERRORS as e:
            logger.warning(f"Stage {name} stopped: {e}")
            self._add([CheckEntry.boolean(f"{name}: stopped", False, error=f"{type(e).__name__}: {e}")])

    def _rng(self, *keys) -> np.random.Generator:
        return rng_for(self.seed, self.scenario.name, *keys)

    # construction

    def _matrix(self, spec: MatrixSpec, N: int, key: str) -> SkewMatrix:
        if spec.entries is not None:
            return SkewMatrix.from_entries(N, spec.entries)
        rng = self._rng("matrix", key)
        if spec.random == "lt":
            c = complex(*spec.scale) if spec.scale else None
            return SkewMatrix.random_lt(rng, c, N)
        return SkewMatrix.random_generic(rng, N)

    def _build_twists(self) -> Twists:
        sc = self.scenario
        twist = sc.twist
        action = self.action
        if isinstance(twist, SkewTwist):
            M = self._matrix(twist.matrix, sc.N, "alpha")
            tf = alpha_from_skew(M, action)
            return Twists([tf], [tf], [M])
        if isinstance(twist, GramSchmidtTwist):
            if twist.first is not None:
                M1 = self._matrix(twist.first, sc.N, "first")
                M2 = self._matrix(twist.second, sc.N, "second")
                report = collinearity_locus(M1, M2) if M1.is_invertible() else None
            else:
                M1, M2, report = random_generic_pair(self._rng("matrix", "pair"), sc.N)
            raw = [alpha_from_skew(M1, action, "alpha1"), alpha_from_skew(M2, action, "alpha2")]
            twists = gram_schmidt(raw) if twist.orthogonalize else raw
            return Twists(twists, raw, [M1, M2], report)
        if isinstance(twist, HirzebruchTwist):
            tf = hirzebruch_twist(twist.n)
            if not np.array_equal(tf.action.Q, action.Q):
                raise PreconditionError(
                    f"Hirzebruch twist for n = {twist.n} needs charges {tf.action.Q.tolist()}"
                )
            return Twists([tf], [tf], [])
        M = self._matrix(twist.matrix, comb(5 * twist.n - 1, twist.n), "veronese")
        tf = veronese_pullback(twist.n, M)
        return Twists([tf], [tf], [M])

    def _loci(self) -> List[SingularLocus]:
        floor = self.scenario.singular_floor
        floor = self.config.singular_floor if floor is None else floor
        if self.built.collinearity is not None:
            return [SingularLocus("collinearity", self.built.collinearity.distance, floor)]
        twists = self.built.twists

        def smallest_norm(z: np.ndarray) -> float:
            return float(min(tf.norm_sq(z)[0] for tf in twists))

        return [SingularLocus("twist norm", smallest_norm, floor)]

    def _level(self) -> MomentLevel:
        return MomentLevel(self.action, self.scenario.level, self._loci(), max_resample=self.config.max_resample)

    # stages

    def _structure(self):
        sc = self.scenario
        self.action = TorusAction(sc.charges)
        ambient = AmbientStructure(sc.N)
        self._add(verify_action(self.action))
        self._add(ambient.verify(self.action))
        self.ambient = ambient

    def _preconditions(self):
        built = self.built
        ok, mismatch = check_charge_sum(self.action, built.twists)
        self._add(
            [
                CheckEntry.boolean(
                    "charge-sum precondition",
                    ok,
                    twist_charges=[complex_pairs(tf.charge) for tf in built.twists],
                    half_volume_charge=complex_pairs(self.action.volume_charge() / 2),
                    mismatch=complex_pairs(mismatch),
                )
            ]
        )
        if len(built.twists) > 1:
            pts = self._samples("orthogonality")
            self._add(
                [
                    CheckEntry.check(
                        "orthogonality precondition",
                        orthogonality_residual(built.twists, pts),
                        self.tol,
                        points=len(pts),
                    )
                ]
            )
        for k, M in enumerate(built.matrices):
            self._add(
                [
                    CheckEntry.boolean(
                        f"invertibility precondition (matrix {k})",
                        M.is_invertible(),
                        sigma_min=M.sigma_min(),
                    )
                ]
            )

    def _samples(self, stream: str) -> np.ndarray:
        return sample_level(self.level, self.scenario.check_points, self.seed, stream)

    def _zero_starts(self) -> int:
        starts = self.scenario.zero_search_starts
        return self.config.zero_search_starts if starts is None else starts

    def _twist_axioms(self):
        pts = self._samples("twist")
        for tf in self.built.twists:
            self._add(
                verify_twist(
                    tf,
                    self.level,
                    pts,
                    self.tol,
                    seed=self.seed,
                    zero_search_starts=self._zero_starts(),
                    threads=self.threads,
                )
            )

    def _reduction(self):
        sc = self.scenario
        self.rs = reduce(self.ambient, self.action, self.built.twists, normalize=sc.normalize, enforce=False)
        common = dict(seed=self.seed, floor=self.floor)
        if sc.intermediate:
            with self._stage("intermediate"):
                self._add(intermediate_identities(self.rs, self.level, sc.check_points, sc.trials, self.tol, **common))
        audit = sc.audit if sc.audit is not None else self.rs.l >= 2
        if audit:
            with self._stage("audit"):
                result = convention_audit(self.rs, self.level, sc.check_points, sc.trials, self.tol, **common)
                self._add(result.entries(self.tol, sc.check_points))
                if result.unique:
                    self.rs = self.rs.with_convention(result.winner)
        with self._stage("su"):
            self._add(
                verify_su_equations(
                    self.rs, self.level, sc.points, sc.trials, self.tol,
                    threads=self.threads, measure_domega=sc.measure_domega, **common,
                )
            )
        with self._stage("basic"):
            self._add(
                verify_basic(
                    self.rs, self.level, sc.check_points, sc.trials, self.tol,
                    threads=self.threads, symbolic=sc.symbolic_basic, **common,
                )
            )

    def _finite_difference(self):
        pts = sample_level(self.level, FD_POINTS, self.seed, "finite-difference")
        fields = []
        for tf in self.built.twists:
            fields += [(tf.name, tf.field), (f"d{tf.name}", tf.field.d())]
        if self.scenario.finite_difference == "all":
            Omega, omega = self.rs.symbolic()
            fields += [("omega", omega), ("Omega", Omega)]
        self._add(
            [
                CheckEntry.check(
                    f"finite differences: {name}",
                    finite_difference_check(field, pts),
                    FD_TOL,
                    points=len(pts),
                    terms=len(field),
                )
                for name, field in fields
            ]
        )

    # extras

    def _extra_basis_change(self):
        s = self.action.s
        A = np.asarray(self.scenario.basis_change) if self.scenario.basis_change else 2 * np.eye(s)
        self._add(
            [
                basis_change_check(
                    self.rs, A, self.level, self.scenario.check_points, self.scenario.trials,
                    self.tol, seed=self.seed, floor=self.floor,
                )
            ]
        )

    def _extra_charges(self):
        twist = self.scenario.twist
        if not isinstance(twist, HirzebruchTwist):
            raise PreconditionError("charge vectors of the parts exist for Hirzebruch twists only")
        pts = self._samples("parts")
        for part in hirzebruch_parts(twist.n):
            entries = verify_twist(part, self.level, pts, self.tol, zero_search_starts=0)
            self._add([e for e in entries if "nonvanishing" not in e.name])

    def _extra_collinearity(self):
        report = self.built.collinearity
        if report is None:
            raise PreconditionError("collinearity locus needs a pair of invertible skew matrices")
        expected = self.scenario.N // 2
        self._add(
            [
                CheckEntry.boolean(
                    f"collinearity: {expected} double eigenvalues",
                    report.is_generic(expected),
                    **report.summary(),
                )
            ]
        )

    def _extra_horizontal_dim(self):
        N = self.scenario.N
        dim = horizontal_space_dim(N, 2)
        self._add(
            [CheckEntry.boolean("classification: charge-2 horizontal tuples = skew matrices", dim == N * (N - 1) // 2, dim=dim)]
        )

    def _extra_normalization(self):
        sc = self.scenario
        raw = ReducedStructure(self.ambient, self.action, self.built.twists, normalize=not sc.normalize)
        label = "raw" if sc.normalize else "normalized"
        entries = verify_su_equations(
            raw, self.level, sc.check_points, sc.trials, self.tol, seed=self.seed, floor=self.floor
        )
        self._add([e.model_copy(update={"name": f"normalization ({label}): {e.name}"}) for e in entries])

    def _extra_norm_identity(self):
        pts = self._samples("norm-identity")
        entries = []
        if isinstance(self.scenario.twist, GramSchmidtTwist):
            a, b = self.built.raw
            entries.append(
                CheckEntry.check(
                    "gram-schmidt: |P_a(b)|^2 = |b|^2 - |abar . b|^2 / |a|^2",
                    norm_identity_residual(a, b, pts),
                    self.tol,
                    points=len(pts),
                )
            )
        else:
            for k, M in enumerate(self.built.matrices):
                entries.append(
                    CheckEntry.check(
                        f"twist: |alpha_M|^2 = z* M* M z (matrix {k})",
                        alpha_norm_identity_residual(M, pts),
                        self.tol,
                        points=len(pts),
                    )
                )
        self._add(entries)

    def _extra_pfaffian(self):
        self._add(
            [
                CheckEntry.check(f"pfaffian: Pf(M)^2 = det(M) (matrix {k})", pfaffian_square_residual(M), PFAFFIAN_TOL)
                for k, M in enumerate(self.built.matrices)
            ]
        )

    def _extra_pipeline(self):
        pts = self._samples("pipeline")
        self._add(
            [
                CheckEntry.check(
                    "reduction: i^s i_V Omega0 = (-1)^s i_xi Omega0",
                    pipeline_equivalence(self.rs, pts),
                    self.tol,
                    points=len(pts),
                )
            ]
        )

    def _extra_probe(self):
        spec = self.scenario.probe
        N = self.scenario.N
        if N != 8:
            raise PreconditionError("the singular-limit probe runs on C^8")
        M1 = SkewMatrix.block_j([1.0] * 4)
        M2 = SkewMatrix.block_j(spec.lambdas)
        z1 = np.array([complex(re, im) for re, im in spec.z1])
        z1 = z1 / np.linalg.norm(z1)
        result = singular_limit_probe(M1, M2, z1, spec.eps)
        entries = []
        # moving z_2 leaves the limit along dz_3 and vice versa
        for path, slot, partner in zip(result.paths, (2, 3), (3, 2)):
            expected = Form.dz(partner, N).wedge(Form.dzb(partner, N))
            entries.append(
                CheckEntry.check(
                    f"probe: limit along z{slot} = dz{partner} ^ dzb{partner}",
                    (path.limit - expected).norm(),
                    PROBE_TOL,
                    eps=path.eps[-1],
                    skipped=path.skipped,
                    convergence=path.convergence(),
                )
            )
        difference = result.difference()
        entries.append(CheckEntry.boolean("probe: limits differ", difference > 1, difference=difference))
        self._add(entries)

    def _extra_subtori(self):
        pts = self._samples("subtori")
        for tf in self.built.twists:
            self._add(verify_subtori(tf, self.level, pts, self.tol))

    def _extra_zero_bound(self):
        entries = []
        for k, (tf, M) in enumerate(zip(self.built.raw, self.built.matrices)):
            holo, _ = tf.field.one_form_parts()
            found = common_root_search(holo, max(self._zero_starts(), 1), seed=self.seed, threads=self.threads)
            bound = M.min_norm_bound()
            entries.append(
                CheckEntry.boolean(
                    f"zeros: min |alpha|^2 on the sphere >= sigma_min(M)^2 (matrix {k})",
                    found.value >= bound - ZERO_BOUND_TOL,
                    minimum=found.value,
                    bound=bound,
                )
            )
        self._add(entries)

    def _extra_common_root(self):
        # charge-3 horizontal tuples P = M(z) z always share a root
        N = self.scenario.N
        entries = []
        for k in range(KOSZUL_TUPLES):
            Ps = koszul_tuple(self._rng("koszul", k), N, degree=2)
            found = common_root_search(Ps, max(self._zero_starts(), 1), seed=self.seed + k, threads=self.threads)
            entries.append(
                CheckEntry.check(
                    f"zeros: charge-3 Koszul tuple has a common root (tuple {k})",
                    found.value,
                    KOSZUL_ROOT_TOL,
                    starts=self._zero_starts(),
                )
            )
        self._add(entries)

    def _extras(self):
        handlers: Dict[str, Callable[[], None]] = {
            "basis-change": self._extra_basis_change,
            "charges": self._extra_charges,
            "collinearity": self._extra_collinearity,
            "common-root": self._extra_common_root,
            "horizontal-dim": self._extra_horizontal_dim,
            "normalization": self._extra_normalization,
            "norm-identity": self._extra_norm_identity,
            "pfaffian": self._extra_pfaffian,
            "pipeline": self._extra_pipeline,
            "probe": self._extra_probe,
            "subtori": self._extra_subtori,
            "zero-bound": self._extra_zero_bound,
        }
        for name in self.scenario.extras:
            with self._stage(name):
                handlers[name]()

    def _torsion(self):
        sc = self.scenario
        M = self.built.matrices[0]
        td = TorsionData(M)
        common = dict(seed=self.seed, floor=self.floor, threads=self.threads)
        if sc.torsion:
            with self._stage("torsion"):
                self._add(verify_torsion_equations(td, self.level, sc.points, sc.trials, self.config.tol_torsion, **common))
        if sc.lt:
            with self._stage("lt"):
                self._add(lt_check(td, self.level, sc.points, sc.trials, self.config.tol_torsion, **common))

    def run(self, timing: bool = False) -> VerificationReport:
        sc = self.scenario
        logger.info(f"Running scenario {sc.name} with seed {self.seed}")
        start = time.perf_counter()
        with self._stage("structure"):
            self._structure()
        with self._stage("twist"):
            self.built = self._build_twists()
        if self.built is None:
            return self._finish(start, timing)
        with self._stage("level"):
            self.level = self._level()
        if self.level is None:
            return self._finish(start, timing)
        with self._stage("preconditions"):
            self._preconditions()
        with self._stage("twist axioms"):
            self._twist_axioms()
        with self._stage("reduction"):
            self._reduction()
        if self.rs is not None:
            with self._stage("finite-difference"):
                self._finite_difference()
            self._extras()
        if sc.torsion or sc.lt:
            with self._stage("torsion data"):
                self._torsion()
        return self._finish(start, timing)

    def _finish(self, start: float, timing: bool) -> VerificationReport:
        if timing:
            self.report.wall_time = time.perf_counter() - start
        failure = self.report.first_failure()
        if failure is None:
            logger.info(f"Scenario {self.scenario.name}: all {len(self.report.entries)} entries pass")
        else:
            logger.info(
                f"Scenario {self.scenario.name}: {len(self.report.failures())} failing checks, "
                f"first '{failure.name}'"
            )
        return self.report


def run_scenario(
    scenario: Scenario,
    seed: Optional[int] = None,
    threads: Optional[int] = None,
    points: Optional[int] = None,
    timing: bool = False,
    config: Optional[VerifierConfig] = None,
) -> VerificationReport:
    return ScenarioRunner(scenario, seed, threads, points, config).run(timing)


def run_audit(
    scenario: Scenario, seed: Optional[int] = None, config: Optional[VerifierConfig] = None
) -> VerificationReport:
    """The convention audit alone, on the scenario's reduced structure."""
    runner = ScenarioRunner(scenario, seed, config=config)
    start = time.perf_counter()
    with runner._stage("structure"):
        runner._structure()
    with runner._stage("twist"):
        runner.built = runner._build_twists()
    if runner.built is not None:
        with runner._stage("level"):
            runner.level = runner._level()
    if runner.level is not None:
        with runner._stage("audit"):
            rs = reduce(runner.ambient, runner.action, runner.built.twists, normalize=scenario.normalize, enforce=False)
            result = convention_audit(
                rs, runner.level, scenario.check_points, scenario.trials, runner.tol,
                seed=runner.seed, floor=runner.floor,
            )
            runner._add(result.entries(runner.tol, scenario.check_points))
    return runner._finish(start, timing=False)
