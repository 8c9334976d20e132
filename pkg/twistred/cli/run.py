"""
Implements `twistred run` and `twistred audit`
"""

from pathlib import Path
from typing import Optional

import typer
from rich.table import Table
from typing_extensions import Annotated

from twistred.cli.cli import app
from twistred.constants import ExitCode
from twistred.core.exceptions import TwistredError
from twistred.core.logging import log_to_file, logger, set_verbose, stderr_console
from twistred.report_models import VerificationReport
from twistred.runner import run_audit, run_scenario
from twistred.scenario import Scenario, resolve_scenario

ScenarioArg = Annotated[
    str, typer.Argument(help="Registry name (see `twistred list`) or path to a scenario JSON file.")
]
SeedOption = Annotated[
    Optional[int], typer.Option("--seed", "-s", help="Sampling seed. Defaults to the scenario's seed.")
]
OutOption = Annotated[
    Optional[Path], typer.Option("--out", "-o", help="Write the JSON report here instead of stdout.")
]
VerboseOption = Annotated[bool, typer.Option("--verbose", "-v", help="Print every check as it runs.")]


def load_scenario_or_exit(name_or_path: str) -> Scenario:
    try:
        return resolve_scenario(name_or_path)
    except TwistredError as e:
        stderr_console.print(f"[bold red]Error:[/bold red] {e}")
        raise typer.Exit(ExitCode.INFRASTRUCTURE.value)


def _summary(report: VerificationReport):
    table = Table(show_header=True, box=None)
    table.add_column("Check", style="cyan")
    table.add_column("Residual", justify="right")
    table.add_column("Tolerance", justify="right")
    table.add_column("Verdict")
    for e in report.entries:
        if e.kind != "check":
            continue
        verdict = "[green]pass[/green]" if e.passed else "[bold red]fail[/bold red]"
        table.add_row(e.name, f"{e.residual:.3g}", f"{e.tolerance:.1g}", verdict)
    stderr_console.print(table)
    failure = report.first_failure()
    if failure is None:
        stderr_console.print(f"[bold green]All {len(report.entries)} entries pass.[/bold green]")
    else:
        stderr_console.print(
            f"[bold red]{len(report.failures())} failing checks[/bold red], first: [bold]{failure.name}[/bold]"
        )


def _emit(report: VerificationReport, out: Optional[Path]) -> int:
    text = report.to_json()
    if out is None:
        typer.echo(text, nl=False)
    else:
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(text, encoding="utf-8")
        stderr_console.print(f"Report written to {out}")
    return ExitCode.OK.value if report.passed else ExitCode.VERIFICATION_FAILED.value


def _execute(func, *args, **kwargs) -> VerificationReport:
    try:
        return func(*args, **kwargs)
    except TwistredError as e:
        logger.debug(f"Run aborted: {e!r}")
        stderr_console.print(f"[bold red]Error:[/bold red] {type(e).__name__}: {e}")
        raise typer.Exit(ExitCode.INFRASTRUCTURE.value)


@app.command()
def run(
    scenario: ScenarioArg,
    seed: SeedOption = None,
    threads: Annotated[
        Optional[int], typer.Option("--threads", "-t", min=1, help="Threads for per-point checks.")
    ] = None,
    out: OutOption = None,
    points: Annotated[
        Optional[int], typer.Option("--points", "-p", min=1, help="Override the scenario's sample count.")
    ] = None,
    timing: Annotated[
        bool, typer.Option("--timing", help="Record wall time (the report is then not reproducible).")
    ] = False,
    log_file: Annotated[
        Optional[Path], typer.Option("--log-file", help="Also write debug logs of the run to this file.")
    ] = None,
    verbose: VerboseOption = False,
):
    """Run the full check chain of a scenario and write its report.

    Exit code 0 when every check passes, 2 when any check fails, 1 on errors.
    """
    set_verbose(verbose)
    sc = load_scenario_or_exit(scenario)
    if log_file is None:
        report = _execute(run_scenario, sc, seed=seed, threads=threads, points=points, timing=timing)
    else:
        with log_to_file(log_file):
            report = _execute(
                run_scenario, sc, seed=seed, threads=threads, points=points, timing=timing
            )
    _summary(report)
    raise typer.Exit(_emit(report, out))


@app.command()
def audit(
    scenario: ScenarioArg,
    seed: SeedOption = None,
    out: OutOption = None,
    verbose: VerboseOption = False,
):
    """Run only the sign and factor convention audit of a scenario."""
    set_verbose(verbose)
    sc = load_scenario_or_exit(scenario)
    report = _execute(run_audit, sc, seed=seed)
    _summary(report)
    raise typer.Exit(_emit(report, out))
