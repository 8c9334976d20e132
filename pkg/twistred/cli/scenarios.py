"""
Implements `twistred list` and `twistred show`
"""

import typer
from rich.syntax import Syntax
from rich.table import Table
from typing_extensions import Annotated

from twistred.cli.cli import app
from twistred.cli.run import load_scenario_or_exit
from twistred.constants import ExitCode
from twistred.core.exceptions import ScenarioError
from twistred.core.logging import stderr_console, stdout_console
from twistred.scenario import list_scenarios


@app.command(name="list")
def list_(
    quiet: Annotated[bool, typer.Option("--quiet", "-q", help="Only print scenario names.")] = False,
):
    """List the built-in scenarios."""
    try:
        registry = list_scenarios()
    except ScenarioError as e:
        stderr_console.print(f"[bold red]Error:[/bold red] {e}")
        raise typer.Exit(ExitCode.INFRASTRUCTURE.value)
    if quiet:
        for name in registry:
            typer.echo(name)
        return
    table = Table(show_header=True, box=None)
    table.add_column("Name", style="cyan")
    table.add_column("C^N", justify="right")
    table.add_column("Twist")
    table.add_column("Description")
    for name, sc in registry.items():
        table.add_row(name, str(sc.N), sc.twist.type, sc.description)
    stdout_console.print(table)


@app.command()
def show(
    scenario: Annotated[str, typer.Argument(help="Registry name or path to a scenario JSON file.")],
):
    """Print a scenario as JSON."""
    sc = load_scenario_or_exit(scenario)
    stdout_console.print(Syntax(sc.to_json(), "json"))
