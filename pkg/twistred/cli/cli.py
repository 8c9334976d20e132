"""
Implements top level cli (mainly callbacks and setup)
"""

from pathlib import Path
from typing import Optional

import typer
from typing_extensions import Annotated

from twistred import __version__
from twistred.core.config import load_verifier_config
from twistred.core.exceptions import TwistredError
from twistred.core.logging import stderr_console, stdout_console

app = typer.Typer(context_settings={"help_option_names": ["-h", "--help"]})


def version_callback(value: bool):
    if value:
        stdout_console.print(f"twistred Version: {__version__}")
        raise typer.Exit()


@app.callback(invoke_without_command=True)
def callback(
    ctx: typer.Context,
    version: Annotated[
        Optional[bool],
        typer.Option(
            ..., "--version", callback=version_callback, help="Print twistred version."
        ),
    ] = None,
    config: Annotated[
        Optional[Path],
        typer.Option(
            "--config",
            envvar="TWISTRED_CONFIG",
            help="TOML file with tolerance and sampling overrides.",
        ),
    ] = None,
    env_file: Annotated[
        Optional[Path],
        typer.Option("--env-file", help="A .env file with TWISTRED_* overrides."),
    ] = None,
):
    if config is not None or env_file is not None:
        try:
            load_verifier_config(toml_file=config, env_file=env_file, skip_if_loaded=False)
        except (TwistredError, ValueError) as e:
            stderr_console.print(f"[bold red]Error:[/bold red] invalid config: {e}")
            raise typer.Exit(1)
    if not ctx.invoked_subcommand:
        stdout_console.print(ctx.get_help())
        raise typer.Exit()


@app.command(name="help")
def help_(ctx: typer.Context):
    """Print help."""
    stdout_console.print(ctx.parent.get_help())  # type: ignore[union-attr]
    raise typer.Exit()
