import logging
from pathlib import Path

import typer
from rich.console import Console

from controllers import stringy_controller as ctrl
from stringy.errors import StringyError
from utils.render import emit

logger = logging.getLogger("stringy.cli")
err_console = Console(stderr=True)


def _execute(ctx: typer.Context, command: ctrl.Command, **values) -> None:
    options = ctx.obj or {}
    try:
        config = ctrl.build_config(command=command, **{**options, **values})
        report = ctrl.run(config)
    except FileNotFoundError as err:
        logger.error("input missing", extra={"command": command.value, "detail": str(err)})
        err_console.print(f"error: {err}", markup=False, soft_wrap=True)
        raise typer.Exit(2) from err
    except StringyError as err:
        logger.error(
            "command failed",
            extra={"command": command.value, "error": type(err).__name__, "detail": err.detail, "context": err.context},
        )
        err_console.print(f"error: {err.detail}", markup=False, soft_wrap=True)
        raise typer.Exit(err.exit_code) from err
    emit(report, config.output)
    if report.failed:
        logger.warning("checks failed", extra={"command": command.value, "report": report.title})
        raise typer.Exit(1)


def toric(ctx: typer.Context, fan: Path = typer.Argument(..., help="Fan JSON file")):
    """
    stringy toric FAN
    - Classification, E_st, e_st, shed volume, Hodge table and duality of a toric variety.
    """
    _execute(ctx, ctrl.Command.TORIC, paths=[fan])


def resolution(ctx: typer.Context, strata: Path = typer.Argument(..., help="Strata JSON file")):
    """
    stringy resolution STRATA
    - E_st, e_st, Hodge table, duality and denominator report from log-resolution strata.
    """
    _execute(ctx, ctrl.Command.RESOLUTION, paths=[strata])


def arc(
    ctx: typer.Context,
    strata: Path = typer.Argument(..., help="Strata JSON file"),
    dim: int | None = typer.Option(None, "--dim", min=0, help="Arc space dimension n (defaults to the file's dim)"),
):
    """
    stringy arc STRATA --dim n
    - Motivic integral of the arc space and the identity with E_st.
    """
    _execute(ctx, ctrl.Command.ARC, paths=[strata], dim=dim)


def check(
    ctx: typer.Context,
    checks: str | None = typer.Option(None, "--checks", help="Comma separated check names"),
    fixtures: Path | None = typer.Option(None, "--fixtures", help="Fixture corpus folder"),
):
    """
    stringy check [--checks a,b]
    - Run the verification suite over the fixture corpus.
    """
    values: dict = {}
    if checks:
        values["checks"] = [name.strip() for name in checks.split(",") if name.strip()]
    if fixtures is not None:
        values["fixtures_dir"] = fixtures
    _execute(ctx, ctrl.Command.CHECK, **values)


def register(app: typer.Typer) -> None:
    app.command("toric")(toric)
    app.command("resolution")(resolution)
    app.command("arc")(arc)
    app.command("check")(check)
