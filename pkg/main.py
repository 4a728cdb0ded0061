import logging

import typer
from dotenv import load_dotenv

from routes import commands
from utils.logging_conf import setup_logging
from utils.settings import OutputFormat, get_settings

# Load environment variables from .env file
load_dotenv()

settings = get_settings()
setup_logging(settings.log_level)
logger = logging.getLogger("stringy")

app = typer.Typer(
    name="stringy",
    help="Exact stringy E-functions, stringy Euler numbers and stringy Hodge numbers.",
    no_args_is_help=True,
    add_completion=False,
)


@app.callback()
def main(
    ctx: typer.Context,
    output: OutputFormat = typer.Option(settings.output, "--output", help="text, json or latex"),
    box_cap: int = typer.Option(settings.box_cap, "--box-cap", min=1, help="Largest box enumeration allowed per cone"),
):
    """
    Global options, given before the command.
    """
    ctx.obj = {"output": output, "box_cap": box_cap, "fixtures_dir": settings.fixtures_dir}
    logger.debug("options", extra={"output": output.value, "box_cap": box_cap})


# Include commands
commands.register(app)


if __name__ == "__main__":
    app()
