from enum import Enum
from functools import lru_cache
from pathlib import Path

from pydantic import PositiveInt
from pydantic_settings import BaseSettings, SettingsConfigDict

FIXTURES_DIR = Path(__file__).resolve().parent.parent / "data" / "fixtures"


class OutputFormat(str, Enum):
    TEXT = "text"
    JSON = "json"
    LATEX = "latex"


class Settings(BaseSettings):
    """
    Runtime configuration, read from STRINGY_* environment variables and
    an optional .env file. Command-line flags take precedence.
    """

    model_config = SettingsConfigDict(env_prefix="STRINGY_", env_file=".env", extra="ignore")

    box_cap: PositiveInt = 10_000_000
    log_level: str = "INFO"
    fixtures_dir: Path = FIXTURES_DIR
    output: OutputFormat = OutputFormat.TEXT


@lru_cache
def get_settings() -> Settings:
    return Settings()
