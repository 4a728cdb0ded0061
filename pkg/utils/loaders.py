import json
import logging
from pathlib import Path

from pydantic import ValidationError

from stringy.errors import InvalidInput
from stringy.resolution import StratifiedResolutionData
from stringy.toricfan import Fan
from utils.settings import get_settings

logger = logging.getLogger("stringy.loaders")


def read_json(path: Path | str) -> dict:
    """
    Read a JSON input file.

    Raises FileNotFoundError naming the path when the file is missing and
    InvalidInput when it is not a JSON object.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Input file not found at {path}")
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as err:
        raise InvalidInput(f"{path} is not valid JSON: {err}") from err
    if not isinstance(data, dict):
        raise InvalidInput(f"{path} must hold a JSON object")
    return data


def load_fan(path: Path | str) -> Fan:
    data = read_json(path)
    data.setdefault("name", Path(path).stem)
    try:
        fan = Fan.model_validate(data)
    except ValidationError as err:
        raise InvalidInput(f"{path}: {err.errors(include_url=False)}") from err
    logger.debug("loaded fan", extra={"path": str(path), "rays": len(fan.rays), "cones": len(fan.max_cones)})
    return fan


def load_strata(path: Path | str) -> StratifiedResolutionData:
    data = read_json(path)
    data.setdefault("name", Path(path).stem)
    try:
        strata = StratifiedResolutionData.model_validate(data)
    except ValidationError as err:
        raise InvalidInput(f"{path}: {err.errors(include_url=False)}") from err
    logger.debug("loaded strata", extra={"path": str(path), "divisors": len(strata.divisors)})
    return strata


def fixture_path(kind: str, name: str, root: Path | None = None) -> Path:
    root = root or get_settings().fixtures_dir
    return Path(root) / kind / f"{name}.json"


def list_fixtures(kind: str, root: Path | None = None) -> list[Path]:
    root = root or get_settings().fixtures_dir
    folder = Path(root) / kind
    if not folder.exists():
        raise FileNotFoundError(f"Fixture folder not found at {folder}")
    return sorted(folder.glob("*.json"))
