import json

import pytest

from utils.loaders import fixture_path, load_fan, load_strata
from utils.settings import FIXTURES_DIR, get_settings


@pytest.fixture(autouse=True)
def _fresh_settings(monkeypatch):
    """Settings are cached per process; tests start from the defaults."""
    for key in ("STRINGY_BOX_CAP", "STRINGY_LOG_LEVEL", "STRINGY_OUTPUT", "STRINGY_FIXTURES_DIR"):
        monkeypatch.delenv(key, raising=False)
    get_settings.cache_clear()
    yield
    get_settings.cache_clear()


@pytest.fixture
def fan_fixture():
    def load(name):
        return load_fan(fixture_path("fans", name, FIXTURES_DIR))

    return load


@pytest.fixture
def strata_fixture():
    def load(name):
        return load_strata(fixture_path("strata", name, FIXTURES_DIR))

    return load


@pytest.fixture
def write_json(tmp_path):
    def write(name, payload):
        path = tmp_path / name
        path.write_text(json.dumps(payload), encoding="utf-8")
        return path

    return write
