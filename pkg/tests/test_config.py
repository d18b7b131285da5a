import pytest
from pydantic import ValidationError

from contpath.config import EXIT_CODES, POLICY_DEFAULTS, Settings


def test_environment_overrides(monkeypatch):
    monkeypatch.setenv("CONTPATH_THREADS", "4")
    monkeypatch.setenv("CONTPATH_LOG_LEVEL", "debug")
    loaded = Settings(_env_file=None)
    assert loaded.THREADS == 4
    assert loaded.LOG_LEVEL == "DEBUG"


@pytest.mark.parametrize(
    "name, value",
    [("CONTPATH_THREADS", "0"), ("CONTPATH_LOG_LEVEL", "chatty"), ("CONTPATH_DEFAULT_R_FACTOR", "1.0")],
)
def test_invalid_environment_values(monkeypatch, name, value):
    monkeypatch.setenv(name, value)
    with pytest.raises(ValidationError):
        Settings(_env_file=None)


def test_settings_hold_only_numerical_and_runtime_knobs():
    assert "ENVIRONMENT" not in Settings.model_fields
    assert not hasattr(Settings, "is_production")


def test_tables():
    assert EXIT_CODES == {"success": 0, "usage": 1, "failure": 1, "budget": 2}
    assert POLICY_DEFAULTS["fastpath"]["r"] == pytest.approx(0.42)
