import pytest
from pydantic import ValidationError

from config import Settings, get_settings


def test_defaults():
    settings = Settings()
    assert settings.rank_tolerance == 1e-8
    assert settings.log_level == "INFO"


def test_environment_override(monkeypatch):
    monkeypatch.setenv("HANDEYE_RANK_TOL", "1e-6")
    monkeypatch.setenv("HANDEYE_LOG_LEVEL", "debug")
    settings = get_settings()
    assert settings.rank_tolerance == 1e-6
    assert settings.log_level == "DEBUG"


def test_unknown_log_level():
    with pytest.raises(ValidationError):
        Settings(log_level="chatty")


def test_tolerances_must_be_positive():
    with pytest.raises(ValidationError):
        Settings(axis_separation=0.0)
