import numpy as np
import pytest

from twistred.core.config import get_verifier_config, reset_verifier_config
from tests.fixtures.logging import silence_logger  # noqa: F401


@pytest.fixture(scope="session")
def proj_root(pytestconfig) -> str:
    return str(pytestconfig.rootdir)  # noqa


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture
def verifier_config(monkeypatch):
    """Fresh default config, isolated from TWISTRED_* variables of the caller."""
    import os

    for key in list(os.environ):
        if key.upper().startswith("TWISTRED_"):
            monkeypatch.delenv(key, raising=False)
    reset_verifier_config()
    yield get_verifier_config()
    reset_verifier_config()


# auto use fixtures ------------------------------------------------


@pytest.fixture(autouse=True)
def fresh_config():
    """Every test starts with an unloaded verifier config."""
    reset_verifier_config()
    yield
    reset_verifier_config()
