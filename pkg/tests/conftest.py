"""
Shared pytest configuration.

Registers the hypothesis profile declared in the [hypothesis] section of
pytest.ini and loads it, unless HYPOTHESIS_PROFILE names another one.
"""

import configparser
import os
from pathlib import Path

from hypothesis import settings


PYTEST_INI = Path(__file__).resolve().parents[1] / "pytest.ini"


def _profile_options(path: Path) -> dict:
    parser = configparser.ConfigParser()
    parser.read(path)
    options = {
        "max_examples": parser.getint("hypothesis", "max_examples", fallback=100),
        "derandomize": parser.getboolean("hypothesis", "derandomize", fallback=True),
        "deadline": None,
    }
    deadline = parser.get("hypothesis", "deadline", fallback="none")
    if deadline.lower() != "none":
        options["deadline"] = int(deadline)
    return options


settings.register_profile("recovery", **_profile_options(PYTEST_INI))
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "recovery"))
