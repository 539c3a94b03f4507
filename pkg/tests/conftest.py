import json
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

from momentflow.moments import MomentFamily

settings.register_profile(
    "default", deadline=None, max_examples=40, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

FROZEN_PATH = Path(__file__).parent / "data" / "frozen.json"


@pytest.fixture(scope="session")
def frozen():
    return json.loads(FROZEN_PATH.read_text())


@pytest.fixture(scope="session")
def families(frozen):
    return {k: MomentFamily.from_dict(v) for k, v in frozen["families"].items()}


def cx(v):
    return complex(v[0], v[1])


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    if mod is not None and mod.LINES:
        terminalreporter.section("acceptance")
        for line in mod.LINES:
            terminalreporter.write_line(line)
