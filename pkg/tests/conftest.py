import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from dcaseg.datagen import bundled_scenario_syn_scan, generate  # noqa: E402
from dcaseg.engine import PopulationConfig, run_stream  # noqa: E402

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def bundled_spec():
    return bundled_scenario_syn_scan(seed=42)


@pytest.fixture(scope="session")
def bundled_events(bundled_spec):
    return list(generate(bundled_spec))


@pytest.fixture(scope="session")
def bundled_records(bundled_events):
    return run_stream(PopulationConfig(), bundled_events)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
