import numpy as np
import pytest

from roundsim.config import from_mapping

_criteria = {}


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.failed):
        return
    for mark in report.keywords:
        if mark.startswith("criterion_"):
            _criteria[mark] = (report.outcome, report.nodeid.split("::")[-1])


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(_criteria, key=lambda k: int(k.split("_")[1])):
        outcome, name = _criteria[key]
        verdict = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"criterion {key.split('_')[1]}: {verdict}  ({name})")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def small_config():
    return from_mapping({"n_vehicles": 60, "sim_time": 2.0, "rogue_fraction": 0.1,
                         "road_length": 1500.0, "seed": 7})


def pytest_configure(config):
    for i in range(1, 9):
        config.addinivalue_line("markers", f"criterion_{i}: acceptance criterion {i}")
