from pathlib import Path

import pytest
from hypothesis import settings

settings.register_profile("default", deadline=None)
settings.load_profile("default")

DATA_DIR = Path(__file__).resolve().parents[1] / "src" / "pboxcdf" / "data"


@pytest.fixture
def data_dir() -> Path:
    return DATA_DIR


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(name): acceptance criterion listed in the run summary")
    config.stash[_RESULTS] = {}


_RESULTS = pytest.StashKey[dict]()


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    results = item.config.stash[_RESULTS]
    name = marker.args[0]
    if report.failed or (report.when == "call" and name not in results):
        results[name] = ("PASS" if report.passed else "FAIL", report.duration)


def pytest_terminal_summary(terminalreporter, config):
    results = config.stash.get(_RESULTS, {})
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for name, (verdict, seconds) in results.items():
        terminalreporter.write_line(f"{verdict}  {name}  ({seconds:.2f} s)")
