import pytest
from hypothesis import HealthCheck, settings

from orthantwalks.corpus import load_models

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def corpus():
    return load_models()


@pytest.fixture(scope="session")
def nonzero_models(corpus):
    return [m for m in corpus if not m.orbit_sum_zero]


# one PASS/FAIL line per acceptance criterion in the terminal summary
_criteria: dict[int, str] = {}
_outcomes: dict[int, list[bool]] = {}
_by_node: dict[str, int] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, text): acceptance criterion checked by the test")


def pytest_collection_modifyitems(items):
    for item in items:
        mark = item.get_closest_marker("criterion")
        if mark is not None:
            number, text = mark.args
            _criteria[number] = text
            _by_node[item.nodeid] = number


def pytest_runtest_logreport(report):
    number = _by_node.get(report.nodeid)
    if number is None:
        return
    if report.when == "call" or report.failed:
        _outcomes.setdefault(number, []).append(report.passed)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        results = _outcomes.get(number)
        status = "NOT RUN" if not results else "PASS" if all(results) else "FAIL"
        terminalreporter.write_line(f"criterion {number:2d}: {status}  {_criteria[number]}")
