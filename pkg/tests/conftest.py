import pytest

_VERDICTS: dict[str, str] = {}


@pytest.fixture
def criterion(request):
    """Record a PASS/FAIL line for the acceptance criterion named by the test's ``label`` marker."""
    label = request.node.get_closest_marker("label").args[0]
    _VERDICTS[label] = "FAIL"
    yield
    if not _failed(request.node):
        _VERDICTS[label] = "PASS"


def _failed(node) -> bool:
    rep = getattr(node, "rep_call", None)
    return rep is None or rep.failed


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when == "call":
        item.rep_call = rep


def pytest_configure(config):
    config.addinivalue_line("markers", "label(name): acceptance criterion reported in the summary")


def pytest_terminal_summary(terminalreporter):
    if not _VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for label in sorted(_VERDICTS):
        terminalreporter.write_line(f"{_VERDICTS[label]} {label}")
