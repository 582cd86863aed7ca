import pytest

_ACCEPTANCE: dict[int, tuple[bool, str]] = {}


@pytest.fixture
def criterion(request):
    """Record the outcome of one acceptance criterion for the terminal summary."""

    class Recorder:
        def __init__(self):
            self.number = request.node.get_closest_marker("criterion").args[0]
            self.detail = ""

        def note(self, text: str) -> None:
            self.detail = text

    rec = Recorder()
    _ACCEPTANCE[rec.number] = (False, "not finished")
    yield rec
    _ACCEPTANCE[rec.number] = (getattr(request.node, "_acceptance_ok", False), rec.detail)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    if report.when == "call" and item.get_closest_marker("criterion"):
        item._acceptance_ok = report.passed


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number")


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_ACCEPTANCE):
        ok, detail = _ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
