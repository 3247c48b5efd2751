import pytest

CRITERIA: dict[int, tuple[str, str]] = {}


@pytest.hookimpl(hookwrapper=True, tryfirst=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when == "call":
        item.rep_call = rep


@pytest.fixture
def record(request):
    """Acceptance tests fill in {n, what}; the verdict comes from the test outcome."""
    box = {}
    yield box
    rep = getattr(request.node, "rep_call", None)
    CRITERIA[box["n"]] = ("PASS" if rep is not None and rep.passed else "FAIL", box["what"])


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(CRITERIA):
        verdict, what = CRITERIA[n]
        terminalreporter.write_line(f"criterion {n}: {verdict}  {what}")
