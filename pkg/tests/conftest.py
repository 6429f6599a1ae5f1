import pytest

# -- acceptance reporting --------------------------------------------------------

_criteria: dict[int, dict] = {}


class CriterionLog:
    def __init__(self, number: int, title: str):
        self.entry = _criteria.setdefault(number, {"title": title, "notes": [], "outcomes": []})

    def note(self, text: str):
        self.entry["notes"].append(text)


@pytest.fixture
def criterion(request):
    marker = request.node.get_closest_marker("criterion")
    if marker is None:
        raise RuntimeError("criterion fixture needs @pytest.mark.criterion(number, title)")
    return CriterionLog(*marker.args)


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    marker = next((m for m in getattr(report, "_criterion", [])), None)
    if marker is None:
        return
    number, title = marker
    entry = _criteria.setdefault(number, {"title": title, "notes": [], "outcomes": []})
    # an expected failure is still a failed criterion
    passed = report.passed and not hasattr(report, "wasxfail")
    entry["outcomes"].append((report.nodeid.split("::")[-1], passed))


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    m = item.get_closest_marker("criterion")
    if m is not None:
        rep._criterion = [tuple(m.args)]


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for number in sorted(_criteria):
        e = _criteria[number]
        if not e["outcomes"]:
            continue
        ok = all(p for _, p in e["outcomes"])
        failed = [name for name, p in e["outcomes"] if not p]
        line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {e['title']}"
        if failed:
            line += f"  [failing: {', '.join(failed)}]"
        tr.write_line(line)
        for n in e["notes"]:
            tr.write_line(f"              {n}")
