import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

FIXTURES = Path(__file__).parent / "fixtures"

# criterion number -> (title, all phases passed so far)
_criteria: dict[int, list] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion checked by this test")


def pytest_collection_modifyitems(items):
    for item in items:
        mark = item.get_closest_marker("criterion")
        if mark is not None:
            number, title = mark.args
            _criteria.setdefault(number, [title, True, 0])
            item.user_properties.append(("criterion", number))


def pytest_runtest_logreport(report):
    for key, number in report.user_properties:
        if key != "criterion":
            continue
        entry = _criteria[number]
        if report.when == "call":
            entry[2] += 1
        if report.failed or (report.when == "call" and report.skipped):
            entry[1] = False


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        title, ok, ran = _criteria[number]
        status = "PASS" if ok and ran else "FAIL"
        terminalreporter.write_line(f"{status}  criterion {number}: {title}")
