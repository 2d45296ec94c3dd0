import pytest

_ACCEPTANCE: dict[str, str] = {}


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    if "acceptance" not in report.keywords:
        return
    title = report.nodeid.split("::")[-1]
    _ACCEPTANCE[title] = "PASS" if report.outcome == "passed" else "FAIL"


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for title in sorted(_ACCEPTANCE, key=_order):
        terminalreporter.write_line(f"{_ACCEPTANCE[title]}  {title}")


def _order(title: str):
    digits = "".join(ch for ch in title.split("_")[1] if ch.isdigit()) if title.startswith("test_c") else ""
    return (int(digits) if digits else 99, title)


@pytest.fixture(scope="session")
def p2_classical():
    from fockdyn.space import SpaceParams

    return SpaceParams(2, 0.5, 2)
