import pytest

from payroll_ec import load_fixture, parse_document, parse_scenario

ACCEPTANCE: dict[str, tuple[bool, str]] = {}


@pytest.fixture(scope="session")
def fixture_text():
    return load_fixture()


@pytest.fixture(scope="session")
def fixture(fixture_text):
    return parse_document(fixture_text)


@pytest.fixture(scope="session")
def half_hour(fixture):
    """Fixture ruleset with a scenario whose times are multiples of 30."""
    return fixture[0], parse_scenario(load_fixture("half_hour_scenario.tables"))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, (ok, detail) in sorted(ACCEPTANCE.items(), key=_order):
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  criterion {name}: {detail}")


def _order(item):
    label = item[0].split()[0]
    return int(label.rstrip("abc")), label
