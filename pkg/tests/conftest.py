import pytest

from kwheel.coeffrings import builtin_kp2


@pytest.fixture(scope="session")
def kp2():
    return builtin_kp2()


ACCEPTANCE: dict[int, str] = {}


def record_acceptance(number: int, ok: bool, elapsed: float, limit: float, detail: str) -> str:
    """Store and return the report line for one acceptance criterion."""
    verdict = "PASS" if ok and elapsed < limit else "FAIL"
    line = f"criterion {number}: {verdict} ({elapsed:.2f}s of {limit:g}s) {detail}"
    ACCEPTANCE[number] = line
    print(line)
    return line


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance")
        for number in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[number])
