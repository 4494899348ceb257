import math

import pytest

from sta_harmonic.trajectories import ExpansionSpec

# f0 = 250 Hz, ff = 0.25 Hz, tf = 2 ms
BASELINE = ExpansionSpec.from_hz(250.0, 0.25, 0.002)

# frozen with 30-digit mpmath quadrature of the closed-form b(t), n = 0, units of E0(0)
BOUND_BASELINE_E0 = 95.0459873598820362634
POLY_ENERGY_BASELINE_E0 = 135.866176089736839484
POLY_STD_BASELINE_E0 = 194.068904035007032374


@pytest.fixture
def baseline():
    return BASELINE


@pytest.fixture
def identity_spec():
    w = 2 * math.pi * 250.0
    return ExpansionSpec(w, w, 0.002)


# --- acceptance reporting: one PASS/FAIL line per criterion ------------------

_CRITERIA: dict[int, tuple[str, str, str]] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or report.when != "call":
        return
    number, title = mark.args
    detail = getattr(item, "criterion_detail", "")
    status = "PASS" if report.passed else "FAIL"
    _CRITERIA[number] = (status, title, detail)
    print(f"\nCRITERION {number:2d} {status}  {title}  {detail}")


@pytest.fixture
def detail(request):
    """Attach a short measured summary to the criterion line."""
    def record(text: str) -> None:
        request.node.criterion_detail = text
    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        status, title, detail = _CRITERIA[number]
        terminalreporter.write_line(f"{number:2d} {status}  {title}  {detail}")
    passed = sum(1 for s, _, _ in _CRITERIA.values() if s == "PASS")
    terminalreporter.write_line(f"{passed}/{len(_CRITERIA)} criteria passed")
