import pytest

from confform import build_operators, generate_torus_with_hole


@pytest.fixture(scope="session")
def torus():
    return generate_torus_with_hole(2.0, 0.7, 24, 12, 6)


@pytest.fixture(scope="session")
def torus_ops(torus):
    return build_operators(torus)


@pytest.fixture(scope="session")
def coarse_ops():
    return build_operators(generate_torus_with_hole(2.0, 0.7, 8, 8, 6))


@pytest.fixture(scope="session")
def torus24_ops():
    return build_operators(generate_torus_with_hole(2.0, 0.7, 24, 24, 6))


# -- acceptance summary: one PASS/FAIL line per criterion -------------------------

_ACCEPTANCE = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, name): numbered acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or rep.when != "call" and not (rep.when == "setup" and rep.failed):
        return
    n, name = mark.args
    measured = dict(item.user_properties).get("measured", "")
    _ACCEPTANCE[n] = ("PASS" if rep.passed else "FAIL", name, measured)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_ACCEPTANCE):
        status, name, measured = _ACCEPTANCE[n]
        terminalreporter.write_line(f"{status} criterion {n:2d} {name}" + (f": {measured}" if measured else ""))
