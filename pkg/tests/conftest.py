import pytest

from qlink.remote import RemoteEnv, Server


@pytest.fixture(scope="session")
def server():
    """A loopback server on an ephemeral port, shared by the whole run."""
    srv = Server(("127.0.0.1", 0)).start()
    yield srv
    srv.close()


@pytest.fixture
def remote(server):
    env = RemoteEnv(*server.address)
    yield env
    env.close()


# -- acceptance report ----------------------------------------------------------------
#
# Tests marked ``@pytest.mark.acceptance(k, title)`` get one PASS/FAIL line
# in the terminal summary, with any ``detail`` recorded via ``record_property``.

_criteria: dict[int, tuple[str, bool, str]] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    if report.when == "call" or (report.when == "setup" and not report.passed):
        number, title = marker.args
        detail = dict(report.user_properties).get("detail", "")
        _criteria[number] = (title, report.passed, detail)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        title, passed, detail = _criteria[number]
        line = f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {title}"
        terminalreporter.write_line(f"{line}  [{detail}]" if detail else line)
