import pytest

# Filled by tests/test_acceptance.py: criterion id -> (status, detail).
ACCEPTANCE = {}


def record(cid, status, detail):
    ACCEPTANCE[cid] = (status, detail)


@pytest.hookimpl(trylast=True)
def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for cid in sorted(ACCEPTANCE, key=lambda c: (int(c.rstrip("ab")), c)):
        status, detail = ACCEPTANCE[cid]
        terminalreporter.write_line(f"{status:4} criterion {cid}: {detail}")
