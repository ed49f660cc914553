import sys

import pytest

from etr.stack import run_deep


@pytest.hookimpl(hookwrapper=True)
def pytest_pyfunc_call(pyfuncitem):
    """Tests run on the same big-stack thread setup as the command line, so
    recursion behaves identically in both."""
    fn = pyfuncitem.obj
    args = {name: pyfuncitem.funcargs[name] for name in pyfuncitem._fixtureinfo.argnames}
    pyfuncitem.obj = lambda **kw: run_deep(fn, **kw)
    try:
        yield
    finally:
        pyfuncitem.obj = fn


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is not None and mod.LINES:
        terminalreporter.section("acceptance criteria")
        for line in mod.LINES:
            terminalreporter.write_line(line)
