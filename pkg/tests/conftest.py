import os

import pytest
from hypothesis import settings

settings.register_profile("default", deadline=None, max_examples=50)
settings.load_profile("default")


def pytest_collection_modifyitems(config, items):
    if os.environ.get("FLYRL_LONG") == "1":
        return
    skip = pytest.mark.skip(reason="long-running; set FLYRL_LONG=1")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)


def pytest_configure(config):
    # acceptance verdicts, one line per criterion, printed at the end of the run
    config.acceptance = {}


def pytest_terminal_summary(terminalreporter, config):
    if not config.acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for k in ("1", "2", "3a", "3b", "4", "5", "6", "7", "8", "9"):
        terminalreporter.write_line(config.acceptance.get(k, f"criterion {k}: not run"))
