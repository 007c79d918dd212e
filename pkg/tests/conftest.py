from __future__ import annotations

import functools

import numpy as np
import pytest

from treedet.trees import tree_catalog

_ACCEPTANCE: dict[int, tuple[str, bool, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(number, title): numbered acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("acceptance")
    if mark is None:
        return
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        number, title = mark.args
        detail = dict(item.user_properties).get("detail", "")
        _ACCEPTANCE[number] = (title, rep.passed, detail)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        title, ok, detail = _ACCEPTANCE[number]
        status = "PASS" if ok else "FAIL"
        terminalreporter.write_line(f"criterion {number:>2} {status}: {title}" + (f" [{detail}]" if detail else ""))


@functools.lru_cache(maxsize=None)
def catalog(n_max: int):
    return tuple(tree_catalog(n_max))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
