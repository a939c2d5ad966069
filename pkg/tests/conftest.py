import os
from collections import OrderedDict

import pytest

from periodica.pipeline import RiemannSurface

DATA = os.path.join(os.path.dirname(__file__), os.pardir, "data")

CRITERIA = OrderedDict([
    (1, "genus golden set"),
    (2, "Riemann matrix validity and precision doubling"),
    (3, "j-invariants of CM curves"),
    (4, "Riemann-Hurwitz genus equals symplectic genus"),
    (5, "small endomorphism checks"),
    (6, "genus 6 curve with three abelian surface factors"),
    (7, "genus 6 curve with dihedral automorphisms"),
    (8, "Prym configuration"),
    (9, "Macbeath curve"),
    (10, "property suites"),
])

_outcomes: dict = {}


def data_path(name: str) -> str:
    return os.path.join(DATA, name)


def load_curve(name: str):
    with open(data_path(name + ".curve"), encoding="utf-8") as fh:
        src = fh.read()
    diffs = None
    path = data_path(name + ".diffs")
    if os.path.exists(path):
        with open(path, encoding="utf-8") as fh:
            diffs = [ln.split("#", 1)[0].strip() for ln in fh]
        diffs = [d for d in diffs if d]
    return src, diffs


_surfaces: dict = {}


def surface(name: str, prec: int = 100, skeleton=None) -> RiemannSurface:
    """Shared RiemannSurface per (data file, precision) for the whole session."""
    key = (name, prec)
    if key not in _surfaces:
        src, diffs = load_curve(name)
        _surfaces[key] = RiemannSurface(src, prec, diffs, skeleton=skeleton)
    return _surfaces[key]


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    if rep.when == "call" or rep.failed or rep.skipped:
        status = "skip" if rep.skipped else ("pass" if rep.passed else "fail")
        for n in mark.args:
            _outcomes.setdefault(n, []).append((item.name, status))


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n, title in CRITERIA.items():
        got = _outcomes.get(n)
        if not got:
            continue
        statuses = {s for _, s in got}
        if "fail" in statuses:
            verdict = "FAIL"
        elif statuses == {"skip"}:
            verdict = "SKIP"
        else:
            verdict = "PASS"
        bad = [name for name, s in got if s != "pass"]
        extra = f"  ({', '.join(bad)})" if bad and verdict != "PASS" else ""
        tr.write_line(f"criterion {n:2d} {title}: {verdict} [{len(got)} checks]{extra}")
