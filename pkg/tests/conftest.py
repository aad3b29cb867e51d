import os

import pytest
from hypothesis import settings

# quadrature-backed properties have uneven first-call cost (cache warm-up)
settings.register_profile("uavmeta", deadline=None, max_examples=40, derandomize=True)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "uavmeta"))

# criterion number -> list of (check name, passed, detail)
_CRITERIA = {}


@pytest.fixture
def record():
    """Log one acceptance check; the summary prints a line per criterion."""

    def log(n, name, ok, detail=""):
        _CRITERIA.setdefault(n, []).append((name, bool(ok), detail))
        return bool(ok)

    return log


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        checks = _CRITERIA[n]
        ok = all(c[1] for c in checks)
        tr.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  "
                      f"({sum(c[1] for c in checks)}/{len(checks)} checks)")
        for name, passed, detail in checks:
            if not passed:
                tr.write_line(f"    failed: {name} {detail}")
