from __future__ import annotations

import pytest
from hypothesis import HealthCheck, settings

from jamison.groups import GroupDescriptor

settings.register_profile("default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def Z():
    return GroupDescriptor(1, ())


@pytest.fixture
def Z2():
    return GroupDescriptor(2, ())


@pytest.fixture
def Zoo():
    return GroupDescriptor("countable", ())


@pytest.fixture(autouse=True)
def _no_cache(monkeypatch):
    monkeypatch.delenv("JAMISON_CACHE_DIR", raising=False)


ACCEPTANCE: list[str] = []


@pytest.fixture
def verdict_line(request):
    """Record and print one PASS/FAIL line for an acceptance criterion."""
    lines = []

    def report(n: int, ok: bool, detail: str):
        line = f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
        lines.append(line)
        ACCEPTANCE.append(line)
        with request.config.pluginmanager.get_plugin("capturemanager").global_and_fixture_disabled():
            print("\n" + line)
        return ok

    return report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE):
            terminalreporter.write_line(line)
