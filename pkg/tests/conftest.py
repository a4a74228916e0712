"""Shared fixtures and the acceptance summary hook.

Acceptance tests register one line each through the `acceptance` fixture;
the terminal summary prints them together so the checklist is visible in
every run regardless of verbosity.
"""

import numpy as np
import pytest

from capflash.backend import LatchModel
from capflash.mismatch import nominal_instance
from capflash.topology import build_topology

_ACCEPTANCE_LINES: list[tuple[int, str]] = []


@pytest.fixture(scope="session")
def ideal_topology():
    return build_topology()


@pytest.fixture(scope="session")
def ideal_instance(ideal_topology):
    return nominal_instance(ideal_topology)


@pytest.fixture(scope="session")
def quiet_latch():
    """decide_time/tau ~ 33: v_meta below 1e-14 V, never fires."""
    return LatchModel(regen_tau=15e-12, decide_time=5e-10, relatch_stages=0)


class _AcceptanceRecorder:
    def record(self, criterion: int, passed: bool, detail: str) -> None:
        mark = "PASS" if passed else "FAIL"
        _ACCEPTANCE_LINES.append(
            (criterion, f"[{mark}] criterion {criterion}: {detail}")
        )


@pytest.fixture(scope="session")
def acceptance():
    return _AcceptanceRecorder()


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(_ACCEPTANCE_LINES):
        terminalreporter.write_line(line)


def rng_for_test(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))
