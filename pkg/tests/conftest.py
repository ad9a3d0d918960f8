import json
import time
from pathlib import Path

import numpy as np
import pytest

from fastjacobi import JacobiParams, build_phase_expansion

ORACLE_FILE = Path(__file__).parent / "oracles" / "values.json"

_ACCEPTANCE: dict[int, str] = {}


def record_acceptance(number: int, name: str, ok: bool, detail: str) -> None:
    _ACCEPTANCE[number] = f"[{'PASS' if ok else 'FAIL'}] criterion {number:2d}: {name} ({detail})"


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        terminalreporter.write_line(_ACCEPTANCE[number])


def best_times(fns, repeats=3):
    """Minimum wall time of each callable, with the runs interleaved."""
    best = [float("inf")] * len(fns)
    for _ in range(repeats):
        for i, fn in enumerate(fns):
            t0 = time.perf_counter()
            fn()
            best[i] = min(best[i], time.perf_counter() - t0)
    return best


@pytest.fixture(scope="session")
def oracles():
    """High-precision values frozen by tests/oracles/make_oracles.py."""
    return json.loads(ORACLE_FILE.read_text())


_EXPANSIONS: dict = {}


def expansion(a: float, b: float, nmax: int):
    """Session-wide cache of phase expansions."""
    key = (a, b, nmax)
    if key not in _EXPANSIONS:
        _EXPANSIONS[key] = build_phase_expansion(JacobiParams(a, b), nmax)
    return _EXPANSIONS[key]


@pytest.fixture(scope="session")
def exp1024():
    return expansion(-0.25, 1 / 3, 1024)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
