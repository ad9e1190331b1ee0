import functools

import numpy as np
import pytest

from solitonsphere import constructions as C

# acceptance results collected by tests/test_acceptance.py: {criterion number: (passed, detail)}
ACCEPTANCE = {}


@functools.lru_cache(maxsize=None)
def dirac(N):
    return C.dirac_sphere(N)


@functools.lru_cache(maxsize=None)
def taimanov(n, lam, coeffs=None):
    coeffs = None if coeffs is None else [np.array(c, float) for c in coeffs]
    return C.taimanov_sphere(list(n), list(lam), coeffs)


@functools.lru_cache(maxsize=None)
def catenoid(mu):
    return C.catenoid_cousin(mu)


A_NULL = np.array([[0, 0, 0, 0], [1, 0, 1, 0]], float)  # e2 + e2 j
A_NONNULL = np.array([[-1, 0, 0, 0], [1, 0, 0, 0]], float)  # -e1 + e2


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
