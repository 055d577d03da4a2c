"""Shared fixtures plus the whole-suite runtime cap."""

import time

import numpy as np
import pytest

from mec_priority_pricing import Scenario, SystemParams, UserProfile

SUITE_CAP_S = 300.0
_t0 = None


def pytest_sessionstart(session):
    global _t0
    _t0 = time.perf_counter()


def pytest_sessionfinish(session, exitstatus):
    dur = time.perf_counter() - _t0
    print(f"\nfull suite runtime: {dur:.1f}s (cap {SUITE_CAP_S:.0f}s)")
    if dur > SUITE_CAP_S and exitstatus == 0:
        print("FAIL: suite runtime cap exceeded")
        session.exitstatus = 1


@pytest.fixture(scope="session")
def params() -> SystemParams:
    return SystemParams()


def make_scenario(params, n=20, seed=0, c_h=0.9, c_l=0.1,
                  r_min=10.0, r_max=75.0) -> Scenario:
    """Half class-H / half class-L population, uniform on [r_min, r_max]."""
    rng = np.random.default_rng(seed)
    d = rng.uniform(r_min, r_max, n)
    users = [UserProfile.make(i, float(d[i]), c_h if i < n // 2 else c_l,
                              params)
             for i in range(n)]
    return Scenario(params=params, users=tuple(users))


@pytest.fixture(scope="session")
def small_scn(params) -> Scenario:
    return make_scenario(params, n=20, seed=0)


@pytest.fixture(scope="session")
def two_user_scn(params) -> Scenario:
    users = (UserProfile.make(0, 30.0, 0.9, params),
             UserProfile.make(1, 50.0, 0.1, params))
    return Scenario(params=params, users=users)
