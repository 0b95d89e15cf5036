from __future__ import annotations

import pytest

from penalized_fb.energy import PenaltyParams
from penalized_fb.problems import interval_1d
from penalized_fb.solver import solve_penalized


def _solve_interval(eps: float, n: int = 256):
    prob = interval_1d(n=n)
    return prob, solve_penalized(prob.domain, prob.bdata, 2.0, PenaltyParams(eps, prob.alpha))


@pytest.fixture(scope="session")
def interval_eps01():
    return _solve_interval(0.1)


@pytest.fixture(scope="session")
def interval_eps036():
    return _solve_interval(0.36)
