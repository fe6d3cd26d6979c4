import os
from functools import lru_cache

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from trainsep import scenarios as sc
from trainsep.realistic import evaluate_fleet

settings.register_profile(
    "default", max_examples=20, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

# clearance times after one descent step, rounded to whole seconds
STEP_H = np.array([505, 841, 1412, 1664, 2107, 2970, 2258, 2580, 3858, 3213, 3458, 4703], dtype=float)


@lru_cache(maxsize=None)
def _fleet(key):
    h = sc.WEIGHTED_OPTIMUM_H if key == "weighted" else STEP_H
    return evaluate_fleet(sc.buffered_table(), h, sc.reference_trains(), sc.POSITIONS)


@pytest.fixture(scope="session")
def fleet_weighted():
    """Realistic fleet evaluation at the rounded weighted constant-speed optimum."""
    return _fleet("weighted")


@pytest.fixture(scope="session")
def fleet_step():
    """Realistic fleet evaluation after one descent step."""
    return _fleet("step")


def assert_closure(strategy, tol=1e-6):
    """Phases cover the segment exactly and hit every prescribed time."""
    spec = strategy.spec
    assert abs(strategy.total_distance() - (spec.boundaries[-1] - spec.boundaries[0])) < tol
    assert np.allclose(strategy.section_times(), spec.times, atol=tol, rtol=0)
    for a, b in zip(strategy.phases[:-1], strategy.phases[1:]):
        assert abs(a.x_end - b.x_start) < tol
        assert abs(a.t_end - b.t_start) < tol
        assert abs(a.v_end - b.v_start) < tol
