"""Shared fixtures: curves, charts and suspensions are built once per session."""
import os
import time

import pytest
from hypothesis import HealthCheck, settings

from billiardlab import boundary, lazutkin
from billiardlab.suspension import SuspensionConfig, suspend

settings.register_profile(
    "default", max_examples=40, deadline=None, suppress_health_check=[HealthCheck.function_scoped_fixture]
)
settings.register_profile("ci", max_examples=200, deadline=None,
                          suppress_health_check=[HealthCheck.function_scoped_fixture])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture(scope="session")
def circle_curve():
    return boundary.circle()


@pytest.fixture(scope="session")
def oval_curve():
    return boundary.oval(0.3, 2)


@pytest.fixture(scope="session")
def circle_chart(circle_curve):
    return lazutkin.build_chart(circle_curve)


@pytest.fixture(scope="session")
def oval_chart(oval_curve):
    return lazutkin.build_chart(oval_curve)


@pytest.fixture(scope="session")
def default_config():
    return SuspensionConfig()


BUILD_SECONDS = {}


def _timed_suspend(name, chart, config):
    t0 = time.perf_counter()
    susp = suspend(chart, config)
    BUILD_SECONDS[name] = time.perf_counter() - t0
    return susp


@pytest.fixture(scope="session")
def circle_suspension(circle_chart, default_config):
    return _timed_suspend("circle", circle_chart, default_config)


@pytest.fixture(scope="session")
def oval_suspension(oval_chart, default_config):
    return _timed_suspend("oval", oval_chart, default_config)


@pytest.fixture(scope="session")
def build_seconds():
    """Wall time spent building each session suspension."""
    return BUILD_SECONDS
