import os
import sys
import random
from fractions import Fraction

import pytest
from hypothesis import HealthCheck, settings

import kernelstat as ks
from kernelstat import io

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

FIXTURE = os.path.join(os.path.dirname(ks.__file__), "data", "bernoulli.json")


@pytest.fixture(scope="session")
def fixture_path():
    return FIXTURE


@pytest.fixture(scope="session")
def model():
    return io.load(FIXTURE)


@pytest.fixture(scope="session")
def model_float():
    return io.load(FIXTURE, "float")


@pytest.fixture
def rng():
    return random.Random(12345)


def bernoulli(thetas=("0.2", "0.5", "0.8"), backend="exact"):
    """Experiment, sum statistic, coin-flip estimator and T/2 estimator."""
    m = io.load(FIXTURE, backend)
    E = m.experiment.restrict(thetas)
    return E, m


def fr(*xs):
    return [Fraction(x) for x in xs]


def pytest_terminal_summary(terminalreporter):
    test_acceptance = sys.modules.get("test_acceptance")
    if test_acceptance is None or not test_acceptance.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number, title in test_acceptance.TITLES.items():
        if number in test_acceptance.RESULTS:
            verdict = "PASS" if test_acceptance.RESULTS[number] else "FAIL"
            terminalreporter.write_line(f"criterion {number:2d}: {verdict}  {title}")
