import os
import sys

import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, os.path.dirname(__file__))

settings.register_profile("default", max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture(scope="session")
def sys23():
    from epzeros.qf import character_system, enumerate_classes

    return character_system(enumerate_classes(-23))


@pytest.fixture(scope="session")
def sys39():
    from epzeros.qf import system_for_form

    return system_for_form((1, 1, 10))


@pytest.fixture(scope="session")
def table23(sys23):
    from epzeros.qf import build_euler_table

    return build_euler_table(sys23, 10**4)


@pytest.fixture(scope="session")
def table39(sys39):
    from epzeros.qf import build_euler_table

    return build_euler_table(sys39, 10**4)


@pytest.fixture(scope="session")
def ctxs23(sys23):
    from epzeros.lfun import class_contexts

    return class_contexts(sys23, t_max=2100.0)


# one line per acceptance criterion, collected by tests/test_acceptance.py
ACCEPTANCE: list = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
