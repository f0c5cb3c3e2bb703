import pytest

import pregsim


@pytest.fixture(scope="session")
def sched():
    return pregsim.default_schedules()


@pytest.fixture(scope="session")
def run_small():
    return pregsim.RunConfig(n_pregnancies=20_000)


@pytest.fixture(scope="session")
def cohort_small(run_small, sched):
    """Null-effect cohort, 20k pregnancies."""
    return pregsim.generate_cohort(run_small, 3, sched)
