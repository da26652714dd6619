import pytest

from cknstab import default_scheme


@pytest.fixture(scope="session")
def scheme():
    return default_scheme()


@pytest.fixture(scope="session")
def fast_scheme():
    return default_scheme(rel_tol=1e-8)
