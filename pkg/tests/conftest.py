import pytest

from multmean import build_factor_sieve, ramanujan_delta_source


@pytest.fixture(scope="session")
def sieve6():
    return build_factor_sieve(10**6)


@pytest.fixture(scope="session")
def sieve7():
    return build_factor_sieve(10**7, threads=4)


@pytest.fixture(scope="session")
def delta6():
    """(source, table) for the built-in weight-12 form up to 1e6."""
    return ramanujan_delta_source(10**6)
