import pytest

from beurling import rational_primes


@pytest.fixture(scope="session")
def rp1e4():
    return rational_primes(10**4)


@pytest.fixture(scope="session")
def rp1e5():
    return rational_primes(10**5)


@pytest.fixture(scope="session")
def rp1e6():
    return rational_primes(10**6)
