import random

import pytest

from sidhlab.field import FieldParams, Fp2Field
from sidhlab.protocol import bundled_params


@pytest.fixture(scope="session")
def toy():
    return bundled_params("toy431")


@pytest.fixture(scope="session")
def p434():
    return bundled_params("p434")


@pytest.fixture(scope="session")
def F431():
    return Fp2Field(FieldParams.from_exponents(4, 3))


@pytest.fixture
def rng():
    return random.Random(2026)
