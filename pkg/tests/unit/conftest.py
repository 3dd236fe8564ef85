# tests/unit/conftest.py
import random

import pytest

from services.hashing_service import HashMode, counting_scope, hash_leaf
from tests.context import FixedClock, numbered_payloads


@pytest.fixture
def rng():
    return random.Random(0x5EED)


@pytest.fixture
def hash_scope():
    with counting_scope() as counter:
        yield counter


@pytest.fixture
def clock():
    return FixedClock()


@pytest.fixture(params=[HashMode.PLAIN, HashMode.DOMAIN_SEPARATED], ids=["plain", "domsep"])
def mode(request):
    return request.param


@pytest.fixture
def make_leaves():
    def _make(n, mode=HashMode.PLAIN):
        return [hash_leaf(p, mode) for p in numbered_payloads(n)]
    return _make
