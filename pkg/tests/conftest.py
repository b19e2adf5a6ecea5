import random

import pytest

from proxileak.geo import GeoPoint


@pytest.fixture
def bcn() -> GeoPoint:
    return GeoPoint(41.3851, 2.1734)


@pytest.fixture
def rng() -> random.Random:
    return random.Random(0xC0FFEE)
