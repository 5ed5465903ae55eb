from fractions import Fraction

import pytest
from hypothesis import settings

from strategies import COIN, coin_measure

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")


@pytest.fixture
def coin():
    return COIN


@pytest.fixture
def fair():
    return coin_measure(Fraction(1, 2))
