"""Shared fixtures for the bihm test suite."""
import pytest

from bihm.model import BihmModel, random_model
from bihm.utils.streams import make_stream


@pytest.fixture
def rng():
    return make_stream(1234)


@pytest.fixture
def zero_model():
    """Factory for all-zero models, for which p and q are uniform and identical."""
    return BihmModel.zeros


@pytest.fixture
def tiny_model():
    """Seeded random model small enough to enumerate."""
    return random_model([4, 3, 2], make_stream(7))
