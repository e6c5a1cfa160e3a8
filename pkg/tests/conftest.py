import pytest

from helpers import FIG5, make_config


@pytest.fixture
def fig5_config():
    return make_config(**FIG5)
