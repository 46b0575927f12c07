import pytest

from randfeat.activation import build_registry
from randfeat.representation import build_mollifier


@pytest.fixture(scope="session")
def registry():
    return build_registry()


@pytest.fixture(scope="session")
def mollifier():
    return build_mollifier()
