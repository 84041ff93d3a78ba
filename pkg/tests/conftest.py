import pytest

from circsim.envs import EnvConfig
from circsim.network import builtin_network


@pytest.fixture
def n_s():
    return builtin_network("n_s")


@pytest.fixture
def n_nz():
    return builtin_network("n_nz")


@pytest.fixture
def short_truck():
    """Truck episodes of 20 steps starting at rest at x = 5."""
    return EnvConfig("transport-truck", {"horizon": 20, "x0_min": 5.0, "x0_max": 5.0})


@pytest.fixture
def write_file(tmp_path):
    def _write(name, text):
        path = tmp_path / name
        path.write_text(text)
        return path

    return _write
