import numpy as np
import pytest
from hypothesis import settings

from mmwave_hybrid.arrays import ArrayGeometry, Sector
from mmwave_hybrid.channel import ChannelParams

settings.register_profile("default", deadline=None, max_examples=50)
settings.load_profile("default")

SECTOR = Sector.from_degrees(-30, 30, 80, 100)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def params_64x16(spread_deg=7.5, **kw):
    return ChannelParams(ArrayGeometry.upa(8, 8, sector=SECTOR), ArrayGeometry.upa(4, 4),
                         angle_spread=np.deg2rad(spread_deg), **kw)


def crandn(rng, *shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
