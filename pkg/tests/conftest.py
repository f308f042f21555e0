import numpy as np
import pytest

from sarhp.types import DemRaster, OrbitTrack, SensorStateSample, Vec3


def straight_track(x=0.0, y0=-500.0, z=5000.0, speed=100.0, t0=-10.0, t1=10.0, step=1.0):
    """Constant-velocity track along +y; exact for any sane interpolation."""
    times = np.arange(t0, t1 + step / 2, step)
    return OrbitTrack([
        SensorStateSample(t=float(t),
                          position=Vec3(x, y0 + speed * (float(t) - t0), z),
                          velocity=Vec3(0.0, speed, 0.0))
        for t in times])


def flat_dem(height=0.0, n_rows=32, n_cols=32, cell=1.0, origin=(0.5, 0.5)):
    return DemRaster(origin=Vec3(origin[0], origin[1], 0.0), cell=cell,
                     heights=np.full((n_rows, n_cols), float(height)))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
