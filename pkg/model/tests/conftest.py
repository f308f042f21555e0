import numpy as np
import pytest

from heightnet.data import Tile


def blob_tile(seed=0, size=64, tile_id="t", role="train"):
    """Tile with a bright block over raised heights, like a building return."""
    rng = np.random.default_rng(seed)
    intensity = rng.uniform(0.2, 0.4, size=(size, size)).astype(np.float32)
    height = np.zeros((size, size), dtype=np.float32)
    r0, c0 = int(rng.integers(4, size // 2)), int(rng.integers(4, size // 2))
    h = float(rng.uniform(10.0, 30.0))
    intensity[r0:r0 + size // 4, c0:c0 + size // 4] = 0.9
    height[r0:r0 + size // 4, c0:c0 + size // 4] = h
    return Tile(tile_id, role, intensity, height)


@pytest.fixture
def rng():
    return np.random.default_rng(99)
