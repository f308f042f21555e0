"""Core data carriers shared by the geometry, synthesis and pipeline modules.

These classes hold data only.  All algorithms operating on them live in
:mod:`sarhp.geometry` (forward projector) and :mod:`sarhp.synth` (scene
generator and the independent brute-force oracle), which deliberately share
nothing beyond these containers.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class Vec3:
    """Point or direction in the Earth-fixed Cartesian working frame, meters."""

    x: float
    y: float
    z: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.x) and math.isfinite(self.y) and math.isfinite(self.z)):
            raise ValueError(f"Vec3 components must be finite, got {(self.x, self.y, self.z)}")

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z], dtype=float)

    @staticmethod
    def from_array(a) -> "Vec3":
        a = np.asarray(a, dtype=float)
        return Vec3(float(a[0]), float(a[1]), float(a[2]))

    def norm(self) -> float:
        return math.hypot(self.x, self.y, self.z)


@dataclass(frozen=True)
class SensorStateSample:
    """Sensor position/velocity at mission time ``t`` (seconds)."""

    t: float
    position: Vec3
    velocity: Vec3

    def __post_init__(self) -> None:
        if self.velocity.norm() == 0.0:
            raise ValueError("sensor velocity must be nonzero")


class OrbitTrack:
    """Time-ordered sequence of sensor state samples.

    Requires at least two samples with strictly increasing times.  Exposes
    the raw sample arrays so both the projector and the independent oracle
    can interpolate with their own schemes.
    """

    def __init__(self, samples: list[SensorStateSample]):
        if len(samples) < 2:
            raise ValueError("an orbit track needs at least 2 samples")
        times = np.array([s.t for s in samples], dtype=float)
        if not np.all(np.diff(times) > 0):
            raise ValueError("orbit sample times must be strictly increasing")
        self.samples = list(samples)
        self.times = times
        self.positions = np.array([s.position.as_array() for s in samples])
        self.velocities = np.array([s.velocity.as_array() for s in samples])

    @property
    def t_start(self) -> float:
        return float(self.times[0])

    @property
    def t_end(self) -> float:
        return float(self.times[-1])

    def __len__(self) -> int:
        return len(self.samples)

    def __repr__(self) -> str:
        return f"OrbitTrack({len(self.samples)} samples, t=[{self.t_start}, {self.t_end}])"


@dataclass(frozen=True)
class SlantRangeGrid:
    """Timing/range layout of a slant-range raster.

    Row ``i`` is acquired at ``t0 + i*dt``; column ``j`` sits at slant range
    ``r_near + j*dr``.
    """

    t0: float
    dt: float
    r_near: float
    dr: float
    n_az: int
    n_rg: int

    def __post_init__(self) -> None:
        if self.dt <= 0 or self.dr <= 0:
            raise ValueError("dt and dr must be positive")
        if self.r_near <= 0:
            raise ValueError("r_near must be positive")
        if self.n_az < 1 or self.n_rg < 1:
            raise ValueError("grid must contain at least one pixel")

    def row_time(self, i) -> float:
        return self.t0 + np.asarray(i) * self.dt

    def col_range(self, j) -> float:
        return self.r_near + np.asarray(j) * self.dr

    @property
    def t_last(self) -> float:
        return self.t0 + (self.n_az - 1) * self.dt


@dataclass
class DemRaster:
    """2.5D gridded surface model.

    Grid vertices sit at cell centers ``(origin.x + col*cell,
    origin.y + row*cell)``; the vertex's height above the ellipsoid is
    ``origin.z + heights[row, col]`` (the anchor's z is normally zero, so
    the stored values are the ellipsoidal heights).  ``nodata`` marks empty
    cells (NaN by default); every other cell is finite.
    """

    origin: Vec3
    cell: float
    heights: np.ndarray
    nodata: float = float("nan")

    def __post_init__(self) -> None:
        self.heights = np.asarray(self.heights, dtype=float)
        if self.cell <= 0:
            raise ValueError("cell size must be positive")
        if self.heights.ndim != 2:
            raise ValueError("heights must be a 2-D array")
        valid = self.valid_mask()
        if not np.all(np.isfinite(self.heights[valid])):
            raise ValueError("non-nodata heights must be finite")

    def valid_mask(self) -> np.ndarray:
        if math.isnan(self.nodata):
            return ~np.isnan(self.heights)
        return self.heights != self.nodata

    @property
    def n_rows(self) -> int:
        return self.heights.shape[0]

    @property
    def n_cols(self) -> int:
        return self.heights.shape[1]

    def x_coords(self) -> np.ndarray:
        return self.origin.x + np.arange(self.n_cols) * self.cell

    def y_coords(self) -> np.ndarray:
        return self.origin.y + np.arange(self.n_rows) * self.cell


@dataclass
class HeightRaster:
    """Height map laid out like the SAR image (n_az rows x n_rg columns)."""

    heights: np.ndarray
    nodata: float = float("nan")

    def __post_init__(self) -> None:
        self.heights = np.asarray(self.heights, dtype=float)
        if self.heights.ndim != 2:
            raise ValueError("heights must be a 2-D array")
        if not np.all(np.isfinite(self.heights[self.valid_mask()])):
            raise ValueError("non-nodata heights must be finite")

    def valid_mask(self) -> np.ndarray:
        if math.isnan(self.nodata):
            return ~np.isnan(self.heights)
        return self.heights != self.nodata

    @property
    def shape(self) -> tuple[int, int]:
        return self.heights.shape
