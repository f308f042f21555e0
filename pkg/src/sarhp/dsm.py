"""Point-cloud flattening and height-datum shifting for surface models.

Converts 3D survey point clouds into 2.5D max-sampled rasters, cleans
isolated pillars (lamp posts, signs) with a nodata-aware median filter, and
shifts normal heights to ellipsoidal heights by a constant undulation.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .types import DemRaster, Vec3


@dataclass(frozen=True)
class PointCloud:
    """Unordered 3D points ``(x, y, h)`` with normal heights in meters."""

    points: np.ndarray

    def __post_init__(self) -> None:
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 3:
            raise ValueError("points must be an Nx3 array of (x, y, h)")
        if pts.size and not np.all(np.isfinite(pts)):
            raise ValueError("point coordinates must be finite")
        object.__setattr__(self, "points", pts)

    def __len__(self) -> int:
        return self.points.shape[0]


@dataclass(frozen=True)
class GeoidShift:
    """Constant geoid undulation (meters) valid across the working area."""

    undulation: float

    def __post_init__(self) -> None:
        if not abs(self.undulation) < 120.0:
            raise ValueError("geoid undulation must satisfy |undulation| < 120 m")


def rasterize_max(cloud: PointCloud, cell: float = 0.5,
                  extent: tuple[float, float, float, float] | None = None) -> DemRaster:
    """Sample a point cloud onto a grid keeping the maximum height per cell.

    ``extent`` is ``(x_min, y_min, x_max, y_max)``; when omitted it is taken
    from the cloud's bounding box.  Points outside the extent are ignored;
    cells containing no points become nodata.  The raster origin is the
    center of the lower-left cell, matching the grid-vertex convention of
    :class:`~sarhp.types.DemRaster`.
    """
    if cell <= 0:
        raise ValueError("cell size must be positive")
    if len(cloud) == 0:
        raise ValueError("cannot rasterize an empty point cloud")
    pts = cloud.points
    if extent is None:
        x_min, y_min = pts[:, 0].min(), pts[:, 1].min()
        x_max, y_max = pts[:, 0].max(), pts[:, 1].max()
    else:
        x_min, y_min, x_max, y_max = extent
        if not (x_max > x_min and y_max > y_min):
            raise ValueError("extent must have positive size")
    n_cols = max(1, int(np.ceil((x_max - x_min) / cell - 1e-12)))
    n_rows = max(1, int(np.ceil((y_max - y_min) / cell - 1e-12)))
    col = np.floor((pts[:, 0] - x_min) / cell).astype(int)
    row = np.floor((pts[:, 1] - y_min) / cell).astype(int)
    # points exactly on the upper extent edge belong to the last cell
    col = np.where((col == n_cols) & (pts[:, 0] <= x_max), n_cols - 1, col)
    row = np.where((row == n_rows) & (pts[:, 1] <= y_max), n_rows - 1, row)
    inside = (col >= 0) & (col < n_cols) & (row >= 0) & (row < n_rows)
    heights = np.full((n_rows, n_cols), -np.inf)
    np.maximum.at(heights, (row[inside], col[inside]), pts[inside, 2])
    heights[~np.isfinite(heights)] = np.nan
    origin = Vec3(x_min + cell / 2.0, y_min + cell / 2.0, 0.0)
    return DemRaster(origin=origin, cell=cell, heights=heights)


def median_filter(raster: DemRaster, k: int = 3) -> DemRaster:
    """Replace each valid cell by the median of valid values in its k x k window.

    Nodata cells stay nodata and do not contribute to neighborhood medians;
    windows are clipped at the raster border.  ``k`` must be odd and >= 3.
    """
    if k < 3 or k % 2 == 0:
        raise ValueError("window size must be odd and >= 3")
    pad = k // 2
    work = np.where(raster.valid_mask(), raster.heights, np.nan)
    padded = np.pad(work, pad, mode="constant", constant_values=np.nan)
    windows = np.lib.stride_tricks.sliding_window_view(padded, (k, k))
    with np.errstate(all="ignore"):
        med = np.nanmedian(windows.reshape(windows.shape[0], windows.shape[1], -1), axis=2)
    out = np.where(raster.valid_mask(), med, np.nan)
    return DemRaster(origin=raster.origin, cell=raster.cell, heights=out)


def to_ellipsoidal(raster: DemRaster, shift: GeoidShift) -> DemRaster:
    """Add the geoid undulation to every valid height; nodata is preserved."""
    out = np.where(raster.valid_mask(), raster.heights + shift.undulation, np.nan)
    return DemRaster(origin=raster.origin, cell=raster.cell, heights=out)
