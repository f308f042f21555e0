"""Resampling, tiling, spatial splitting and flip augmentation of sample pairs."""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np


@dataclass(frozen=True)
class TileProvenance:
    scene_id: str
    row_off: int
    col_off: int


@dataclass(frozen=True)
class SamplePair:
    """Co-registered intensity/height patch pair, the machine-learning unit."""

    intensity: np.ndarray
    height: np.ndarray
    provenance: TileProvenance

    def __post_init__(self) -> None:
        if self.intensity.shape != self.height.shape:
            raise ValueError("intensity and height members must share dimensions")

    @property
    def size(self) -> tuple[int, int]:
        return self.intensity.shape


@dataclass(frozen=True)
class SplitConfig:
    """Hold-out test rectangles (pixel coords) plus the validation fraction.

    Rectangles are ``(row, col, n_rows, n_cols)`` in the source image frame.
    The validation fraction is consumed downstream by the training loop; the
    spatial split itself only separates train from test.
    """

    test_rects: tuple[tuple[int, int, int, int], ...]
    validation_fraction: float = 0.15

    def __post_init__(self) -> None:
        if not 0.0 <= self.validation_fraction < 1.0:
            raise ValueError("validation fraction must be in [0, 1)")
        for rect in self.test_rects:
            r, c, h, w = rect
            if h <= 0 or w <= 0 or r < 0 or c < 0:
                raise ValueError(f"invalid test rectangle {rect}")


def resample(values: np.ndarray, src_spacing: tuple[float, float], target_gsd: float,
             propagate_nodata: bool = False) -> np.ndarray:
    """Bilinearly resample a raster to a square target spacing.

    ``src_spacing`` is ``(row_m, col_m)``, meters per pixel along each axis.
    Output samples sit at multiples of ``target_gsd`` from the first source
    pixel, covering the source extent.  With ``propagate_nodata`` any NaN
    among a sample's four neighbors makes the output sample NaN (heights);
    without it the input must be NaN-free (intensity).
    """
    values = np.asarray(values, dtype=float)
    sy, sx = src_spacing
    if sy <= 0 or sx <= 0 or target_gsd <= 0:
        raise ValueError("spacings must be positive")
    n_rows, n_cols = values.shape
    out_rows = int(np.floor((n_rows - 1) * sy / target_gsd)) + 1
    out_cols = int(np.floor((n_cols - 1) * sx / target_gsd)) + 1
    if out_rows < 1 or out_cols < 1:
        raise ValueError("resampling would produce an empty raster")

    rows = np.arange(out_rows) * (target_gsd / sy)
    cols = np.arange(out_cols) * (target_gsd / sx)
    r0 = np.clip(np.floor(rows).astype(int), 0, n_rows - 1)
    c0 = np.clip(np.floor(cols).astype(int), 0, n_cols - 1)
    r1 = np.minimum(r0 + 1, n_rows - 1)
    c1 = np.minimum(c0 + 1, n_cols - 1)
    fr = (rows - r0)[:, None]
    fc = (cols - c0)[None, :]

    v00 = values[np.ix_(r0, c0)]
    v01 = values[np.ix_(r0, c1)]
    v10 = values[np.ix_(r1, c0)]
    v11 = values[np.ix_(r1, c1)]
    out = (v00 * (1 - fr) * (1 - fc) + v01 * (1 - fr) * fc
           + v10 * fr * (1 - fc) + v11 * fr * fc)
    if propagate_nodata:
        bad = np.isnan(v00) | np.isnan(v01) | np.isnan(v10) | np.isnan(v11)
        out[bad] = np.nan
    elif np.any(np.isnan(values)):
        raise ValueError("intensity resampling requires a NaN-free input")
    return out


def tile(image: np.ndarray, height_map: np.ndarray, scene_id: str = "scene",
         size: int = 256, overlap: float = 0.5) -> list[SamplePair]:
    """Cut co-registered rasters into fully contained overlapping tiles.

    The stride is ``size * (1 - overlap)``; offsets run over every multiple
    of the stride for which a full tile fits, and trailing remainders are
    dropped.
    """
    if image.shape != height_map.shape:
        raise ValueError("image and height map must share dimensions")
    n_rows, n_cols = image.shape
    if n_rows < size or n_cols < size:
        raise ValueError(f"image {image.shape} is smaller than one {size}x{size} tile")
    stride = int(round(size * (1.0 - overlap)))
    if stride < 1:
        raise ValueError("overlap too large: stride collapses to zero")
    pairs = []
    for row_off in range(0, n_rows - size + 1, stride):
        for col_off in range(0, n_cols - size + 1, stride):
            pairs.append(SamplePair(
                intensity=image[row_off:row_off + size, col_off:col_off + size].copy(),
                height=height_map[row_off:row_off + size, col_off:col_off + size].copy(),
                provenance=TileProvenance(scene_id, row_off, col_off)))
    return pairs


def _intersects(pair: SamplePair, rect: tuple[int, int, int, int]) -> bool:
    size_r, size_c = pair.size
    r0, c0 = pair.provenance.row_off, pair.provenance.col_off
    rr, rc, rh, rw = rect
    return r0 < rr + rh and rr < r0 + size_r and c0 < rc + rw and rc < c0 + size_c


def split(tiles: list[SamplePair], config: SplitConfig):
    """Partition tiles into train and test sets by test-rectangle overlap.

    A tile belongs to the test set iff its pixel footprint intersects any
    test rectangle, so no test pixel ever leaks into a training tile.
    """
    test = [t for t in tiles if any(_intersects(t, r) for r in config.test_rects)]
    test_keys = {id(t) for t in test}
    train = [t for t in tiles if id(t) not in test_keys]
    if not test:
        raise ValueError(
            f"empty test set: no tile out of {len(tiles)} intersects the "
            f"{len(config.test_rects)} test rectangle(s)")
    if not train:
        raise ValueError(
            f"empty train set: all {len(tiles)} tiles intersect the test rectangles")
    return train, test


FLIP_NONE = 0
FLIP_HORIZONTAL = 1   # mirror left-right
FLIP_VERTICAL = 2     # mirror top-bottom


def flip_choice(seed: int, draw_index: int) -> int:
    """Deterministic uniform draw over {identity, horizontal, vertical}."""
    rng = np.random.default_rng([seed, draw_index])
    return int(rng.integers(0, 3))


def apply_flip(values: np.ndarray, choice: int) -> np.ndarray:
    if choice == FLIP_NONE:
        return values.copy()
    if choice == FLIP_HORIZONTAL:
        return np.fliplr(values).copy()
    if choice == FLIP_VERTICAL:
        return np.flipud(values).copy()
    raise ValueError(f"unknown flip choice {choice}")


def flip_augment(pair: SamplePair, seed: int, draw_index: int) -> SamplePair:
    """Mirror the pair at one of the main axes (or not), deterministically.

    The choice depends only on ``(seed, draw_index)`` and is applied
    identically to the intensity and height members, preserving their
    co-registration.
    """
    choice = flip_choice(seed, draw_index)
    return replace(pair,
                   intensity=apply_flip(pair.intensity, choice),
                   height=apply_flip(pair.height, choice))
