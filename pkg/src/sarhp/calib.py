"""Radiometric calibration of complex SAR samples to normalized brightness."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

CLIP_DB_MIN = -30.0
CLIP_DB_MAX = 10.0


@dataclass(frozen=True)
class SlcPatch:
    """Complex single-look samples plus the scene calibration factor."""

    samples: np.ndarray
    k_s: float

    def __post_init__(self) -> None:
        if self.k_s <= 0:
            raise ValueError("calibration factor k_s must be positive")
        object.__setattr__(self, "samples", np.asarray(self.samples, dtype=complex))


@dataclass(frozen=True)
class IntensityPatch:
    """Normalized radar brightness in [0, 1]."""

    values: np.ndarray

    def __post_init__(self) -> None:
        vals = np.asarray(self.values, dtype=float)
        if vals.size and (vals.min() < 0.0 or vals.max() > 1.0):
            raise ValueError("intensity values must lie in [0, 1]")
        object.__setattr__(self, "values", vals)


def radar_brightness(patch: SlcPatch) -> np.ndarray:
    """Per-pixel radar brightness in dB: ``10*log10(k_s * |u|^2)``.

    Zero-power pixels, where the logarithm is undefined, are floored at the
    clip minimum (-30 dB) so they survive normalization as exact zeros.
    """
    power = patch.k_s * np.abs(patch.samples) ** 2
    out = np.full(power.shape, CLIP_DB_MIN)
    nonzero = power > 0.0
    out[nonzero] = 10.0 * np.log10(power[nonzero])
    return out


def clip_normalize(db: np.ndarray) -> IntensityPatch:
    """Clip brightness to [-30, +10] dB and map that interval onto [0, 1]."""
    clipped = np.clip(np.asarray(db, dtype=float), CLIP_DB_MIN, CLIP_DB_MAX)
    return IntensityPatch((clipped - CLIP_DB_MIN) / (CLIP_DB_MAX - CLIP_DB_MIN))
