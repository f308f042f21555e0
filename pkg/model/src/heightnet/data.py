"""Tile manifest loading and the deterministic flip-augmentation contract."""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import srh


@dataclass(frozen=True)
class Tile:
    tile_id: str
    role: str
    intensity: np.ndarray
    height: np.ndarray


def load_manifest(manifest_path) -> list[Tile]:
    """Read a pipeline manifest and its referenced tile rasters."""
    manifest_path = Path(manifest_path)
    base = manifest_path.parent
    tiles = []
    for line in manifest_path.read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        tile_id, role, _row, _col, int_file, hgt_file = line.split()
        tiles.append(Tile(
            tile_id=tile_id,
            role=role,
            intensity=np.asarray(srh.read(base / int_file), dtype=np.float32),
            height=np.asarray(srh.read(base / hgt_file), dtype=np.float32)))
    if not tiles:
        raise ValueError(f"{manifest_path}: no tiles listed")
    return tiles


def flip_choice(seed: int, draw_index: int) -> int:
    """Draw from {0: identity, 1: left-right, 2: up-down}, uniformly.

    This mirrors the data-preparation pipeline's augmentation contract:
    the choice is a pure function of (seed, draw_index).
    """
    return int(np.random.default_rng([seed, draw_index]).integers(0, 3))


def apply_flip(values: np.ndarray, choice: int) -> np.ndarray:
    if choice == 0:
        return values
    if choice == 1:
        return np.ascontiguousarray(np.fliplr(values))
    if choice == 2:
        return np.ascontiguousarray(np.flipud(values))
    raise ValueError(f"unknown flip choice {choice}")
