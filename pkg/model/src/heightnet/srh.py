"""Minimal reader/writer for the pipeline's SRH1 raster files.

The format is the upstream tooling's external interface: a 64-byte padded
ASCII header ``SRH1 <rows> <cols> <channels> <nodata>`` followed by
row-major little-endian float32 samples.
"""
from __future__ import annotations

import math
import os
import tempfile
from pathlib import Path

import numpy as np

MAGIC = "SRH1"
HEADER_BYTES = 64


def read(path):
    raw = Path(path).read_bytes()
    header = raw[:HEADER_BYTES].decode("ascii", errors="replace").split()
    if len(header) != 5 or header[0] != MAGIC:
        raise ValueError(f"{path}: not an {MAGIC} raster")
    rows, cols, channels = int(header[1]), int(header[2]), int(header[3])
    values = np.frombuffer(raw[HEADER_BYTES:], dtype="<f4").copy()
    values = values.reshape(rows, cols, channels)
    return values[:, :, 0] if channels == 1 else values


def write(path, values: np.ndarray, nodata: float = float("nan")) -> None:
    values = np.asarray(values, dtype=np.float32)
    if values.ndim == 2:
        values = values[:, :, None]
    rows, cols, channels = values.shape
    nodata_text = "nan" if math.isnan(nodata) else repr(float(nodata))
    header = f"{MAGIC} {rows} {cols} {channels} {nodata_text}".ljust(HEADER_BYTES - 1) + "\n"
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(header.encode("ascii"))
            fh.write(values.astype("<f4").tobytes(order="C"))
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
