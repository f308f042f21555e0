"""Bit-exact file formats tying the pipeline stages together.

Raster format ``SRH1``: a 64-byte space-padded ASCII header line

    SRH1 <n_rows> <n_cols> <n_channels> <nodata>\\n

followed by row-major little-endian 32-bit floats (channel-interleaved for
multi-channel data).  The nodata sentinel defaults to NaN.

Metadata format: flat ``key = value`` text, one entry per line, ``#`` for
comments; array values are whitespace-separated.

All writers are atomic (temp file in the target directory, then rename).
"""
from __future__ import annotations

import math
import os
import tempfile
from pathlib import Path

import numpy as np

from .errors import FormatError

MAGIC = "SRH1"
HEADER_BYTES = 64


def atomic_write_bytes(path, data: bytes) -> None:
    """Write via a temp file in the target directory, then rename."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_raster(path, values: np.ndarray, nodata: float = float("nan")) -> None:
    """Write a (rows, cols) or (rows, cols, channels) array as SRH1."""
    values = np.asarray(values)
    if values.ndim == 2:
        values = values[:, :, None]
    if values.ndim != 3:
        raise FormatError("raster must be 2-D or 3-D (rows, cols, channels)")
    n_rows, n_cols, n_ch = values.shape
    nodata_text = "nan" if math.isnan(nodata) else repr(float(nodata))
    header = f"{MAGIC} {n_rows} {n_cols} {n_ch} {nodata_text}"
    if len(header) > HEADER_BYTES - 1:
        raise FormatError("header does not fit in 64 bytes")
    header = header.ljust(HEADER_BYTES - 1) + "\n"
    payload = values.astype("<f4").tobytes(order="C")
    atomic_write_bytes(Path(path), header.encode("ascii") + payload)


def read_raster(path):
    """Read an SRH1 raster; returns ``(values, nodata)``.

    Single-channel rasters come back 2-D, multi-channel ones 3-D.
    """
    raw = Path(path).read_bytes()
    if len(raw) < HEADER_BYTES:
        raise FormatError(f"{path}: truncated header")
    header = raw[:HEADER_BYTES].decode("ascii", errors="replace")
    parts = header.split()
    if len(parts) != 5 or parts[0] != MAGIC:
        raise FormatError(f"{path}: not an {MAGIC} raster")
    try:
        n_rows, n_cols, n_ch = int(parts[1]), int(parts[2]), int(parts[3])
        nodata = float(parts[4])
    except ValueError as exc:
        raise FormatError(f"{path}: bad header fields: {exc}") from exc
    expected = n_rows * n_cols * n_ch * 4
    payload = raw[HEADER_BYTES:]
    if len(payload) != expected:
        raise FormatError(f"{path}: expected {expected} payload bytes, found {len(payload)}")
    values = np.frombuffer(payload, dtype="<f4").reshape(n_rows, n_cols, n_ch)
    if n_ch == 1:
        values = values[:, :, 0]
    return np.array(values), nodata


def write_complex_raster(path, samples: np.ndarray) -> None:
    """Store complex samples as a two-channel (re, im) SRH1 raster."""
    samples = np.asarray(samples)
    stacked = np.stack([samples.real, samples.imag], axis=-1)
    write_raster(path, stacked, nodata=float("nan"))


def read_complex_raster(path) -> np.ndarray:
    values, _ = read_raster(path)
    if values.ndim != 3 or values.shape[2] != 2:
        raise FormatError(f"{path}: complex raster needs exactly 2 channels")
    return values[:, :, 0].astype(np.float64) + 1j * values[:, :, 1].astype(np.float64)


# ---------------------------------------------------------------------------
# Key-value metadata
# ---------------------------------------------------------------------------

def format_value(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, (list, tuple, np.ndarray)):
        return " ".join(format_value(v) for v in value)
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    raise FormatError(f"cannot serialize metadata value of type {type(value)}")


def write_metadata(path, entries: dict) -> None:
    lines = [f"{key} = {format_value(value)}" for key, value in entries.items()]
    atomic_write_bytes(Path(path), ("\n".join(lines) + "\n").encode("utf-8"))


def read_metadata(path) -> dict[str, str]:
    entries: dict[str, str] = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise FormatError(f"{path}:{lineno}: expected 'key = value'")
        key, _, value = stripped.partition("=")
        entries[key.strip()] = value.strip()
    return entries


def meta_float(entries: dict[str, str], key: str) -> float:
    try:
        return float(entries[key])
    except KeyError as exc:
        raise FormatError(f"missing metadata key '{key}'") from exc
    except ValueError as exc:
        raise FormatError(f"metadata key '{key}' is not a number: {entries[key]!r}") from exc


def meta_int(entries: dict[str, str], key: str) -> int:
    value = meta_float(entries, key)
    if value != int(value):
        raise FormatError(f"metadata key '{key}' is not an integer: {value}")
    return int(value)


def meta_floats(entries: dict[str, str], key: str) -> list[float]:
    try:
        return [float(token) for token in entries[key].split()]
    except KeyError as exc:
        raise FormatError(f"missing metadata key '{key}'") from exc
    except ValueError as exc:
        raise FormatError(f"metadata key '{key}' has non-numeric entries") from exc
