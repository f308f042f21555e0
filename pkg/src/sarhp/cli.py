"""Command-line pipeline: synth -> project -> calibrate -> make-dataset -> eval.

Each command validates its inputs, writes outputs atomically, exits 0 iff
all outputs were written, and reports failures as a single machine-parsable
line ``sarhp-error: <message>`` on stderr.  Verbosity is controlled by the
``SARHP_LOG`` environment variable (DEBUG/INFO/WARNING/ERROR).
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import calib, dataset, formats, metrics
from .errors import SarhpError
from .geometry import project_heights
from .synth import SceneSpec, gen_scene_full, oracle_project
from .types import DemRaster, OrbitTrack, SensorStateSample, SlantRangeGrid, Vec3

log = logging.getLogger("sarhp")

DEM_FILE = "dem.srh"
SLC_FILE = "slc.srh"
META_FILE = "scene.meta"
INTENSITY_FILE = "intensity.srh"
HEIGHTS_FILE = "heights.srh"
ORACLE_FILE = "heights_oracle.srh"
MANIFEST_FILE = "manifest.txt"


@dataclass
class SceneMetadata:
    """Everything a scene directory needs to rerun the pipeline stages."""

    k_s: float
    grid: SlantRangeGrid
    track: OrbitTrack
    up_hint: Vec3
    dem_origin: Vec3
    dem_cell: float
    az_spacing: float
    rg_spacing: float
    test_rects: tuple[tuple[int, int, int, int], ...]
    validation_fraction: float
    scene_id: str

    @staticmethod
    def load(scene_dir: Path) -> "SceneMetadata":
        meta_path = scene_dir / META_FILE
        if not meta_path.exists():
            raise SarhpError(f"missing metadata file {meta_path}")
        entries = formats.read_metadata(meta_path)
        grid = SlantRangeGrid(
            t0=formats.meta_float(entries, "grid_t0"),
            dt=formats.meta_float(entries, "grid_dt"),
            r_near=formats.meta_float(entries, "grid_r_near"),
            dr=formats.meta_float(entries, "grid_dr"),
            n_az=formats.meta_int(entries, "grid_n_az"),
            n_rg=formats.meta_int(entries, "grid_n_rg"))
        t = formats.meta_floats(entries, "orbit_t")
        cols = {key: formats.meta_floats(entries, key)
                for key in ("orbit_px", "orbit_py", "orbit_pz",
                            "orbit_vx", "orbit_vy", "orbit_vz")}
        samples = [SensorStateSample(
            t=t[i],
            position=Vec3(cols["orbit_px"][i], cols["orbit_py"][i], cols["orbit_pz"][i]),
            velocity=Vec3(cols["orbit_vx"][i], cols["orbit_vy"][i], cols["orbit_vz"][i]))
            for i in range(len(t))]
        track = OrbitTrack(samples)
        if grid.t0 < track.t_start or grid.t_last > track.t_end:
            raise SarhpError("grid row times fall outside the orbit span")
        up = formats.meta_floats(entries, "up_hint")
        origin = formats.meta_floats(entries, "dem_origin")
        rects_flat = [int(v) for v in formats.meta_floats(entries, "test_rects")] \
            if "test_rects" in entries else []
        if len(rects_flat) % 4 != 0:
            raise SarhpError("test_rects must hold groups of 4 integers")
        rects = tuple(tuple(rects_flat[i:i + 4]) for i in range(0, len(rects_flat), 4))
        return SceneMetadata(
            k_s=formats.meta_float(entries, "k_s"),
            grid=grid, track=track,
            up_hint=Vec3(*up), dem_origin=Vec3(*origin),
            dem_cell=formats.meta_float(entries, "dem_cell"),
            az_spacing=formats.meta_float(entries, "az_spacing"),
            rg_spacing=formats.meta_float(entries, "rg_spacing"),
            test_rects=rects,
            validation_fraction=formats.meta_float(entries, "validation_fraction")
            if "validation_fraction" in entries else 0.15,
            scene_id=entries.get("scene_id", scene_dir.name))


def _load_dem(scene_dir: Path, meta: SceneMetadata) -> DemRaster:
    values, _ = formats.read_raster(scene_dir / DEM_FILE)
    return DemRaster(origin=meta.dem_origin, cell=meta.dem_cell,
                     heights=values.astype(float))


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def cmd_synth(args) -> int:
    entries = formats.read_metadata(args.spec)
    spec = SceneSpec(
        seed=args.seed if args.seed is not None else formats.meta_int(entries, "seed"),
        extent=(formats.meta_float(entries, "extent_x"),
                formats.meta_float(entries, "extent_y")),
        cell=formats.meta_float(entries, "cell") if "cell" in entries else 1.0,
        building_count=formats.meta_int(entries, "building_count")
        if "building_count" in entries else 12,
        height_range=(formats.meta_float(entries, "height_min")
                      if "height_min" in entries else 8.0,
                      formats.meta_float(entries, "height_max")
                      if "height_max" in entries else 35.0),
        incidence_deg=formats.meta_float(entries, "incidence_deg")
        if "incidence_deg" in entries else 35.0,
        sensor_altitude=formats.meta_float(entries, "sensor_altitude")
        if "sensor_altitude" in entries else 50000.0,
        dr=formats.meta_float(entries, "dr") if "dr" in entries else 1.0,
        n_rg=formats.meta_int(entries, "n_rg") if "n_rg" in entries else 256,
        k_s=formats.meta_float(entries, "k_s") if "k_s" in entries else 0.25)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    dem, track, slc, grid, _ = gen_scene_full(spec)
    formats.write_raster(out / DEM_FILE, dem.heights)
    formats.write_complex_raster(out / SLC_FILE, slc.samples)
    meta = {
        "scene_id": out.name,
        "seed": spec.seed,
        "k_s": spec.k_s,
        "grid_t0": grid.t0, "grid_dt": grid.dt,
        "grid_r_near": grid.r_near, "grid_dr": grid.dr,
        "grid_n_az": grid.n_az, "grid_n_rg": grid.n_rg,
        "orbit_t": track.times,
        "orbit_px": track.positions[:, 0],
        "orbit_py": track.positions[:, 1],
        "orbit_pz": track.positions[:, 2],
        "orbit_vx": track.velocities[:, 0],
        "orbit_vy": track.velocities[:, 1],
        "orbit_vz": track.velocities[:, 2],
        "up_hint": [0.0, 0.0, 1.0],
        "dem_origin": [dem.origin.x, dem.origin.y, dem.origin.z],
        "dem_cell": dem.cell,
        "az_spacing": track.velocities[0, 1] * grid.dt,
        "rg_spacing": grid.dr,
        "validation_fraction": 0.15,
    }
    if args.test_rect:
        meta["test_rects"] = [v for rect in args.test_rect for v in rect]
    formats.write_metadata(out / META_FILE, meta)
    log.info("scene written to %s (%d x %d grid)", out, grid.n_az, grid.n_rg)
    return 0


def cmd_project(args) -> int:
    scene_dir = Path(args.scene)
    meta = SceneMetadata.load(scene_dir)
    dem = _load_dem(scene_dir, meta)
    if args.oracle:
        raster = oracle_project(meta.grid, meta.track, dem)
        out_file = scene_dir / ORACLE_FILE
    else:
        result = project_heights(meta.grid, meta.track, dem, meta.up_hint,
                                 threads=args.threads)
        if result.no_coverage_rows:
            log.warning("%d rows had no DEM coverage", result.no_coverage_rows)
        raster = result.raster
        out_file = scene_dir / HEIGHTS_FILE
    formats.write_raster(out_file, raster.heights)
    log.info("heights written to %s", out_file)
    return 0


def cmd_calibrate(args) -> int:
    scene_dir = Path(args.scene)
    meta = SceneMetadata.load(scene_dir)
    samples = formats.read_complex_raster(scene_dir / SLC_FILE)
    patch = calib.SlcPatch(samples=samples, k_s=meta.k_s)
    normalized = calib.clip_normalize(calib.radar_brightness(patch))
    formats.write_raster(scene_dir / INTENSITY_FILE, normalized.values)
    log.info("normalized intensity written to %s", scene_dir / INTENSITY_FILE)
    return 0


def cmd_make_dataset(args) -> int:
    scene_dir = Path(args.scene)
    meta = SceneMetadata.load(scene_dir)
    intensity, _ = formats.read_raster(scene_dir / INTENSITY_FILE)
    heights, _ = formats.read_raster(scene_dir / HEIGHTS_FILE)
    spacing = (meta.az_spacing, meta.rg_spacing)
    gsd = args.gsd if args.gsd else max(spacing)
    intensity_r = dataset.resample(intensity.astype(float), spacing, gsd)
    heights_r = dataset.resample(heights.astype(float), spacing, gsd,
                                 propagate_nodata=True)
    tiles = dataset.tile(intensity_r, heights_r, scene_id=meta.scene_id,
                         size=args.tile_size, overlap=args.overlap)
    rects = meta.test_rects
    if args.test_rect:
        rects = tuple(tuple(r) for r in args.test_rect)
    if not rects:
        raise SarhpError("no test rectangles given (metadata test_rects or --test-rect)")
    config = dataset.SplitConfig(test_rects=rects,
                                 validation_fraction=meta.validation_fraction)
    train, test = dataset.split(tiles, config)

    tile_dir = scene_dir / "tiles"
    tile_dir.mkdir(exist_ok=True)
    lines = ["# tile_id role row_off col_off intensity_file height_file"]
    for role, group in (("train", train), ("test", test)):
        for pair in group:
            tid = f"{meta.scene_id}_{pair.provenance.row_off:05d}_{pair.provenance.col_off:05d}"
            int_name = f"{tid}_int.srh"
            hgt_name = f"{tid}_hgt.srh"
            formats.write_raster(tile_dir / int_name, pair.intensity)
            formats.write_raster(tile_dir / hgt_name, pair.height)
            lines.append(f"{tid} {role} {pair.provenance.row_off} "
                         f"{pair.provenance.col_off} tiles/{int_name} tiles/{hgt_name}")
    lines.append(f"# validation_fraction = {config.validation_fraction}")
    formats.atomic_write_bytes(scene_dir / MANIFEST_FILE, ("\n".join(lines) + "\n").encode())
    log.info("wrote %d train / %d test tiles to %s", len(train), len(test), tile_dir)
    return 0


def cmd_eval(args) -> int:
    pred, _ = formats.read_raster(args.pred)
    ref, _ = formats.read_raster(args.ref)
    report = metrics.evaluate(ref.astype(float), pred.astype(float))
    sys.stdout.write(report.as_text())
    if args.json:
        formats.atomic_write_bytes(Path(args.json), report.as_json().encode())
    if args.png:
        _write_preview(args.pred, args.png_dir or Path(args.pred).parent)
        _write_preview(args.ref, args.png_dir or Path(args.ref).parent)
    return 0


def _write_preview(raster_path, out_dir) -> None:
    try:
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError as exc:
        raise SarhpError("--png requires matplotlib (install sarhp[png])") from exc
    values, _ = formats.read_raster(raster_path)
    if values.ndim == 3:
        values = values[:, :, 0]
    fig, ax = plt.subplots(figsize=(6, 6))
    im = ax.imshow(values, cmap="viridis")
    fig.colorbar(im, ax=ax, shrink=0.8)
    ax.set_title(Path(raster_path).name)
    out = Path(out_dir) / (Path(raster_path).stem + ".png")
    fig.savefig(out, dpi=120, bbox_inches="tight")
    plt.close(fig)
    log.info("preview written to %s", out)


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------

def _rect(text: str):
    parts = [int(v) for v in text.replace(",", " ").split()]
    if len(parts) != 4:
        raise argparse.ArgumentTypeError("rectangle needs 4 integers: row col height width")
    return tuple(parts)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sarhp",
                                     description="slant-range height pipeline")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic scene directory")
    p.add_argument("spec", help="scene spec file (key = value)")
    p.add_argument("out", help="output scene directory")
    p.add_argument("--seed", type=int, default=None, help="override the spec seed")
    p.add_argument("--test-rect", type=_rect, action="append", default=[],
                   metavar="R C H W", help="hold-out rectangle (repeatable)")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("project", help="project DEM heights into the slant-range grid")
    p.add_argument("scene", help="scene directory")
    p.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    p.add_argument("--oracle", action="store_true",
                   help="run the brute-force reference projector instead")
    p.set_defaults(func=cmd_project)

    p = sub.add_parser("calibrate", help="radiometric calibration of the SLC")
    p.add_argument("scene", help="scene directory")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("make-dataset", help="resample, tile and split a scene")
    p.add_argument("scene", help="scene directory")
    p.add_argument("--gsd", type=float, default=None,
                   help="target pixel spacing in meters (default: max source spacing)")
    p.add_argument("--tile-size", type=int, default=256)
    p.add_argument("--overlap", type=float, default=0.5)
    p.add_argument("--test-rect", type=_rect, action="append", default=[],
                   metavar="R C H W", help="hold-out rectangle (repeatable)")
    p.set_defaults(func=cmd_make_dataset)

    p = sub.add_parser("eval", help="score a predicted height raster")
    p.add_argument("pred", help="predicted SRH1 raster")
    p.add_argument("ref", help="reference SRH1 raster")
    p.add_argument("--json", default=None, help="also write a JSON report here")
    p.add_argument("--png", action="store_true", help="write false-color previews")
    p.add_argument("--png-dir", default=None)
    p.set_defaults(func=cmd_eval)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(
        level=os.environ.get("SARHP_LOG", "WARNING").upper(),
        format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (SarhpError, ValueError, OSError) as exc:
        print(f"sarhp-error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
