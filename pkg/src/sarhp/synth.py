"""Synthetic urban scenes and an independent brute-force projection oracle.

Scenes are boxes on flat ground imaged by a straight, constant-velocity
track flying the +y axis, offset in x so the look vector at scene center
meets the requested incidence angle.  Azimuth rows are phase-aligned with
the DEM rows (spacing = cell), which keeps the oracle's azimuth binning
exact for flat and along-track features.

The oracle in :func:`oracle_project` shares no algorithmic code with the
forward projector: it supersamples every DEM grid edge (steep edges, the
facades, are densified in height as well), solves each sample's azimuth
time by bisection on the Zero-Doppler condition with its own linear track
interpolation, bins samples into pixels, decides visibility per azimuth bin
by an off-nadir-angle sweep with a running ground-distance minimum, and
keeps the maximum height per pixel after recentering each sample to the bin
center along its own edge (first order, clamped to the edge's height span).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import SceneGenerationError
from .types import DemRaster, HeightRaster, OrbitTrack, SensorStateSample, SlantRangeGrid, Vec3
from .calib import SlcPatch

TRACK_SPEED = 128.0          # m/s; power of two keeps row times exact in binary
GROUND_LEVEL = 1.0           # intensity of ground/roof clutter before speckle
FACADE_LEVEL = 63.0          # ~ +18 dB over clutter
DEFAULT_K_S = 0.25           # puts clutter near -6 dB after calibration
_H_TOL = 0.2                 # m; oracle azimuth-acceptance height budget
_EDGE_R_SLACK = 0.05         # fraction of dr; recentering may not leave the edge


@dataclass(frozen=True)
class Building:
    """Axis-aligned box footprint [x0, x1] x [y0, y1] of roof height ``h``."""

    x0: float
    x1: float
    y0: float
    y1: float
    h: float


@dataclass(frozen=True)
class SceneSpec:
    """Parameters of one synthetic scene.

    ``extent`` is (x_m, y_m); heights are above the flat ground plane z = 0.
    When ``grid`` is None a covering grid is derived from ``dr``/``n_rg``
    with azimuth rows aligned to the DEM rows.
    """

    seed: int
    extent: tuple[float, float] = (256.0, 256.0)
    cell: float = 1.0
    building_count: int = 12
    height_range: tuple[float, float] = (8.0, 35.0)
    incidence_deg: float = 35.0
    sensor_altitude: float = 50000.0
    dr: float = 1.0
    n_rg: int = 256
    k_s: float = DEFAULT_K_S
    grid: SlantRangeGrid | None = None

    def __post_init__(self) -> None:
        if not 20.0 <= self.incidence_deg <= 55.0:
            raise ValueError("incidence angle must lie in [20, 55] degrees")
        if self.height_range[0] < 0.0 or self.height_range[1] < self.height_range[0]:
            raise ValueError("height range must be non-negative and ordered")
        if self.cell <= 0 or self.extent[0] <= 0 or self.extent[1] <= 0:
            raise ValueError("extent and cell must be positive")
        if self.sensor_altitude <= self.height_range[1]:
            raise ValueError("sensor altitude must exceed the tallest building")


def _scene_layout(spec: SceneSpec):
    """Shared scene geometry: DEM shape, track x/z, scene center."""
    n_rows = int(round(spec.extent[1] / spec.cell))
    n_cols = int(round(spec.extent[0] / spec.cell))
    theta = math.radians(spec.incidence_deg)
    x_center = spec.extent[0] / 2.0
    x_track = x_center - spec.sensor_altitude * math.tan(theta)
    return n_rows, n_cols, theta, x_center, x_track


def derive_grid(spec: SceneSpec) -> SlantRangeGrid:
    """Covering slant-range grid: aligned azimuth rows, range centered on scene."""
    n_rows, _, theta, _, _ = _scene_layout(spec)
    r_center = spec.sensor_altitude / math.cos(theta)
    r_near = r_center - (spec.n_rg // 2) * spec.dr
    return SlantRangeGrid(t0=0.0, dt=spec.cell / TRACK_SPEED, r_near=r_near,
                          dr=spec.dr, n_az=n_rows, n_rg=spec.n_rg)


def _make_track(x_track: float, altitude: float, y_ref: float,
                grid: SlantRangeGrid) -> OrbitTrack:
    t_lo = grid.t0 - 1.0
    t_hi = grid.t0 + (grid.n_az - 1) * grid.dt + 1.0
    times = np.arange(t_lo, t_hi + 0.5, 0.5)
    samples = [SensorStateSample(
        t=float(t),
        position=Vec3(x_track, y_ref + TRACK_SPEED * float(t), altitude),
        velocity=Vec3(0.0, TRACK_SPEED, 0.0)) for t in times]
    return OrbitTrack(samples)


def build_track(spec: SceneSpec, grid: SlantRangeGrid) -> OrbitTrack:
    """Straight constant-velocity track covering the grid rows with margin."""
    _, _, _, _, x_track = _scene_layout(spec)
    return _make_track(x_track, spec.sensor_altitude, spec.cell / 2.0, grid)


def _place_buildings(rng: np.random.Generator, spec: SceneSpec,
                     grid: SlantRangeGrid) -> list[Building]:
    _, _, _, _, x_track = _scene_layout(spec)
    # keep buildings inside the ground band the grid actually covers
    alt2 = spec.sensor_altitude ** 2
    r_far = grid.r_near + (grid.n_rg - 1) * grid.dr
    u_lo = math.sqrt(max(grid.r_near ** 2 - alt2, 0.0))
    u_hi = math.sqrt(max(r_far ** 2 - alt2, 0.0))
    x_lo = max(4.0 * spec.cell, u_lo + x_track + 4.0 * spec.cell)
    x_hi = min(spec.extent[0] - 4.0 * spec.cell, u_hi + x_track - 4.0 * spec.cell)
    if x_hi <= x_lo + 30.0:
        x_lo, x_hi = 4.0 * spec.cell, spec.extent[0] - 4.0 * spec.cell

    placed: list[Building] = []
    margin = 2.0 * spec.cell
    attempts = 0
    budget = max(200, 200 * spec.building_count)
    while len(placed) < spec.building_count:
        if attempts >= budget:
            raise SceneGenerationError(
                f"placed only {len(placed)}/{spec.building_count} buildings "
                f"after {attempts} attempts")
        attempts += 1
        w = rng.uniform(6.0, 24.0)
        d = rng.uniform(6.0, 24.0)
        h = rng.uniform(*spec.height_range)
        if x_hi - x_lo < w or spec.extent[1] - 8.0 * spec.cell < d:
            continue
        x0 = rng.uniform(x_lo, x_hi - w)
        y0 = rng.uniform(4.0 * spec.cell, spec.extent[1] - 4.0 * spec.cell - d)
        box = Building(x0, x0 + w, y0, y0 + d, h)
        clear = all(box.x1 + margin <= o.x0 or o.x1 + margin <= box.x0
                    or box.y1 + margin <= o.y0 or o.y1 + margin <= box.y0
                    for o in placed)
        if clear:
            placed.append(box)
    return placed


def _rasterize_buildings(spec: SceneSpec, boxes: list[Building]) -> DemRaster:
    n_rows, n_cols, _, _, _ = _scene_layout(spec)
    heights = np.zeros((n_rows, n_cols))
    xc = spec.cell / 2.0 + np.arange(n_cols) * spec.cell
    yc = spec.cell / 2.0 + np.arange(n_rows) * spec.cell
    for b in boxes:
        cols = (xc >= b.x0) & (xc <= b.x1)
        rows = (yc >= b.y0) & (yc <= b.y1)
        heights[np.ix_(rows, cols)] = np.maximum(heights[np.ix_(rows, cols)], b.h)
    return DemRaster(origin=Vec3(spec.cell / 2.0, spec.cell / 2.0, 0.0),
                     cell=spec.cell, heights=heights)


def _simulate_intensity(rng: np.random.Generator, spec: SceneSpec,
                        boxes: list[Building], grid: SlantRangeGrid) -> SlcPatch:
    """Geometric intensity classes (dark / clutter / facade) plus speckle.

    Shadowed or uncovered pixels return exactly zero so the zero-return mask
    can be compared against the projection's nodata mask.
    """
    n_rows, n_cols, _, _, x_track = _scene_layout(spec)
    alt = spec.sensor_altitude
    radii = grid.r_near + np.arange(grid.n_rg) * grid.dr
    xc = spec.cell / 2.0 + np.arange(n_cols) * spec.cell
    u_cols = xc - x_track
    level = np.zeros((grid.n_az, grid.n_rg))
    y_ref = spec.cell / 2.0   # track y at t = 0, see build_track

    for i in range(grid.n_az):
        y_i = y_ref + TRACK_SPEED * (grid.t0 + i * grid.dt)
        prof = np.zeros(n_cols)
        row_boxes = [b for b in boxes if b.y0 <= y_i <= b.y1]
        for b in row_boxes:
            prof[(xc >= b.x0) & (xc <= b.x1)] = b.h
        phi = np.arctan2(u_cols, alt - prof)
        horizon = np.maximum.accumulate(np.concatenate(([-np.inf], phi[:-1])))
        vis_col = phi > horizon

        row_level = np.zeros(grid.n_rg)
        # ground and roof clutter wherever the first return is unobstructed
        with np.errstate(invalid="ignore"):
            u_ground = np.sqrt(np.maximum(radii ** 2 - alt ** 2, 0.0))
        x_ground = u_ground + x_track
        on_scene = (radii >= alt) & (x_ground >= xc[0]) & (x_ground <= xc[-1])
        col_idx = np.clip(np.round((x_ground - xc[0]) / spec.cell).astype(int), 0, n_cols - 1)
        ground_ok = on_scene & vis_col[col_idx] & (prof[col_idx] == 0.0)
        row_level[ground_ok] = GROUND_LEVEL

        for b in sorted(row_boxes, key=lambda bb: bb.x0):
            u_near, u_far = b.x0 - x_track, b.x1 - x_track
            if u_near <= 0:
                continue
            # visible height band of the sensor-facing wall
            pre = phi[u_cols < u_near]
            horizon_pre = pre.max() if pre.size else -np.inf
            if horizon_pre > 0:
                h_hidden = alt - u_near / math.tan(horizon_pre)
            else:
                h_hidden = 0.0
            h_min_vis = min(max(h_hidden, 0.0), b.h)
            roof_visible = math.atan2(u_near, alt - b.h) > horizon_pre
            if roof_visible:
                r_roof_near = math.hypot(u_near, alt - b.h)
                r_roof_far = math.hypot(u_far, alt - b.h)
                roof_bins = (radii >= r_roof_near) & (radii <= r_roof_far)
                row_level[roof_bins] = np.maximum(row_level[roof_bins], GROUND_LEVEL)
            if h_min_vis < b.h:
                r_top = math.hypot(u_near, alt - b.h)
                r_bot = math.hypot(u_near, alt - h_min_vis)
                wall_bins = (radii >= r_top) & (radii <= r_bot)
                row_level[wall_bins] = FACADE_LEVEL
        level[i] = row_level

    intensity = level * rng.exponential(1.0, size=level.shape)
    phase = rng.uniform(0.0, 2.0 * math.pi, size=level.shape)
    samples = np.sqrt(intensity) * np.exp(1j * phase)
    return SlcPatch(samples=samples, k_s=spec.k_s)


def gen_scene(spec: SceneSpec):
    """Deterministically generate (DEM, orbit track, SLC patch) from a spec.

    Also returns the resolved slant-range grid and the building list via
    :func:`gen_scene_full`; this entry point keeps the documented triple.
    """
    dem, track, slc, _, _ = gen_scene_full(spec)
    return dem, track, slc


def gen_scene_full(spec: SceneSpec):
    rng = np.random.default_rng(spec.seed)
    grid = spec.grid if spec.grid is not None else derive_grid(spec)
    boxes = _place_buildings(rng, spec, grid) if spec.building_count > 0 else []
    dem = _rasterize_buildings(spec, boxes)
    track = build_track(spec, grid)
    slc = _simulate_intensity(rng, spec, boxes, grid)
    return dem, track, slc, grid, boxes


def look_incidence(spec: SceneSpec) -> float:
    """Angle (deg) between the scene-center look vector and local vertical."""
    _, _, _, x_center, x_track = _scene_layout(spec)
    horiz = x_center - x_track
    return math.degrees(math.atan2(horiz, spec.sensor_altitude))


@dataclass(frozen=True)
class BoxScene:
    """Single-building test scene with everything analytic checks need."""

    dem: DemRaster
    track: OrbitTrack
    grid: SlantRangeGrid
    box: Building
    x_track: float
    altitude: float


def single_box_scene(height: float, incidence_deg: float, dr: float = 0.4,
                     cell: float = 1.0, box_width: float = 24.0,
                     box_depth: float = 24.0, altitude: float = 50000.0,
                     n_rows: int = 48) -> BoxScene:
    """One axis-aligned box on flat ground, centered in the imaged band.

    Ranges are laid out so the grid covers the box's layover ahead of it and
    its full shadow behind it, with generous ground margins.
    """
    theta = math.radians(incidence_deg)
    shadow = height * math.tan(theta) + height * math.sin(theta)
    margin = 60.0
    extent_x = 2.0 * margin + box_width + shadow
    extent_y = n_rows * cell
    # snap both walls onto cell centers so the one-cell facade ramps peak
    # exactly at the analytic wall planes
    x0 = (math.floor(margin / cell) + 0.5) * cell
    x1 = x0 + max(1.0, round(box_width / cell)) * cell
    box = Building(x0, x1, extent_y * 0.25, extent_y * 0.75, height)
    x_center = x0 + box_width / 2.0
    x_track = x_center - altitude * math.tan(theta)

    u_lo = (cell / 2.0) - x_track
    u_hi = (extent_x - cell / 2.0) - x_track
    u_wall = box.x0 - x_track
    # near range must reach the wall top, which lies ahead of the ground at
    # the near wall by ~H cos(theta) in slant range
    r_lo = min(math.hypot(u_lo, altitude),
               math.hypot(u_wall, altitude - height)) - 2.0 * dr
    r_hi = math.hypot(u_hi, altitude)
    n_rg = int(math.ceil((r_hi - r_lo) / dr)) + 1
    grid = SlantRangeGrid(t0=0.0, dt=cell / TRACK_SPEED, r_near=r_lo, dr=dr,
                          n_az=n_rows, n_rg=n_rg)

    spec_like = SceneSpec(seed=0, extent=(extent_x, extent_y), cell=cell,
                          building_count=0, incidence_deg=incidence_deg,
                          sensor_altitude=altitude, dr=dr, n_rg=n_rg)
    dem = _rasterize_buildings(spec_like, [box])
    track = _make_track(x_track, altitude, cell / 2.0, grid)
    return BoxScene(dem=dem, track=track, grid=grid, box=box,
                    x_track=x_track, altitude=altitude)


# ---------------------------------------------------------------------------
# Brute-force oracle
# ---------------------------------------------------------------------------

def _edge_table(dem: DemRaster):
    """All grid edges as endpoint arrays; edges touching nodata are dropped."""
    x = dem.x_coords()
    y = dem.y_coords()
    h = dem.heights
    valid = dem.valid_mask()
    rows, cols = h.shape
    p0, p1, h0, h1 = [], [], [], []
    if cols >= 2:
        ok = (valid[:, :-1] & valid[:, 1:]).ravel()
        gx0, gy0 = np.meshgrid(x[:-1], y, indexing="xy")
        gx1, _ = np.meshgrid(x[1:], y, indexing="xy")
        p0.append(np.stack([gx0.ravel(), gy0.ravel(), dem.origin.z + h[:, :-1].ravel()], 1)[ok])
        p1.append(np.stack([gx1.ravel(), gy0.ravel(), dem.origin.z + h[:, 1:].ravel()], 1)[ok])
        h0.append(h[:, :-1].ravel()[ok])
        h1.append(h[:, 1:].ravel()[ok])
    if rows >= 2:
        ok = (valid[:-1, :] & valid[1:, :]).ravel()
        gx0, gy0 = np.meshgrid(x, y[:-1], indexing="xy")
        _, gy1 = np.meshgrid(x, y[1:], indexing="xy")
        p0.append(np.stack([gx0.ravel(), gy0.ravel(), dem.origin.z + h[:-1, :].ravel()], 1)[ok])
        p1.append(np.stack([gx0.ravel(), gy1.ravel(), dem.origin.z + h[1:, :].ravel()], 1)[ok])
        h0.append(h[:-1, :].ravel()[ok])
        h1.append(h[1:, :].ravel()[ok])
    return (np.concatenate(p0), np.concatenate(p1),
            np.concatenate(h0), np.concatenate(h1))


class _LinearTrack:
    """Oracle-private linear interpolation of the orbit samples."""

    def __init__(self, track: OrbitTrack):
        self.t = track.times
        self.p = track.positions
        self.v = track.velocities

    def state(self, t: np.ndarray):
        k = np.clip(np.searchsorted(self.t, t, side="right") - 1, 0, len(self.t) - 2)
        w = ((t - self.t[k]) / (self.t[k + 1] - self.t[k]))[:, None]
        pos = self.p[k] * (1.0 - w) + self.p[k + 1] * w
        vel = self.v[k] * (1.0 - w) + self.v[k + 1] * w
        return pos, vel

    def doppler(self, t: np.ndarray, x: np.ndarray) -> np.ndarray:
        pos, vel = self.state(t)
        return np.einsum("ij,ij->i", vel, x - pos)


def _zero_doppler_times(lt: _LinearTrack, points: np.ndarray):
    """Bisection solve of the Zero-Doppler condition for every point."""
    lo = np.full(points.shape[0], lt.t[0])
    hi = np.full(points.shape[0], lt.t[-1])
    f_lo = lt.doppler(lo, points)
    f_hi = lt.doppler(hi, points)
    solvable = (f_lo >= 0.0) & (f_hi <= 0.0)   # closing range, then receding
    span = float(lt.t[-1] - lt.t[0])
    iterations = max(30, int(math.ceil(math.log2(max(span, 1e-9) / 1e-9))))
    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        f_mid = lt.doppler(mid, points)
        take_hi = f_mid >= 0.0
        lo = np.where(take_hi, mid, lo)
        hi = np.where(take_hi, hi, mid)
    return 0.5 * (lo + hi), solvable


def oracle_project(grid: SlantRangeGrid, track: OrbitTrack, dem: DemRaster,
                   chunk: int = 1_500_000) -> HeightRaster:
    """Brute-force reference projection (slow, independent of the projector)."""
    p0, p1, h0, h1 = _edge_table(dem)
    n_edges = p0.shape[0]
    d = p1 - p0
    len_xy = np.hypot(d[:, 0], d[:, 1])
    dh = h1 - h0
    step_xy = min(dem.cell, grid.dr) / 10.0
    step_h = grid.dr / 10.0
    # edges running in y carry the tight azimuth band; sample them finely
    # enough in height that the band always contains samples
    step_h_y = min(step_h, _H_TOL / 2.0)
    runs_in_y = np.abs(d[:, 1]) > 1e-12
    h_steps = np.where(runs_in_y,
                       np.ceil(np.abs(dh) / step_h_y),
                       np.ceil(np.abs(dh) / step_h)).astype(int) + 1
    counts = np.maximum.reduce([
        np.full(n_edges, 2),
        np.ceil(len_xy / step_xy).astype(int) + 1,
        h_steps,
    ])
    offsets = np.concatenate(([0], np.cumsum(counts)))
    total = int(offsets[-1])

    lt = _LinearTrack(track)
    up = np.array([0.0, 0.0, 1.0])

    # reduced per-sample records, gathered chunk by chunk
    rec_bin = []
    rec_side = []
    rec_phi = []
    rec_g = []
    rec_j = []
    rec_h = []
    rec_edge = []
    rec_r = []
    rec_cap = []

    edge_lo = 0
    while edge_lo < n_edges:
        edge_hi = edge_lo
        n_samples = 0
        while edge_hi < n_edges and n_samples + counts[edge_hi] <= chunk:
            n_samples += counts[edge_hi]
            edge_hi += 1
        if edge_hi == edge_lo:
            edge_hi += 1
            n_samples = int(counts[edge_lo])
        sel = slice(edge_lo, edge_hi)
        cnt = counts[sel]
        idx_local = np.repeat(np.arange(edge_hi - edge_lo), cnt)
        rank = np.arange(n_samples) - np.repeat(offsets[edge_lo:edge_hi] - offsets[edge_lo], cnt)
        s = rank / np.maximum(cnt[idx_local] - 1, 1)
        pts = p0[sel][idx_local] + s[:, None] * d[sel][idx_local]
        h = h0[sel][idx_local] + s * dh[sel][idx_local]

        t_zd, solvable = _zero_doppler_times(lt, pts)
        pos, vel = lt.state(t_zd)
        rel = pts - pos
        r = np.linalg.norm(rel, axis=1)
        drop = pos[:, 2] - pts[:, 2]
        g = np.sqrt(np.maximum(r * r - drop * drop, 0.0))
        phi = np.arctan2(g, drop)
        side_dir = np.cross(vel, up)
        side = np.sign(np.einsum("ij,ij->i", rel, side_dir))

        i_bin = np.round((t_zd - grid.t0) / grid.dt).astype(int)
        j_bin = np.round((r - grid.r_near) / grid.dr).astype(int)
        in_grid = solvable & (i_bin >= 0) & (i_bin < grid.n_az)

        # azimuth acceptance: binning must not move a sample's height by
        # more than the tolerance along its own edge
        speed = np.linalg.norm(vel, axis=1)
        d_azimuth = np.abs(t_zd - (grid.t0 + i_bin * grid.dt)) * speed
        dy_edge = d[sel][idx_local, 1]
        with np.errstate(divide="ignore", invalid="ignore"):
            slope_y = np.where(np.abs(dy_edge) > 1e-12,
                               dh[sel][idx_local] / dy_edge, 0.0)
        budget_used = d_azimuth * np.abs(slope_y)
        keep = in_grid & (budget_used <= _H_TOL)
        # recentering a sample along a y-running edge also moves it in y;
        # the induced height error equals the correction, so cap it by the
        # remaining azimuth budget (x-running edges stay in-plane: no cap)
        cap = np.where(np.abs(dy_edge) > 1e-12,
                       np.maximum(_H_TOL - budget_used, 0.0), np.inf)

        rec_bin.append(i_bin[keep])
        rec_side.append(side[keep])
        rec_phi.append(phi[keep])
        rec_g.append(g[keep])
        rec_j.append(j_bin[keep])
        rec_h.append(h[keep])
        rec_edge.append((idx_local + edge_lo)[keep])
        rec_r.append(r[keep])
        rec_cap.append(cap[keep])
        edge_lo = edge_hi

    i_bin = np.concatenate(rec_bin)
    side = np.concatenate(rec_side)
    phi = np.concatenate(rec_phi)
    g = np.concatenate(rec_g)
    j_bin = np.concatenate(rec_j)
    h = np.concatenate(rec_h)
    edge_id = np.concatenate(rec_edge)
    r = np.concatenate(rec_r)
    corr_cap = np.concatenate(rec_cap)
    if i_bin.size == 0:
        return HeightRaster(np.full((grid.n_az, grid.n_rg), np.nan))

    # per-edge aggregates for the range recentering
    edge_rmin = np.full(n_edges, np.inf)
    edge_rmax = np.full(n_edges, -np.inf)
    np.minimum.at(edge_rmin, edge_id, r)
    np.maximum.at(edge_rmax, edge_id, r)
    edge_hmin = np.minimum(h0, h1)
    edge_hmax = np.maximum(h0, h1)
    # endpoint ranges give each edge's height-vs-range slope for recentering
    t0e, ok0 = _zero_doppler_times(lt, p0)
    t1e, ok1 = _zero_doppler_times(lt, p1)
    pos0, _ = lt.state(t0e)
    pos1, _ = lt.state(t1e)
    edge_r_at_h0 = np.linalg.norm(p0 - pos0, axis=1)
    edge_r_at_h1 = np.linalg.norm(p1 - pos1, axis=1)
    dr_edge = edge_r_at_h1 - edge_r_at_h0
    with np.errstate(divide="ignore", invalid="ignore"):
        kappa = np.where(np.abs(dr_edge) > 1e-9, (h1 - h0) / dr_edge, 0.0)
    kappa = np.clip(kappa, -50.0, 50.0)
    kappa[~(ok0 & ok1)] = 0.0

    # visibility sweep, one azimuth bin (and track side) at a time
    order = np.lexsort((g, -phi, side, i_bin))
    sb = i_bin[order]
    ss = side[order]
    sg = g[order]
    boundaries = np.nonzero((np.diff(sb) != 0) | (np.diff(ss) != 0))[0] + 1
    starts = np.concatenate(([0], boundaries))
    ends = np.concatenate((boundaries, [sb.size]))
    visible_sorted = np.empty(sb.size, dtype=bool)
    for a, b in zip(starts, ends):
        seg = sg[a:b]
        running = np.minimum.accumulate(seg)
        excl = np.concatenate(([np.inf], running[:-1]))
        visible_sorted[a:b] = excl >= seg - 1e-6
    vis = np.empty_like(visible_sorted)
    vis[order] = visible_sorted

    in_rg = (j_bin >= 0) & (j_bin < grid.n_rg)
    r_center = grid.r_near + j_bin * grid.dr
    within_edge = (r_center >= edge_rmin[edge_id] - _EDGE_R_SLACK * grid.dr) \
        & (r_center <= edge_rmax[edge_id] + _EDGE_R_SLACK * grid.dr)
    keep = vis & in_rg & within_edge
    corr = (r_center[keep] - r[keep]) * kappa[edge_id[keep]]
    corr = np.clip(corr, -corr_cap[keep], corr_cap[keep])
    h_fill = np.clip(h[keep] + corr,
                     edge_hmin[edge_id[keep]], edge_hmax[edge_id[keep]])

    out = np.full((grid.n_az, grid.n_rg), -np.inf)
    np.maximum.at(out, (i_bin[keep], j_bin[keep]), h_fill)
    return HeightRaster(np.where(np.isfinite(out), out, np.nan))
