"""Forward projection of surface heights into slant-range pixel geometry.

The projector walks the radar raster row by row.  Each azimuth row defines a
plane through the sensor perpendicular to its velocity; cutting the surface
model with that plane yields a 2-D terrain polyline, and each range column
then reduces to intersecting a sensor-centered circle with that polyline.
Occluded intersection points are discarded by ray casting inside the plane,
and layover is resolved by keeping the largest height per pixel.

Scalar operations (`segment_plane_intersection`, `circle_slice_intersections`,
`visible`, `pixel_height`) implement the per-element contracts and are what
the tests exercise directly; `project_heights` runs the same formulas through
vectorized kernels, one azimuth row at a time.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .errors import DegenerateBasisError, NoCoverageError, TrackSpanError
from .types import DemRaster, HeightRaster, OrbitTrack, SensorStateSample, SlantRangeGrid, Vec3

# Tolerances used throughout; see module contracts.
_PARALLEL_EPS = 1e-14          # relative threshold for segment-parallel-to-plane
_DEDUPE_EPS = 1e-9             # meters; duplicate intersection points
_RAY_EPS = 1e-6                # meters along the ray; visibility self-hit guard
_ANGLE_EPS = 1e-12             # radians; grazing margin in the sweep kernel
_PARAM_EPS = 1e-12             # inclusive-endpoint float guard on segment params


@dataclass(frozen=True)
class PlaneBasis:
    """Orthonormal frame of one Zero-Doppler plane.

    ``origin`` is the sensor position, ``normal`` the flight direction.
    In-plane coordinates are ``u = (p - origin) . e_u`` (horizontal-ish,
    signed across-track) and ``v = (p - origin) . e_v`` (vertical-ish), so
    the sensor sits at ``(0, 0)`` and terrain below it has ``v < 0``.
    """

    origin: np.ndarray
    normal: np.ndarray
    e_u: np.ndarray
    e_v: np.ndarray

    def to_plane(self, points: np.ndarray) -> np.ndarray:
        """Project Nx3 world points to Nx2 in-plane (u, v) coordinates."""
        rel = np.atleast_2d(points) - self.origin
        return np.stack([rel @ self.e_u, rel @ self.e_v], axis=-1)

    def to_world(self, u, v) -> np.ndarray:
        return self.origin + np.multiply.outer(np.asarray(u), self.e_u) \
            + np.multiply.outer(np.asarray(v), self.e_v)


@dataclass(frozen=True)
class SliceVertex:
    """One vertex of a terrain slice, in plane coordinates (meters)."""

    u: float
    v: float
    h: float


class TerrainSlice:
    """Terrain polyline cut by one Zero-Doppler plane, sorted by ``u``.

    Stored as parallel arrays for the vectorized kernels; the ``vertices``
    property materializes :class:`SliceVertex` objects on demand.
    """

    def __init__(self, u: np.ndarray, v: np.ndarray, h: np.ndarray, plane: PlaneBasis):
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        h = np.asarray(h, dtype=float)
        if not (u.shape == v.shape == h.shape) or u.ndim != 1:
            raise ValueError("slice arrays must be 1-D and equally sized")
        if u.size < 2:
            raise NoCoverageError("a usable terrain slice needs at least 2 vertices")
        if np.any(np.diff(u) < 0):
            raise ValueError("slice vertices must be sorted ascending in u")
        self.u = u
        self.v = v
        self.h = h
        self.plane = plane

    @property
    def vertices(self) -> list[SliceVertex]:
        return [SliceVertex(float(a), float(b), float(c))
                for a, b, c in zip(self.u, self.v, self.h)]

    def __len__(self) -> int:
        return self.u.size


@dataclass(frozen=True)
class IntersectionCandidate:
    """Circle/polyline intersection point with its interpolated height.

    ``visible`` is filled by the visibility pass; construction leaves it
    False.
    """

    point: tuple[float, float]
    h: float
    visible: bool = False


@dataclass(frozen=True)
class ProjectionResult:
    """Output raster of :func:`project_heights` plus a processing summary."""

    raster: HeightRaster
    no_coverage_rows: int


# ---------------------------------------------------------------------------
# Orbit interpolation
# ---------------------------------------------------------------------------

def interpolate_sensor_state(track: OrbitTrack, t: float) -> SensorStateSample:
    """Interpolate the sensor state at mission time ``t``.

    Positions follow a piecewise cubic Hermite through the stored samples,
    using the stored velocities as derivatives; velocities are interpolated
    linearly.  Exact at the sample knots.
    """
    ts = track.times
    if t < ts[0] or t > ts[-1]:
        raise TrackSpanError(f"t={t} outside track span [{ts[0]}, {ts[-1]}]")
    k = int(np.searchsorted(ts, t, side="right")) - 1
    k = min(max(k, 0), len(ts) - 2)
    h = ts[k + 1] - ts[k]
    s = (t - ts[k]) / h
    p0, p1 = track.positions[k], track.positions[k + 1]
    v0, v1 = track.velocities[k], track.velocities[k + 1]
    s2, s3 = s * s, s * s * s
    pos = ((2 * s3 - 3 * s2 + 1) * p0
           + (s3 - 2 * s2 + s) * h * v0
           + (-2 * s3 + 3 * s2) * p1
           + (s3 - s2) * h * v1)
    vel = v0 + (v1 - v0) * s
    return SensorStateSample(t=float(t), position=Vec3.from_array(pos),
                             velocity=Vec3.from_array(vel))


# ---------------------------------------------------------------------------
# Zero-Doppler plane
# ---------------------------------------------------------------------------

def zero_doppler_plane(state: SensorStateSample, up_hint: Vec3) -> PlaneBasis:
    """Build the plane through the sensor perpendicular to its velocity.

    ``e_v`` is the component of ``up_hint`` orthogonal to the normal
    (normalized), ``e_u = normal x e_v``.  Any point ``q`` in the plane
    satisfies ``velocity . (q - position) = 0``.
    """
    vel = state.velocity.as_array()
    speed = float(np.linalg.norm(vel))
    if speed == 0.0:
        raise ValueError("sensor velocity must be nonzero")
    normal = vel / speed
    up = up_hint.as_array()
    up_norm = float(np.linalg.norm(up))
    if up_norm == 0.0:
        raise DegenerateBasisError("up hint must be nonzero")
    e_v = up - (up @ normal) * normal
    e_v_norm = float(np.linalg.norm(e_v))
    if e_v_norm < 1e-9 * up_norm:
        raise DegenerateBasisError("up hint is parallel to the flight direction")
    e_v = e_v / e_v_norm
    e_u = np.cross(normal, e_v)
    return PlaneBasis(origin=state.position.as_array(), normal=normal, e_u=e_u, e_v=e_v)


def segment_plane_intersection(p0: Vec3, p1: Vec3, plane: PlaneBasis):
    """Intersect the segment ``p0 -> p1`` with the plane.

    Returns the intersection :class:`~sarhp.types.Vec3`, or ``None`` when the
    segment is parallel to the plane or the crossing parameter falls outside
    ``[0, 1]``.
    """
    a0 = p0.as_array()
    a1 = p1.as_array()
    direction = a1 - a0
    seg_len = float(np.linalg.norm(direction))
    if seg_len == 0.0:
        raise ValueError("p0 and p1 must differ")
    denom = float(plane.normal @ direction)
    if abs(denom) <= _PARALLEL_EPS * seg_len:
        return None
    t = -float(plane.normal @ (a0 - plane.origin)) / denom
    if t < 0.0 or t > 1.0:
        return None
    return Vec3.from_array(a0 + direction * t)


# ---------------------------------------------------------------------------
# Terrain slicing
# ---------------------------------------------------------------------------

class _GridSegments:
    """Flattened DEM grid polyline segments (rows and columns merged).

    Precomputed once per DEM so the per-row slicing reduces to two dot
    products and a masked gather.
    """

    def __init__(self, dem: DemRaster):
        x = dem.x_coords()
        y = dem.y_coords()
        z = dem.origin.z + dem.heights
        valid = dem.valid_mask()

        def seg_block(p0x, p0y, h0, p1x, p1y, h1, ok):
            p0 = np.stack([np.broadcast_to(p0x, h0.shape).ravel(),
                           np.broadcast_to(p0y, h0.shape).ravel(),
                           (dem.origin.z + h0).ravel()], axis=1)
            p1 = np.stack([np.broadcast_to(p1x, h1.shape).ravel(),
                           np.broadcast_to(p1y, h1.shape).ravel(),
                           (dem.origin.z + h1).ravel()], axis=1)
            return p0[ok.ravel()], p1[ok.ravel()], h0.ravel()[ok.ravel()], h1.ravel()[ok.ravel()]

        blocks = []
        if dem.n_cols >= 2:  # row polylines: (r, c) -> (r, c+1)
            ok = valid[:, :-1] & valid[:, 1:]
            blocks.append(seg_block(x[None, :-1], y[:, None], dem.heights[:, :-1],
                                    x[None, 1:], y[:, None], dem.heights[:, 1:], ok))
        if dem.n_rows >= 2:  # column polylines: (r, c) -> (r+1, c)
            ok = valid[:-1, :] & valid[1:, :]
            blocks.append(seg_block(x[None, :], y[:-1, None], dem.heights[:-1, :],
                                    x[None, :], y[1:, None], dem.heights[1:, :], ok))
        if not blocks:
            raise NoCoverageError("DEM has no usable grid segments")
        self.p0 = np.concatenate([b[0] for b in blocks])
        self.p1 = np.concatenate([b[1] for b in blocks])
        self.h0 = np.concatenate([b[2] for b in blocks])
        self.h1 = np.concatenate([b[3] for b in blocks])
        self.direction = self.p1 - self.p0
        self.seg_len = np.linalg.norm(self.direction, axis=1)


def _slice_from_segments(plane: PlaneBasis, segs: _GridSegments) -> TerrainSlice:
    denom = segs.direction @ plane.normal
    offset = segs.p0 @ plane.normal - float(plane.origin @ plane.normal)
    parallel = np.abs(denom) <= _PARALLEL_EPS * segs.seg_len
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(parallel, np.nan, -offset / denom)
    hit = ~parallel & (t >= 0.0) & (t <= 1.0)
    if not np.any(hit):
        raise NoCoverageError("plane does not intersect the DEM footprint")
    t_hit = t[hit][:, None]
    points = segs.p0[hit] + segs.direction[hit] * t_hit
    h = segs.h0[hit] + t_hit[:, 0] * (segs.h1[hit] - segs.h0[hit])
    uv = plane.to_plane(points)
    order = np.argsort(uv[:, 0], kind="stable")
    u, v, h = uv[order, 0], uv[order, 1], h[order]
    if u.size >= 2:
        keep = np.empty(u.size, dtype=bool)
        keep[0] = True
        keep[1:] = np.diff(u) > _DEDUPE_EPS
        u, v, h = u[keep], v[keep], h[keep]
    if u.size < 2:
        raise NoCoverageError("plane cuts the DEM in fewer than 2 points")
    return TerrainSlice(u, v, h, plane)


def slice_terrain(plane: PlaneBasis, dem: DemRaster) -> TerrainSlice:
    """Cut the DEM's grid polylines (all rows and all columns) with the plane.

    Intersection heights are interpolated linearly along each grid segment;
    segments touching nodata cells are skipped.  Raises
    :class:`~sarhp.errors.NoCoverageError` when the plane misses the DEM.
    """
    return _slice_from_segments(plane, _GridSegments(dem))


# ---------------------------------------------------------------------------
# Circle intersection
# ---------------------------------------------------------------------------

def _circle_candidates(su: np.ndarray, sv: np.ndarray, sh: np.ndarray,
                       radii: np.ndarray):
    """Intersect sensor-centered circles with every polyline segment.

    Returns candidate coordinates/heights of shape (2, S, R) plus a validity
    mask; candidates are kept only when they fall inside their segment
    (inclusive endpoint parameters).
    """
    u0, u1 = su[:-1], su[1:]
    v0, v1 = sv[:-1], sv[1:]
    h0, h1 = sh[:-1], sh[1:]
    dx = u1 - u0
    dy = v1 - v0
    seg_sq = dx * dx + dy * dy
    cross = u0 * v1 - u1 * v0
    usable = seg_sq > 0.0

    r = np.asarray(radii, dtype=float)
    disc = np.multiply.outer(seg_sq, r * r) - (cross * cross)[:, None]
    has_roots = (disc >= 0.0) & usable[:, None]
    root = np.sqrt(np.where(disc > 0.0, disc, 0.0))

    sign_dy = np.where(dy < 0.0, -1.0, 1.0)   # sgn(0) = +1 by convention
    abs_dy = np.abs(dy)
    seg_sq_safe = np.where(usable, seg_sq, 1.0)

    xs = np.empty((2,) + disc.shape)
    ys = np.empty_like(xs)
    hs = np.empty_like(xs)
    ok = np.empty((2,) + disc.shape, dtype=bool)
    for side, pm in enumerate((1.0, -1.0)):
        x = (cross[:, None] * dy[:, None] + pm * (sign_dy * dx)[:, None] * root) \
            / seg_sq_safe[:, None]
        y = (-cross[:, None] * dx[:, None] + pm * abs_dy[:, None] * root) \
            / seg_sq_safe[:, None]
        s = ((x - u0[:, None]) * dx[:, None] + (y - v0[:, None]) * dy[:, None]) \
            / seg_sq_safe[:, None]
        xs[side] = x
        ys[side] = y
        hs[side] = h0[:, None] + s * (h1 - h0)[:, None]
        # inclusive endpoints with a float guard, so a crossing that lands
        # exactly on a shared vertex cannot vanish from both segments
        ok[side] = has_roots & (s >= -_PARAM_EPS) & (s <= 1.0 + _PARAM_EPS)
    return xs, ys, hs, ok


def circle_slice_intersections(slc: TerrainSlice, r: float) -> list[IntersectionCandidate]:
    """All intersections of the range circle of radius ``r`` with the slice.

    Every returned point satisfies ``|point| == r`` to within ``1e-6 * r``;
    heights are interpolated linearly between segment endpoint heights.
    Duplicates at shared vertices are removed (1e-9 m tolerance).  An empty
    list is a valid result.
    """
    if r <= 0:
        raise ValueError("radius must be positive")
    xs, ys, hs, ok = _circle_candidates(slc.u, slc.v, slc.h, np.array([r]))
    pts: list[IntersectionCandidate] = []
    for side in range(2):
        for k in np.nonzero(ok[side, :, 0])[0]:
            pts.append(IntersectionCandidate(
                point=(float(xs[side, k, 0]), float(ys[side, k, 0])),
                h=float(hs[side, k, 0])))
    deduped: list[IntersectionCandidate] = []
    for c in pts:
        if not any(math.hypot(c.point[0] - d.point[0], c.point[1] - d.point[1]) < _DEDUPE_EPS
                   for d in deduped):
            deduped.append(c)
    return deduped


# ---------------------------------------------------------------------------
# Visibility
# ---------------------------------------------------------------------------

def visible(slc: TerrainSlice, candidate: IntersectionCandidate) -> bool:
    """True iff the sensor's line of sight to the candidate is unobstructed.

    Casts the ray from the plane origin (the sensor) to the candidate point
    and rejects it when any slice segment intersects the ray strictly before
    the candidate (1e-6 m tolerance along the ray, so the candidate's own
    segment does not occlude itself).
    """
    qx, qy = candidate.point
    L = math.hypot(qx, qy)
    if L == 0.0:
        return True
    ax, ay = slc.u[:-1], slc.v[:-1]
    bx, by = slc.u[1:], slc.v[1:]
    sx, sy = bx - ax, by - ay
    denom = qx * sy - qy * sx
    with np.errstate(divide="ignore", invalid="ignore"):
        t_ray = (ax * sy - ay * sx) / denom
        t_seg = (ax * qy - ay * qx) / denom
    hits = (np.abs(denom) > 0.0) & (t_seg >= 0.0) & (t_seg <= 1.0) \
        & (t_ray >= 0.0) & (t_ray * L < L - _RAY_EPS)
    return not bool(np.any(hits))


def _visibility_thresholds(su: np.ndarray, sv: np.ndarray):
    """Running max of off-nadir vertex angles, outward from the sensor.

    Along any straight segment the off-nadir angle is monotone, so the
    polyline's angular horizon between the sensor's ground point and a
    candidate is attained at slice vertices; a candidate is visible iff its
    own angle exceeds the horizon accumulated strictly before it.
    """
    phi = np.arctan2(np.abs(su), -sv)
    right = np.where(su > 0.0, phi, -np.inf)
    m_right = np.maximum.accumulate(right)
    left = np.where(su < 0.0, phi, -np.inf)
    m_left = np.maximum.accumulate(left[::-1])[::-1]
    return m_right, m_left


def _candidates_visible(su, sv, xs, ys, m_right, m_left):
    """Vectorized visibility of per-segment candidates (shape (2, S, R))."""
    phi_c = np.arctan2(np.abs(xs), -ys)
    seg_idx = np.arange(su.size - 1)
    thresh_right = m_right[seg_idx][None, :, None]
    thresh_left = m_left[seg_idx + 1][None, :, None]
    thresh = np.where(xs > 0.0, thresh_right, thresh_left)
    return thresh <= phi_c + _ANGLE_EPS


def pixel_height(slc: TerrainSlice, r: float):
    """Largest visible intersection height for range ``r``; None in shadow."""
    if r <= 0:
        raise ValueError("radius must be positive")
    best = None
    for cand in circle_slice_intersections(slc, r):
        if visible(slc, cand):
            cand = replace(cand, visible=True)
            if best is None or cand.h > best:
                best = cand.h
    return best


# ---------------------------------------------------------------------------
# Full projection
# ---------------------------------------------------------------------------

def _project_row(grid: SlantRangeGrid, track: OrbitTrack, segs: _GridSegments,
                 up_hint: Vec3, radii: np.ndarray, i: int):
    state = interpolate_sensor_state(track, float(grid.row_time(i)))
    plane = zero_doppler_plane(state, up_hint)
    try:
        slc = _slice_from_segments(plane, segs)
    except NoCoverageError:
        return None
    xs, ys, hs, ok = _circle_candidates(slc.u, slc.v, slc.h, radii)
    m_right, m_left = _visibility_thresholds(slc.u, slc.v)
    vis = _candidates_visible(slc.u, slc.v, xs, ys, m_right, m_left)
    usable = ok & vis
    h_masked = np.where(usable, hs, -np.inf)
    col_max = h_masked.max(axis=(0, 1))
    return np.where(np.isfinite(col_max), col_max, np.nan)


def project_heights(grid: SlantRangeGrid, track: OrbitTrack, dem: DemRaster,
                    up_hint: Vec3, threads: int = 1) -> ProjectionResult:
    """Project DEM heights into every pixel of the slant-range grid.

    For each azimuth row the sensor state is interpolated, the Zero-Doppler
    plane built and the terrain sliced once; each range column keeps the
    largest visible intersection height.  Pixels with no visible terrain
    (shadow, or ranges that miss the slice) are nodata.  Rows whose plane
    misses the DEM entirely become all-nodata and are counted in the result
    summary.

    Rows are independent work units; the output is bit-identical for any
    ``threads`` value.
    """
    if grid.t0 < track.t_start or grid.t_last > track.t_end:
        raise TrackSpanError(
            f"grid rows span [{grid.t0}, {grid.t_last}] outside track "
            f"[{track.t_start}, {track.t_end}]")
    segs = _GridSegments(dem)
    radii = grid.col_range(np.arange(grid.n_rg)).astype(float)
    out = np.full((grid.n_az, grid.n_rg), np.nan)

    def run(i: int):
        return i, _project_row(grid, track, segs, up_hint, radii, i)

    no_coverage = 0
    if threads <= 1:
        results = map(run, range(grid.n_az))
        for i, row in results:
            if row is None:
                no_coverage += 1
            else:
                out[i] = row
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            for i, row in pool.map(run, range(grid.n_az)):
                if row is None:
                    no_coverage += 1
                else:
                    out[i] = row
    return ProjectionResult(raster=HeightRaster(out), no_coverage_rows=no_coverage)
