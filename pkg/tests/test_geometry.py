import math

import numpy as np
import pytest

from sarhp.errors import DegenerateBasisError, NoCoverageError, TrackSpanError
from sarhp.geometry import (
    IntersectionCandidate,
    TerrainSlice,
    circle_slice_intersections,
    interpolate_sensor_state,
    pixel_height,
    project_heights,
    segment_plane_intersection,
    slice_terrain,
    visible,
    zero_doppler_plane,
)
from sarhp.types import DemRaster, OrbitTrack, SensorStateSample, SlantRangeGrid, Vec3

from conftest import flat_dem, straight_track


# ---------------------------------------------------------------------------
# interpolate_sensor_state
# ---------------------------------------------------------------------------

class TestOrbitInterpolation:
    def test_exact_at_knots(self):
        track = straight_track()
        for sample in track.samples:
            got = interpolate_sensor_state(track, sample.t)
            assert got.position == sample.position
            assert got.velocity == sample.velocity

    def test_constant_velocity_midpoint(self):
        v = Vec3(3.0, -1.0, 0.5)
        p0 = Vec3(10.0, 20.0, 30.0)
        track = OrbitTrack([
            SensorStateSample(t=0.0, position=p0, velocity=v),
            SensorStateSample(t=4.0, position=Vec3(10 + 12.0, 20 - 4.0, 30 + 2.0), velocity=v),
        ])
        mid = interpolate_sensor_state(track, 2.0)
        assert mid.position.as_array() == pytest.approx(
            p0.as_array() + 2.0 * v.as_array(), abs=1e-12)
        assert mid.velocity.as_array() == pytest.approx(v.as_array(), abs=1e-12)

    def test_circular_orbit_against_analytic_oracle(self, rng):
        # analytic circle: p(t) = R(cos wt, sin wt, 0), v = dp/dt
        radius = 7.0e6
        omega = 2.0 * math.pi / 5400.0
        knots = np.arange(0.0, 101.0, 10.0)
        track = OrbitTrack([
            SensorStateSample(
                t=float(t),
                position=Vec3(radius * math.cos(omega * t), radius * math.sin(omega * t), 0.0),
                velocity=Vec3(-radius * omega * math.sin(omega * t),
                              radius * omega * math.cos(omega * t), 0.0))
            for t in knots])
        for t in rng.uniform(0.0, 100.0, size=50):
            got = interpolate_sensor_state(track, float(t)).position.as_array()
            expect = np.array([radius * math.cos(omega * t), radius * math.sin(omega * t), 0.0])
            assert np.linalg.norm(got - expect) < 1e-3

    def test_outside_span_raises(self):
        track = straight_track(t0=0.0, t1=5.0)
        with pytest.raises(TrackSpanError):
            interpolate_sensor_state(track, -0.001)
        with pytest.raises(TrackSpanError):
            interpolate_sensor_state(track, 5.001)


# ---------------------------------------------------------------------------
# zero_doppler_plane
# ---------------------------------------------------------------------------

class TestZeroDopplerPlane:
    def test_axis_aligned(self):
        state = SensorStateSample(t=0.0, position=Vec3(0, 0, 0), velocity=Vec3(0, 1, 0))
        plane = zero_doppler_plane(state, Vec3(0, 0, 1))
        assert plane.normal == pytest.approx([0, 1, 0])
        assert plane.e_v == pytest.approx([0, 0, 1])
        assert abs(plane.e_u[0]) == pytest.approx(1.0)
        assert plane.e_u[1] == pytest.approx(0.0)
        assert plane.e_u[2] == pytest.approx(0.0)

    def test_construction_identity(self):
        state = SensorStateSample(t=0.0, position=Vec3(5, -2, 7), velocity=Vec3(1, 2, 3))
        plane = zero_doppler_plane(state, Vec3(0, 0, 1))
        for a, b in [(1.0, 0.0), (0.0, 1.0), (-3.2, 4.7)]:
            q = plane.origin + a * plane.e_u + b * plane.e_v
            assert abs(plane.normal @ (q - plane.origin)) < 1e-12

    def test_orthonormality_tolerances(self, rng):
        for _ in range(100):
            vel = Vec3(*rng.normal(size=3))
            up = Vec3(*rng.normal(size=3))
            if vel.norm() < 1e-3 or up.norm() < 1e-3:
                continue
            state = SensorStateSample(t=0.0, position=Vec3(*rng.normal(size=3)), velocity=vel)
            try:
                plane = zero_doppler_plane(state, up)
            except DegenerateBasisError:
                continue
            for e in (plane.normal, plane.e_u, plane.e_v):
                assert abs(np.linalg.norm(e) - 1.0) < 1e-12
            assert abs(plane.normal @ plane.e_u) < 1e-12
            assert abs(plane.normal @ plane.e_v) < 1e-12
            assert abs(plane.e_u @ plane.e_v) < 1e-12

    def test_zero_doppler_residual_property(self, rng):
        # 1e4 random in-plane points must satisfy the Zero-Doppler condition
        state = SensorStateSample(t=0.0, position=Vec3(1234.5, -678.9, 4321.0),
                                  velocity=Vec3(120.0, -40.0, 7.0))
        plane = zero_doppler_plane(state, Vec3(0.3, 0.1, 1.0))
        vel = state.velocity.as_array()
        ab = rng.uniform(-1e5, 1e5, size=(10_000, 2))
        q = plane.origin + ab[:, :1] * plane.e_u + ab[:, 1:] * plane.e_v
        rel = q - plane.origin
        residual = np.abs(rel @ vel) / (np.linalg.norm(vel) * np.linalg.norm(rel, axis=1))
        assert residual.max() < 1e-9

    def test_up_parallel_to_velocity_raises(self):
        state = SensorStateSample(t=0.0, position=Vec3(0, 0, 0), velocity=Vec3(0, 0, 9.0))
        with pytest.raises(DegenerateBasisError):
            zero_doppler_plane(state, Vec3(0, 0, 1))


# ---------------------------------------------------------------------------
# segment_plane_intersection
# ---------------------------------------------------------------------------

class TestSegmentPlane:
    def _yz_plane(self):
        state = SensorStateSample(t=0.0, position=Vec3(0, 0, 0), velocity=Vec3(1, 0, 0))
        return zero_doppler_plane(state, Vec3(0, 0, 1))

    def test_symmetric_crossing(self):
        point = segment_plane_intersection(Vec3(1, 0, 0), Vec3(-1, 0, 0), self._yz_plane())
        assert point is not None
        assert point.as_array() == pytest.approx([0, 0, 0], abs=1e-15)

    def test_endpoint_on_plane(self):
        point = segment_plane_intersection(Vec3(0, 3, 4), Vec3(5, 3, 4), self._yz_plane())
        assert point is not None
        assert point.as_array() == pytest.approx([0, 3, 4], abs=1e-15)

    def test_parallel_off_plane_is_none(self):
        assert segment_plane_intersection(Vec3(2, 0, 0), Vec3(2, 5, 0), self._yz_plane()) is None

    def test_crossing_outside_segment_is_none(self):
        assert segment_plane_intersection(Vec3(1, 0, 0), Vec3(3, 0, 0), self._yz_plane()) is None
        assert segment_plane_intersection(Vec3(-3, 0, 0), Vec3(-1, 0, 0), self._yz_plane()) is None


# ---------------------------------------------------------------------------
# slice_terrain
# ---------------------------------------------------------------------------

def _plane_over(dem, x=0.0, y=16.0, z=5000.0):
    state = SensorStateSample(t=0.0, position=Vec3(x, y, z), velocity=Vec3(0, 100.0, 0))
    return zero_doppler_plane(state, Vec3(0, 0, 1))


class TestSliceTerrain:
    def test_flat_dem_constant_height(self):
        dem = flat_dem(height=50.0)
        slc = slice_terrain(_plane_over(dem, x=-100.0, y=16.5), dem)
        assert np.allclose(slc.h, 50.0)
        assert np.all(np.diff(slc.u) > 0)

    def test_row_aligned_plane_reproduces_row(self, rng):
        heights = rng.uniform(0.0, 30.0, size=(12, 17))
        dem = DemRaster(origin=Vec3(0.5, 0.5, 0.0), cell=1.0, heights=heights)
        row = 4
        y_row = 0.5 + row * 1.0
        plane = _plane_over(dem, x=-50.0, y=y_row)
        slc = slice_terrain(plane, dem)
        # oracle: the DEM row extracted directly at cell centers
        assert len(slc) == 17
        assert np.allclose(np.sort(slc.h), np.sort(heights[row]), atol=1e-12)
        expected_u = dem.x_coords() - (-50.0)
        assert np.allclose(slc.u, expected_u, atol=1e-9)
        assert np.allclose(slc.h, heights[row], atol=1e-12)

    def test_tilted_ramp_heights_linear(self):
        # analytic oracle: h(x, y) = a x + b y + c sampled along the cut line
        a, b, c = 0.25, -0.125, 12.0
        n = 24
        xs = 0.5 + np.arange(n)
        ys = 0.5 + np.arange(n)
        heights = a * xs[None, :] + b * ys[:, None] + c
        dem = DemRaster(origin=Vec3(0.5, 0.5, 0.0), cell=1.0, heights=heights)
        sensor_x, sensor_y = -77.0, 9.7
        plane = _plane_over(dem, x=sensor_x, y=sensor_y)
        slc = slice_terrain(plane, dem)
        expected = a * (sensor_x + slc.u) + b * sensor_y + c
        assert np.allclose(slc.h, expected, atol=1e-9)

    def test_vertices_lie_on_plane(self, rng):
        heights = rng.uniform(0.0, 40.0, size=(20, 20))
        dem = DemRaster(origin=Vec3(0.5, 0.5, 0.0), cell=1.0, heights=heights)
        state = SensorStateSample(t=0.0, position=Vec3(-100.0, 10.3, 800.0),
                                  velocity=Vec3(0.5, 100.0, -0.2))
        plane = zero_doppler_plane(state, Vec3(0, 0, 1))
        slc = slice_terrain(plane, dem)
        # back-projected world points must satisfy the plane equation and
        # reproduce the carried height
        world = plane.to_world(slc.u, slc.v)
        assert np.abs((world - plane.origin) @ plane.normal).max() < 1e-6
        assert np.allclose(world[:, 2], slc.h, atol=1e-6)

    def test_nodata_segments_skipped(self):
        heights = np.full((8, 8), 10.0)
        heights[3:5, :] = np.nan
        dem = DemRaster(origin=Vec3(0.5, 0.5, 0.0), cell=1.0, heights=heights)
        slc = slice_terrain(_plane_over(dem, x=-30.0, y=1.5), dem)
        assert np.allclose(slc.h, 10.0)

    def test_no_coverage_raises(self):
        dem = flat_dem(height=0.0, n_rows=4, n_cols=4)
        with pytest.raises(NoCoverageError):
            slice_terrain(_plane_over(dem, y=1e6), dem)


# ---------------------------------------------------------------------------
# circle_slice_intersections
# ---------------------------------------------------------------------------

def _bare_slice(u, v, h=None):
    plane = _plane_over(flat_dem(), x=0.0, y=0.0)
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    h = np.zeros_like(u) if h is None else np.asarray(h, dtype=float)
    return TerrainSlice(u, v, h, plane)


class TestCircleIntersections:
    def test_vertical_chord_hand_case(self):
        # segment (3,-4)->(3,4) against r=5: D=24, disc=1024, hits at (3,-4),(3,4)
        slc = _bare_slice([3.0, 3.0], [-4.0, 4.0], [0.0, 8.0])
        cands = circle_slice_intersections(slc, 5.0)
        pts = sorted(c.point for c in cands)
        assert pts == [pytest.approx((3.0, -4.0)), pytest.approx((3.0, 4.0))]
        for c in cands:
            assert math.hypot(*c.point) == pytest.approx(5.0, abs=1e-6 * 5.0)
        heights = sorted(c.h for c in cands)
        assert heights == [pytest.approx(0.0), pytest.approx(8.0)]

    def test_tangent(self):
        slc = _bare_slice([5.0, 5.0], [-1.0, 1.0])
        cands = circle_slice_intersections(slc, 5.0)
        assert len(cands) == 1
        assert cands[0].point == pytest.approx((5.0, 0.0), abs=1e-9)

    def test_no_intersection(self):
        slc = _bare_slice([20.0, 20.0], [-1.0, 1.0])
        assert circle_slice_intersections(slc, 5.0) == []

    def test_shared_vertex_deduplicated(self):
        # circle passes exactly through the shared vertex of two segments
        slc = _bare_slice([3.0, 5.0, 7.0], [-4.0, 0.0, -4.0], [0.0, 2.0, 0.0])
        cands = circle_slice_intersections(slc, 5.0)
        on_vertex = [c for c in cands if c.point == pytest.approx((5.0, 0.0), abs=1e-9)]
        assert len(on_vertex) == 1

    def test_radius_residual_randomized(self, rng):
        # every reported point must sit on its circle; presence/absence must
        # match a dense root-finding oracle on |p(t)|^2 - r^2
        for _ in range(500):
            u = np.sort(rng.uniform(-50.0, 50.0, size=4))
            v = rng.uniform(-50.0, -1.0, size=4)
            slc = _bare_slice(u, v, rng.uniform(0.0, 30.0, size=4))
            r = float(rng.uniform(1.0, 80.0))
            cands = circle_slice_intersections(slc, r)
            for c in cands:
                assert abs(math.hypot(*c.point) - r) <= 1e-6 * r
            t = np.linspace(0.0, 1.0, 513)
            found = False
            for k in range(3):
                px = u[k] + (u[k + 1] - u[k]) * t
                py = v[k] + (v[k + 1] - v[k]) * t
                gv = px * px + py * py - r * r
                if np.any(gv == 0.0) or np.any(np.sign(gv[:-1]) != np.sign(gv[1:])):
                    found = True
            if found:
                assert cands, f"oracle found a crossing but none was reported (r={r})"


# ---------------------------------------------------------------------------
# visible / pixel_height
# ---------------------------------------------------------------------------

def _box_slice(depth=1000.0, wall_u=200.0, far_u=220.0, height=30.0, ramp=1.0):
    """Ground at v=-depth with one box; facades are one-`ramp` wide ramps."""
    u = [1.0, wall_u - ramp, wall_u, far_u, far_u + ramp, 400.0]
    v = [-depth, -depth, -depth + height, -depth + height, -depth, -depth]
    h = [0.0, 0.0, height, height, 0.0, 0.0]
    return _bare_slice(u, v, h)


def _ray_march_visible(slc, point, samples=20000):
    """Dense ray-march oracle: ray dips to/under the terrain => occluded."""
    t = np.linspace(1e-9, 1.0, samples, endpoint=False)
    px = point[0] * t
    py = point[1] * t
    terrain_v = np.interp(px, slc.u, slc.v, left=-np.inf, right=-np.inf)
    ray_len = math.hypot(*point)
    before = (1.0 - t) * ray_len > 1e-6
    inside = (px >= slc.u[0]) & (px <= slc.u[-1])
    return not np.any(before & inside & (py <= terrain_v))


class TestVisibility:
    def test_flat_terrain_all_visible(self):
        slc = _bare_slice(np.linspace(10, 400, 40), np.full(40, -1000.0))
        for r in (1005.0, 1020.0, 1070.0):
            for cand in circle_slice_intersections(slc, r):
                assert visible(slc, cand)

    def test_shadow_behind_box_matches_analytic_length(self):
        depth, wall_u, far_u, height = 1000.0, 200.0, 220.0, 30.0
        slc = _box_slice(depth, wall_u, far_u, height)
        # ray grazing the far roof edge hits the ground H*tan(theta) behind it,
        # with theta the local incidence at the edge
        tan_theta = far_u / (depth - height)
        shadow_len = height * tan_theta
        for frac in (0.2, 0.5, 0.9):
            ug = far_u + 1.0 + frac * (shadow_len - 1.0)
            cand = IntersectionCandidate(point=(ug, -depth), h=0.0)
            assert not visible(slc, cand), f"ground at {ug} should be shadowed"
            assert not _ray_march_visible(slc, cand.point)
        for margin in (2.0, 10.0):
            ug = far_u * depth / (depth - height) + margin
            cand = IntersectionCandidate(point=(ug, -depth), h=0.0)
            assert visible(slc, cand)
            assert _ray_march_visible(slc, cand.point)

    def test_sensor_facing_roof_edge_visible(self):
        slc = _box_slice()
        cand = IntersectionCandidate(point=(200.0, -970.0), h=30.0)
        assert visible(slc, cand)

    def test_agrees_with_ray_march_oracle_on_random_terrain(self, rng):
        for _ in range(40):
            n = 30
            u = np.sort(rng.uniform(5.0, 500.0, size=n))
            v = -1000.0 + np.concatenate([[0.0], rng.uniform(0.0, 60.0, size=n - 1)])
            slc = _bare_slice(u, v)
            r = float(rng.uniform(1002.0, 1100.0))
            for cand in circle_slice_intersections(slc, r):
                assert visible(slc, cand) == _ray_march_visible(slc, cand.point), \
                    f"disagreement at {cand.point}, r={r}"


class TestPixelHeight:
    def test_flat_slice(self):
        slc = _bare_slice(np.linspace(10, 400, 40), np.full(40, -1000.0),
                          np.full(40, 50.0))
        assert pixel_height(slc, 1030.0) == pytest.approx(50.0)

    def test_layover_takes_max_height(self):
        # terraced slice engineered so one circle crosses ground (h=10) and a
        # visible upper plateau front (h=30) at the same range
        slc = _bare_slice(
            [1.0, 50.0, 51.0, 120.0, 121.0, 400.0],
            [-1000.0, -1000.0, -980.0, -980.0, -1000.0, -1000.0],
            [10.0, 10.0, 30.0, 30.0, 10.0, 10.0])
        r = math.hypot(60.0, 980.0)
        cands = circle_slice_intersections(slc, r)
        vis_heights = sorted(c.h for c in cands if visible(slc, c))
        assert 30.0 in vis_heights
        assert min(vis_heights) < 30.0
        assert pixel_height(slc, r) == pytest.approx(30.0)

    def test_occluded_candidate_never_changes_result(self):
        # deep foreground valley, a roofline, then a shadowed valley floor:
        # the same circle crosses visible foreground and shadowed ground
        r = math.hypot(166.0, 1000.0)
        base_u = [1.0, 150.0, 151.0, 160.0, 161.0]
        base_v = [-1010.0, -1010.0, -940.0, -940.0, -1000.0]
        base_h = [5.0, 5.0, 65.0, 65.0, 0.0]
        base = _bare_slice(base_u, base_v, base_h)
        before = pixel_height(base, r)
        assert before is not None
        # extend with the valley floor, fully inside the roof's shadow
        shadowed = _bare_slice(base_u + [400.0], base_v + [-1000.0], base_h + [0.0])
        extra = [c for c in circle_slice_intersections(shadowed, r)
                 if c.point[0] > 161.0]
        assert extra and all(not visible(shadowed, c) for c in extra)
        assert not _ray_march_visible(shadowed, extra[0].point)
        assert pixel_height(shadowed, r) == pytest.approx(before)

    def test_visible_higher_candidate_sets_result(self):
        # appending a circle-crossing tower beyond the shadow zone must lift
        # the pixel to exactly the tower candidate's height
        r = math.hypot(166.0, 1000.0)
        u = [1.0, 150.0, 151.0, 160.0, 161.0, 299.0, 300.0, 301.0, 400.0]
        v = [-1010.0, -1010.0, -940.0, -940.0, -1000.0, -1000.0, -950.0, -1000.0, -1000.0]
        h = [5.0, 5.0, 65.0, 65.0, 0.0, 0.0, 80.0, 0.0, 0.0]
        slc = _bare_slice(u, v, h)
        base = pixel_height(_bare_slice(u[:5], v[:5], h[:5]), r)
        tower = [c for c in circle_slice_intersections(slc, r)
                 if 290.0 < c.point[0] < 310.0 and visible(slc, c)]
        assert tower
        top = max(c.h for c in tower)
        assert top > base
        assert pixel_height(slc, r) == pytest.approx(top)

    def test_none_when_circle_misses(self):
        slc = _bare_slice([10.0, 40.0], [-1000.0, -1000.0])
        assert pixel_height(slc, 500.0) is None

    def test_matches_dense_sampling_brute_force(self, rng):
        # independent oracle: dense sampling of |p(t)| - r along the polyline,
        # sign-change crossings refined linearly, ray-marched visibility,
        # max height over surviving crossings
        for trial in range(25):
            n = 12
            u = np.sort(rng.uniform(20.0, 300.0, size=n))
            v = -1000.0 + np.concatenate([[0.0], rng.uniform(0.0, 50.0, size=n - 1)])
            h = rng.uniform(0.0, 40.0, size=n)
            slc = _bare_slice(u, v, h)
            r = float(rng.uniform(1005.0, 1050.0))
            t = np.linspace(0.0, 1.0, 4001)
            best = None
            for k in range(n - 1):
                px = u[k] + (u[k + 1] - u[k]) * t
                py = v[k] + (v[k + 1] - v[k]) * t
                g = np.hypot(px, py) - r
                crossings = list(np.nonzero(np.sign(g[:-1]) != np.sign(g[1:]))[0]) \
                    + list(np.nonzero(g == 0.0)[0])
                for idx in crossings:
                    if g[idx] == 0.0:
                        t_star = t[idx]
                    else:
                        frac = g[idx] / (g[idx] - g[idx + 1])
                        t_star = t[idx] + frac * (t[idx + 1] - t[idx])
                    cx = u[k] + (u[k + 1] - u[k]) * t_star
                    cy = v[k] + (v[k + 1] - v[k]) * t_star
                    ch = h[k] + (h[k + 1] - h[k]) * t_star
                    if _ray_march_visible(slc, (cx, cy)):
                        if best is None or ch > best:
                            best = float(ch)
            got = pixel_height(slc, r)
            if best is None:
                assert got is None, f"trial {trial}: expected shadow/miss, got {got}"
            else:
                assert got is not None, f"trial {trial}: expected ~{best}, got None"
                assert abs(got - best) < 0.05, f"trial {trial}: {got} vs oracle {best}"


# ---------------------------------------------------------------------------
# project_heights
# ---------------------------------------------------------------------------

def _grid_over(track, dem, n_az=16, n_rg=32, dr=1.0):
    """Grid whose rows sweep the DEM's y extent and whose ranges center on it.

    Assumes a +y track (the fixture's convention).
    """
    first = track.samples[0]
    speed = first.velocity.y
    y_lo, y_hi = dem.y_coords()[1], dem.y_coords()[-2]
    t_lo = first.t + (y_lo - first.position.y) / speed
    t_hi = first.t + (y_hi - first.position.y) / speed
    dt = (t_hi - t_lo) / max(n_az - 1, 1)
    depth = first.position.z
    x_min, x_max = dem.x_coords()[0], dem.x_coords()[-1]
    u_mid = 0.5 * (x_min + x_max) - first.position.x
    r_mid = math.hypot(u_mid, depth)
    return SlantRangeGrid(t0=t_lo, dt=dt, r_near=r_mid - n_rg // 2 * dr,
                          dr=dr, n_az=n_az, n_rg=n_rg)


class TestProjectHeights:
    def test_flat_dem_projects_constant(self):
        dem = flat_dem(height=25.0, n_rows=64, n_cols=64)
        track = straight_track(x=-3000.0, y0=0.0, z=5000.0, speed=100.0, t0=0.0, t1=1.0, step=0.1)
        grid = _grid_over(track, dem, n_az=32, n_rg=48)
        result = project_heights(grid, track, dem, Vec3(0, 0, 1))
        vals = result.raster.heights
        valid = np.isfinite(vals)
        assert valid.any()
        assert np.abs(vals[valid] - 25.0).max() < 1e-9

    def test_thread_count_does_not_change_output(self):
        rng = np.random.default_rng(5)
        heights = rng.uniform(0.0, 30.0, size=(48, 48))
        dem = DemRaster(origin=Vec3(0.5, 0.5, 0.0), cell=1.0, heights=heights)
        track = straight_track(x=-2000.0, y0=0.0, z=4000.0, speed=100.0, t0=0.0, t1=1.0, step=0.1)
        grid = _grid_over(track, dem, n_az=24, n_rg=32)
        single = project_heights(grid, track, dem, Vec3(0, 0, 1), threads=1)
        multi = project_heights(grid, track, dem, Vec3(0, 0, 1), threads=4)
        assert np.array_equal(single.raster.heights, multi.raster.heights, equal_nan=True)

    def test_matches_per_pixel_scalar_path(self):
        rng = np.random.default_rng(9)
        heights = np.zeros((40, 40))
        heights[10:20, 12:22] = 18.0
        heights += rng.uniform(0.0, 0.5, size=heights.shape)
        dem = DemRaster(origin=Vec3(0.5, 0.5, 0.0), cell=1.0, heights=heights)
        track = straight_track(x=-2500.0, y0=0.0, z=4500.0, speed=100.0, t0=0.0, t1=1.0, step=0.1)
        grid = _grid_over(track, dem, n_az=12, n_rg=24)
        result = project_heights(grid, track, dem, Vec3(0, 0, 1)).raster.heights
        for i in range(grid.n_az):
            state = interpolate_sensor_state(track, float(grid.row_time(i)))
            plane = zero_doppler_plane(state, Vec3(0, 0, 1))
            slc = slice_terrain(plane, dem)
            for j in range(grid.n_rg):
                expected = pixel_height(slc, float(grid.col_range(j)))
                if expected is None:
                    assert np.isnan(result[i, j])
                else:
                    assert result[i, j] == pytest.approx(expected, abs=1e-9)

    def test_rows_outside_coverage_counted(self):
        dem = flat_dem(height=0.0, n_rows=8, n_cols=32)
        track = straight_track(x=-2000.0, y0=-200.0, z=4000.0, speed=100.0,
                               t0=0.0, t1=8.0, step=0.5)
        grid = SlantRangeGrid(t0=0.0, dt=0.1, r_near=4400.0, dr=1.0, n_az=40, n_rg=16)
        result = project_heights(grid, track, dem, Vec3(0, 0, 1))
        assert result.no_coverage_rows > 0
        nan_rows = np.all(np.isnan(result.raster.heights), axis=1)
        assert nan_rows.sum() >= result.no_coverage_rows

    def test_row_time_outside_track_raises(self):
        dem = flat_dem()
        track = straight_track(t0=0.0, t1=1.0, step=0.25)
        grid = SlantRangeGrid(t0=0.5, dt=1.0, r_near=5000.0, dr=1.0, n_az=3, n_rg=4)
        with pytest.raises(TrackSpanError):
            project_heights(grid, track, dem, Vec3(0, 0, 1))
