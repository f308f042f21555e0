"""sarhp: slant-range height projection and SAR/height dataset tooling."""

from .types import (
    DemRaster,
    HeightRaster,
    OrbitTrack,
    SensorStateSample,
    SlantRangeGrid,
    Vec3,
)
from .geometry import (
    IntersectionCandidate,
    PlaneBasis,
    ProjectionResult,
    SliceVertex,
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
from .synth import SceneSpec, gen_scene, oracle_project

__version__ = "0.1.0"

__all__ = [
    "DemRaster", "HeightRaster", "OrbitTrack", "SensorStateSample",
    "SlantRangeGrid", "Vec3",
    "IntersectionCandidate", "PlaneBasis", "ProjectionResult", "SliceVertex",
    "TerrainSlice", "circle_slice_intersections", "interpolate_sensor_state",
    "pixel_height", "project_heights", "segment_plane_intersection",
    "slice_terrain", "visible", "zero_doppler_plane",
    "SceneSpec", "gen_scene", "oracle_project",
    "__version__",
]
