from .positions import (
    array_path_differences,
    irs_path_differences,
    irs_positions,
    pairwise_distances,
    path_diff_at,
    path_diff_rt,
    rt_path_table,
    upa_positions,
)
from .schema import (
    SPEED_OF_LIGHT,
    DoA,
    GeometryError,
    SceneGeometry,
    far_field_distance,
    geometry_hash,
)

__all__ = [
    "SPEED_OF_LIGHT",
    "DoA",
    "GeometryError",
    "SceneGeometry",
    "array_path_differences",
    "far_field_distance",
    "geometry_hash",
    "irs_path_differences",
    "irs_positions",
    "pairwise_distances",
    "path_diff_at",
    "path_diff_rt",
    "rt_path_table",
    "upa_positions",
]
