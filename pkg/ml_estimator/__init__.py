from .grid import SearchGrid, snap_to_grid
from .search import (
    MlResult,
    MlSearchError,
    SteeringCache,
    ml_grid_search,
    ml_objective,
    write_surface_csv,
)

__all__ = [
    "MlResult",
    "MlSearchError",
    "SearchGrid",
    "SteeringCache",
    "ml_grid_search",
    "ml_objective",
    "snap_to_grid",
    "write_surface_csv",
]
