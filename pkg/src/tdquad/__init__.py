"""Tree-decorated quadrangulations: samplers, gluing, peeling and experiments."""
__version__ = "0.1.0"

from .errors import ConfigError, RuntimeFailure, TdquadError  # noqa: E402
from .maps import HalfEdgeMap, bfs_distances, build_map, faces  # noqa: E402
from .trees import PlaneTree, ContourFunction, sample_uniform_tree, contour_distance  # noqa: E402
from .quads import SimpleBoundaryQuad, sample_simple_boundary_quad  # noqa: E402
from .gluing import TreeDecoratedQuad, cut, glue, glue_extended  # noqa: E402

__all__ = [
    "ConfigError", "RuntimeFailure", "TdquadError", "HalfEdgeMap", "bfs_distances", "build_map", "faces",
    "PlaneTree", "ContourFunction", "sample_uniform_tree", "contour_distance", "SimpleBoundaryQuad",
    "sample_simple_boundary_quad", "TreeDecoratedQuad", "cut", "glue", "glue_extended",
]
