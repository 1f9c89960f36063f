"""Grid-aware multi-period flexibility regions as constrained zonotopes.

The package assembles the affine feasible set of a multi-step linearized
branch-flow dispatch problem for a radial network, converts it into a
constrained zonotope, and projects it onto the coupling quantities seen by
the upstream grid. An exact polytope projection baseline is included for
validation and benchmarking.
"""

from .errors import (
    EmptyIntersectionError,
    FlexczError,
    InfeasibleModelError,
    MismatchError,
    NumericalError,
    RowCapError,
    SchemaError,
    UnboundedProblemError,
)
from .sets import (
    ConstrainedZonotope,
    Halfspace,
    HPolytope,
    Hyperplane,
    Zonotope,
    bounding_zonotope,
    contains,
    from_json,
    intersect_halfspace,
    intersect_hyperplane,
    is_empty,
    linear_map,
    support,
    to_json,
)
from .grid import (
    GridCase,
    OperatingPoint,
    VariableIndex,
    build_feasible_set,
    coupling_projection_matrix,
    load_case,
    nominal_operating_point,
    structural_bounds,
)
from .aggregate import (
    ConversionConfig,
    ConversionReport,
    compute_for,
    conditional_for,
    polytope_to_cz,
    update_with_constraints,
)
from .aggregate import hull_2d, polygon_area
from .baseline import fourier_motzkin_project, project_onto, vertices_2d

__version__ = "0.1.0"

__all__ = [
    "ConstrainedZonotope",
    "ConversionConfig",
    "ConversionReport",
    "EmptyIntersectionError",
    "FlexczError",
    "GridCase",
    "HPolytope",
    "Halfspace",
    "Hyperplane",
    "InfeasibleModelError",
    "MismatchError",
    "NumericalError",
    "OperatingPoint",
    "RowCapError",
    "SchemaError",
    "UnboundedProblemError",
    "VariableIndex",
    "Zonotope",
    "bounding_zonotope",
    "build_feasible_set",
    "compute_for",
    "conditional_for",
    "contains",
    "coupling_projection_matrix",
    "fourier_motzkin_project",
    "from_json",
    "hull_2d",
    "intersect_halfspace",
    "intersect_hyperplane",
    "is_empty",
    "linear_map",
    "load_case",
    "nominal_operating_point",
    "polygon_area",
    "polytope_to_cz",
    "project_onto",
    "support",
    "to_json",
    "update_with_constraints",
    "vertices_2d",
    "__version__",
]
