"""Grid-free Monte Carlo solver for screened Poisson Dirichlet problems
with differentiable boundary geometry and data."""

from .data import ConstantData, DirichletData, MappedData, RestrictedData
from .differential import (
    CoupledEstimate,
    diff_wos,
    estimate_diff_grid,
    fd_reference_gradient,
)
from .errors import (
    ConfigError,
    DiffWosError,
    DomainError,
    NumericalError,
    SingularityError,
    StaleQueryError,
    UnsupportedBoundaryError,
)
from .fields import ConstantField, GridLookupField, LinearField, ZeroField, make_field
from .geometry import (
    BezierChain,
    Boundary,
    BoundaryQuery,
    ImplicitMonopoles,
    PolylineBoundary,
    SphereBoundary,
    SpherePrimitive,
    distance_to_boundary,
    implicit_step,
)
from .functional import (
    AllMask,
    DiskMask,
    FunctionalSpec,
    GridMask,
    ProductEstimatorConfig,
    RectMask,
    estimate_functional,
    functional_gradient,
    implicit_boundary_band_gradient,
    length_regularizer_gradient,
    make_mask,
    product_estimate,
)
from .gridfield import GridField, read_gridfield, write_gridfield
from .harness import (
    AblationLevel,
    AblationReport,
    EqualTimeReport,
    default_ablation_scene,
    equal_time_comparison,
    rmse_sweep,
)
from .optimizer import (
    AdamState,
    IterationRecord,
    OptimizerConfig,
    optimize,
    regularizer_decay,
    step,
    wpp_schedule,
    write_iteration_log,
)
from .rng import RngStream
from .scene import Scene
from .solver import (
    BVPSpec,
    FieldEstimate,
    SolverConfig,
    WalkStats,
    estimate_grid,
    normal_derivative,
    wos_mean,
    wos_solve,
    wos_walk,
)

__version__ = "0.1.0"
